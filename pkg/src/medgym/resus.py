"""Emergency-care environment: a minimal deterministic patient-dynamics engine
behind the 47-dim time-decay observation interface.

The patient model is an invented effect-table state machine, not a
physiological simulation: each scenario file declares an initial state and,
per action, field assignments, clamped vital deltas, device attachments and
emitted events.  Examination actions are hard-wired, read-only, and emit the
events describing the current state; vital-sign channels only populate after
the corresponding device is attached and the monitor is viewed.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import EpisodeError, FormatError, ValidationError
from .events import (
    N_ACTIONS,
    ActionId,
    EventId,
    EventTrace,
    MeasurementId,
    encode_observation,
)

AIRWAYS = ("clear", "vomit", "blood", "tongue")
CONSCIOUSNESS = ("A", "V", "U")
DEVICES = ("sats_probe", "bp_cuff", "iv_access", "bag_valve_mask")

# field -> (lo, hi) clamp applied to every delta
VITAL_BOUNDS = {
    "breathing_rate": (0.0, 250.0),
    "heart_rate": (0.0, 250.0),
    "spo2": (0.0, 100.0),
    "map": (0.0, 200.0),
}

# read-only actions: never mutate PatientState, may append trace events
PURE_ACTIONS = frozenset(
    {
        ActionId.DoNothing,
        ActionId.CheckSignsOfLife,
        ActionId.CheckRhythm,
        ActionId.ExamineAirway,
        ActionId.ExamineBreathing,
        ActionId.ExamineCirculation,
        ActionId.ExamineDisability,
        ActionId.ExamineExposure,
        ActionId.ExamineResponse,
        ActionId.ViewMonitor,
    }
)

DEVICE_ACTIONS = {
    ActionId.UseSatsProbe: "sats_probe",
    ActionId.UseBloodPressureCuff: "bp_cuff",
    ActionId.UseVenflonIVCatheter: "iv_access",
    ActionId.UseBagValveMask: "bag_valve_mask",
}


@dataclass
class PatientState:
    airway: str = "clear"
    breathing_rate: float = 14.0
    spo2: float = 97.0
    map: float = 80.0
    heart_rate: float = 80.0
    consciousness: str = "A"
    devices: set[str] = field(default_factory=set)

    def validate(self) -> None:
        if self.airway not in AIRWAYS:
            raise ValidationError(f"unknown airway state: {self.airway}")
        if self.consciousness not in CONSCIOUSNESS:
            raise ValidationError(f"unknown consciousness: {self.consciousness}")
        for name, (lo, hi) in VITAL_BOUNDS.items():
            value = getattr(self, name)
            if not lo <= value <= hi:
                raise ValidationError(f"{name}={value} outside [{lo}, {hi}]")
        for dev in self.devices:
            if dev not in DEVICES:
                raise ValidationError(f"unknown device: {dev}")

    def copy(self) -> "PatientState":
        return replace(self, devices=set(self.devices))


def success(p: PatientState) -> bool:
    """Stabilization predicate; all thresholds inclusive."""
    return p.airway == "clear" and p.spo2 >= 88.0 and p.breathing_rate >= 8.0 and p.map >= 60.0


@dataclass
class Effect:
    """One effect-table row: applied when its action is taken (and the
    required device, if any, is attached)."""

    sets: dict[str, object] = field(default_factory=dict)
    deltas: dict[str, float] = field(default_factory=dict)
    add_devices: list[str] = field(default_factory=list)
    emits: list[EventId] = field(default_factory=list)
    requires_device: str | None = None

    def is_empty(self) -> bool:
        return not (self.sets or self.deltas or self.add_devices or self.emits)


@dataclass
class ScenarioSpec:
    name: str
    initial: PatientState
    effects: dict[ActionId, Effect] = field(default_factory=dict)
    drift: dict[str, float] = field(default_factory=dict)
    # shortest known action sequence reaching the success predicate
    solution: list[ActionId] = field(default_factory=list)

    def __post_init__(self) -> None:
        for action in ActionId:
            self.effects.setdefault(action, Effect())

    def validate(self) -> None:
        self.initial.validate()
        for action, eff in self.effects.items():
            if action in PURE_ACTIONS and not eff.is_empty():
                raise ValidationError(f"effect declared for read-only action {action.name}")
            for name in list(eff.sets) + list(eff.deltas):
                if name not in ("airway", "consciousness") and name not in VITAL_BOUNDS:
                    raise ValidationError(f"unknown patient field: {name}")
            if eff.requires_device is not None and eff.requires_device not in DEVICES:
                raise ValidationError(f"unknown device: {eff.requires_device}")
            for dev in eff.add_devices:
                if dev not in DEVICES:
                    raise ValidationError(f"unknown device: {dev}")
        for name in self.drift:
            if name not in VITAL_BOUNDS:
                raise ValidationError(f"drift on unknown vital: {name}")


def _clamped(state: PatientState, name: str, delta: float) -> float:
    lo, hi = VITAL_BOUNDS[name]
    return min(hi, max(lo, getattr(state, name) + delta))


def _apply_effect(state: PatientState, eff: Effect) -> None:
    for name, value in eff.sets.items():
        setattr(state, name, value)
    for name, delta in eff.deltas.items():
        setattr(state, name, _clamped(state, name, delta))
    state.devices.update(eff.add_devices)


@dataclass(frozen=True)
class ResusConfig:
    step_duration: float = 2.0  # seconds of simulated time per action
    max_steps: int = 100
    success_reward: float = 1.0
    failure_reward: float = -0.2
    step_penalty: float = -0.005

    def __post_init__(self) -> None:
        if self.step_duration <= 0 or self.max_steps < 1:
            raise ValidationError("step_duration must be positive, max_steps >= 1")


class ResusEnv:
    """One resuscitation episode over an immutable ScenarioSpec."""

    def __init__(self, scenario: ScenarioSpec, config: ResusConfig | None = None):
        scenario.validate()
        self.scenario = scenario
        self.config = config or ResusConfig()
        self.patient: PatientState | None = None
        self.trace: EventTrace | None = None
        self.steps = 0
        self.done = True
        self.truncated = False

    def reset(self, seed: int | None = None) -> np.ndarray:
        # dynamics are deterministic; seed accepted for API symmetry
        self.patient = self.scenario.initial.copy()
        self.trace = EventTrace()
        self.steps = 0
        self.done = False
        self.truncated = False
        return encode_observation(self.trace)

    # --- built-in examination findings ------------------------------------

    def _examine(self, action: ActionId) -> None:
        p, trace = self.patient, self.trace
        if action == ActionId.ExamineAirway:
            trace.record_event(getattr(EventId, "Airway" + p.airway.capitalize()))
        elif action == ActionId.ExamineResponse:
            trace.record_event(
                {"A": EventId.ResponseVerbal, "V": EventId.ResponseGroan, "U": EventId.ResponseNone}[
                    p.consciousness
                ]
            )
        elif action == ActionId.ExamineDisability:
            trace.record_event(getattr(EventId, "AVPU_" + p.consciousness))
            trace.record_event(EventId.PupilsNormal)
        elif action == ActionId.ExamineBreathing:
            if p.breathing_rate <= 0:
                trace.record_event(EventId.BreathingNone)
            elif p.airway == "tongue":
                trace.record_event(EventId.BreathingSnoring)
            else:
                trace.record_event(EventId.BreathingEqualChestExpansion)
        elif action == ActionId.ExamineCirculation:
            trace.record_event(
                EventId.RadialPulsePalpable if p.map >= 50 else EventId.RadialPulseNonPalpable
            )
            trace.record_event(EventId.HeartSoundsNormal)
        elif action == ActionId.ExamineExposure:
            if p.map < 55:
                trace.record_event(EventId.ExposurePeripherallyShutdown)
        elif action == ActionId.CheckSignsOfLife:
            if p.breathing_rate <= 0:
                trace.record_event(EventId.BreathingNone)
            trace.record_event(
                EventId.RadialPulsePalpable if p.map >= 50 else EventId.RadialPulseNonPalpable
            )
        elif action == ActionId.CheckRhythm:
            trace.record_event(EventId.HeartRhythm0)
        elif action == ActionId.ViewMonitor:
            # vital channels are gated behind their devices
            if "sats_probe" in p.devices:
                trace.record_measurement(MeasurementId.MeasuredSats, p.spo2)
                trace.record_measurement(MeasurementId.MeasuredHeartRate, p.heart_rate)
            if "bp_cuff" in p.devices:
                trace.record_measurement(MeasurementId.MeasuredMAP, p.map)

    def step(self, action) -> tuple[np.ndarray, float, bool]:
        if self.patient is None or self.trace is None:
            raise EpisodeError("no active episode: call reset first")
        if self.done:
            raise EpisodeError("episode already terminated")
        try:
            act = ActionId(int(action))
        except (ValueError, TypeError):
            raise EpisodeError(f"action must be an integer in [0, {N_ACTIONS - 1}]")

        self.trace.advance(self.config.step_duration)

        if act in PURE_ACTIONS:
            before = self.patient.copy()
            self._examine(act)
            assert self.patient == before, "read-only action mutated the patient"
        else:
            if act in DEVICE_ACTIONS:
                self.patient.devices.add(DEVICE_ACTIONS[act])
            eff = self.scenario.effects[act]
            if eff.requires_device is None or eff.requires_device in self.patient.devices:
                _apply_effect(self.patient, eff)
                for ev in eff.emits:
                    self.trace.record_event(ev)
            # physiology drifts only while the agent intervenes; examinations
            # are instantaneous by contract
            for name, delta in self.scenario.drift.items():
                setattr(self.patient, name, _clamped(self.patient, name, delta))

        self.steps += 1
        finished = act == ActionId.Finish
        self.truncated = not finished and self.steps >= self.config.max_steps
        self.done = finished or self.truncated
        if finished:
            reward = self.config.success_reward if success(self.patient) else self.config.failure_reward
        else:
            reward = self.config.step_penalty
        return encode_observation(self.trace), float(reward), self.done


# --- scenario text format --------------------------------------------------
# Line-oriented, human editable:
#
#   name: tongue
#   [initial]
#   airway = tongue
#   breathing_rate = 4
#   devices =
#   [effects]
#   PerformJawThrust: airway=clear breathing_rate=14 spo2+=12
#   GiveFluids: requires=iv_access map+=20
#   UseMonitorPads: emit=HeartRhythm0
#   [drift]
#   spo2 -= 0.2
#   [solution]
#   ExamineAirway PerformJawThrust Finish
#
# '#' starts a comment.  Effect tokens: field=value, field+=x, field-=x,
# emit=EventName, device=DeviceName, requires=DeviceName.

_NUMERIC_FIELDS = set(VITAL_BOUNDS)


def _parse_effect(tokens: list[str], where: str) -> Effect:
    eff = Effect()
    for tok in tokens:
        if "+=" in tok:
            name, _, val = tok.partition("+=")
            sign = 1.0
        elif "-=" in tok:
            name, _, val = tok.partition("-=")
            sign = -1.0
        elif "=" in tok:
            name, _, val = tok.partition("=")
            sign = None
        else:
            raise FormatError(f"{where}: unparseable token {tok!r}")
        name = name.strip()
        val = val.strip()
        if sign is not None:
            if name not in _NUMERIC_FIELDS:
                raise FormatError(f"{where}: delta on non-numeric field {name!r}")
            eff.deltas[name] = eff.deltas.get(name, 0.0) + sign * float(val)
        elif name == "emit":
            try:
                eff.emits.append(EventId[val])
            except KeyError:
                raise FormatError(f"{where}: unknown event {val!r}")
        elif name == "device":
            eff.add_devices.append(val)
        elif name == "requires":
            eff.requires_device = val
        elif name in _NUMERIC_FIELDS:
            eff.sets[name] = float(val)
        elif name in ("airway", "consciousness"):
            eff.sets[name] = val
        else:
            raise FormatError(f"{where}: unknown field {name!r}")
    return eff


def load_scenario(source) -> ScenarioSpec:
    text = Path(source).read_text()
    return parse_scenario(text, str(source))


def parse_scenario(text: str, where: str = "<string>") -> ScenarioSpec:
    name = ""
    section = None
    initial_fields: dict[str, object] = {}
    effects: dict[ActionId, Effect] = {}
    drift: dict[str, float] = {}
    solution: list[ActionId] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        ctx = f"{where}:{lineno}"
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in ("initial", "effects", "drift", "solution"):
                raise FormatError(f"{ctx}: unknown section [{section}]")
            continue
        if section is None:
            key, sep, val = line.partition(":")
            if key.strip() != "name" or not sep:
                raise FormatError(f"{ctx}: expected 'name:' before the first section")
            name = val.strip()
        elif section == "initial":
            key, sep, val = line.partition("=")
            if not sep:
                raise FormatError(f"{ctx}: expected 'field = value'")
            key, val = key.strip(), val.strip()
            if key == "devices":
                initial_fields["devices"] = set(val.split())
            elif key in _NUMERIC_FIELDS:
                initial_fields[key] = float(val)
            elif key in ("airway", "consciousness"):
                initial_fields[key] = val
            else:
                raise FormatError(f"{ctx}: unknown initial field {key!r}")
        elif section == "effects":
            action_name, sep, rest = line.partition(":")
            if not sep:
                raise FormatError(f"{ctx}: expected 'ActionName: effects'")
            try:
                action = ActionId[action_name.strip()]
            except KeyError:
                raise FormatError(f"{ctx}: unknown action {action_name.strip()!r}")
            effects[action] = _parse_effect(rest.split(), ctx)
        elif section == "drift":
            eff = _parse_effect([line.replace(" ", "")], ctx)
            drift.update(eff.deltas)
        elif section == "solution":
            for tok in line.split():
                try:
                    solution.append(ActionId[tok])
                except KeyError:
                    raise FormatError(f"{ctx}: unknown action {tok!r}")

    if not name:
        raise FormatError(f"{where}: missing 'name:' header")
    spec = ScenarioSpec(
        name=name,
        initial=PatientState(**initial_fields),
        effects=effects,
        drift=drift,
        solution=solution,
    )
    spec.validate()
    return spec


def save_scenario(spec: ScenarioSpec, destination) -> None:
    lines = [f"name: {spec.name}", "", "[initial]"]
    p = spec.initial
    lines.append(f"airway = {p.airway}")
    lines.append(f"consciousness = {p.consciousness}")
    for name in sorted(_NUMERIC_FIELDS):
        lines.append(f"{name} = {getattr(p, name):g}")
    lines.append("devices = " + " ".join(sorted(p.devices)))
    lines += ["", "[effects]"]
    for action in ActionId:
        eff = spec.effects[action]
        if eff.is_empty() and eff.requires_device is None:
            continue
        toks = []
        if eff.requires_device:
            toks.append(f"requires={eff.requires_device}")
        for name, value in eff.sets.items():
            toks.append(f"{name}={value:g}" if isinstance(value, float) else f"{name}={value}")
        for name, delta in eff.deltas.items():
            toks.append(f"{name}+={delta:g}" if delta >= 0 else f"{name}-={-delta:g}")
        for dev in eff.add_devices:
            toks.append(f"device={dev}")
        for ev in eff.emits:
            toks.append(f"emit={ev.name}")
        lines.append(f"{action.name}: " + " ".join(toks))
    if spec.drift:
        lines += ["", "[drift]"]
        for name, delta in spec.drift.items():
            lines.append(f"{name} += {delta:g}" if delta >= 0 else f"{name} -= {-delta:g}")
    if spec.solution:
        lines += ["", "[solution]"]
        lines.append(" ".join(a.name for a in spec.solution))
    Path(destination).write_text("\n".join(lines) + "\n")


# --- bundled scenarios -----------------------------------------------------

# misapplied interventions that destabilize any of the bundled patients;
# shared across scenarios so random flailing rarely ends in success
_HARMFUL = {
    ActionId.GiveMidazolam: Effect(deltas={"breathing_rate": -12.0, "spo2": -20.0}),
    ActionId.GiveAdenosine: Effect(deltas={"map": -30.0, "heart_rate": -30.0}),
    ActionId.GiveAdrenaline: Effect(deltas={"map": -25.0, "heart_rate": 60.0}),
    ActionId.GiveAmiodarone: Effect(deltas={"map": -25.0, "heart_rate": -20.0}),
    ActionId.GiveAtropine: Effect(deltas={"map": -15.0, "heart_rate": 40.0}),
    ActionId.StartChestCompression: Effect(deltas={"map": -20.0, "heart_rate": -15.0}),
    ActionId.ResumeCPR: Effect(deltas={"map": -20.0, "heart_rate": -15.0}),
    ActionId.BagDuringCPR: Effect(deltas={"breathing_rate": -4.0, "spo2": -5.0}),
}


def _tongue() -> ScenarioSpec:
    fix = Effect(sets={"airway": "clear", "breathing_rate": 14.0}, deltas={"spo2": 12.0})
    effects = dict(_HARMFUL)
    effects[ActionId.PerformJawThrust] = fix
    effects[ActionId.PerformHeadTiltChinLift] = fix
    effects[ActionId.UseGuedelAirway] = Effect(
        sets={"airway": "clear", "breathing_rate": 12.0}, deltas={"spo2": 10.0}
    )
    effects[ActionId.GiveFluids] = Effect(requires_device="iv_access", deltas={"map": 15.0})
    return ScenarioSpec(
        name="tongue",
        initial=PatientState(
            airway="tongue", breathing_rate=4.0, spo2=84.0, map=72.0, heart_rate=98.0, consciousness="U"
        ),
        effects=effects,
        solution=[
            ActionId.ExamineAirway,
            ActionId.PerformJawThrust,
            ActionId.UseSatsProbe,
            ActionId.UseBloodPressureCuff,
            ActionId.ViewMonitor,
            ActionId.Finish,
        ],
    )


def _vomit() -> ScenarioSpec:
    effects = dict(_HARMFUL)
    effects[ActionId.UseYankeurSucionCatheter] = Effect(
        sets={"airway": "clear"}, deltas={"spo2": 8.0}
    )
    effects[ActionId.GiveFluids] = Effect(requires_device="iv_access", deltas={"map": 15.0})
    return ScenarioSpec(
        name="vomit",
        initial=PatientState(
            airway="vomit", breathing_rate=9.0, spo2=85.0, map=70.0, heart_rate=102.0, consciousness="V"
        ),
        effects=effects,
        solution=[
            ActionId.ExamineAirway,
            ActionId.UseYankeurSucionCatheter,
            ActionId.UseSatsProbe,
            ActionId.ViewMonitor,
            ActionId.Finish,
        ],
    )


def _hypotension() -> ScenarioSpec:
    effects = dict(_HARMFUL)
    effects[ActionId.GiveFluids] = Effect(requires_device="iv_access", deltas={"map": 20.0})
    return ScenarioSpec(
        name="hypotension",
        initial=PatientState(
            airway="clear", breathing_rate=16.0, spo2=95.0, map=48.0, heart_rate=120.0, consciousness="V"
        ),
        effects=effects,
        solution=[
            ActionId.ExamineCirculation,
            ActionId.UseVenflonIVCatheter,
            ActionId.GiveFluids,
            ActionId.UseBloodPressureCuff,
            ActionId.ViewMonitor,
            ActionId.Finish,
        ],
    )


def bundled_scenarios() -> list[ScenarioSpec]:
    """Three deterministic teaching scenarios, each with a documented shortest
    stabilizing action sequence in `solution`."""
    return [_tongue(), _vomit(), _hypotension()]


def get_scenario(name_or_path) -> ScenarioSpec:
    """Resolve a bundled scenario name or load a scenario file."""
    for spec in bundled_scenarios():
        if spec.name == str(name_or_path):
            return spec
    if Path(name_or_path).exists():
        return load_scenario(name_or_path)
    raise ValidationError(f"unknown scenario: {name_or_path}")
