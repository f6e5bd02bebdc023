"""Event-stream vocabulary and the 47-dimensional time-decay observation
encoding for the emergency-care environment.

The enum orders below are a wire contract: the integer value of each member is
its observation-slot (or action) index and must never be reordered.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .errors import ValidationError


class EventId(IntEnum):
    ResponseVerbal = 0
    ResponseGroan = 1
    ResponseNone = 2
    AirwayClear = 3
    AirwayVomit = 4
    AirwayBlood = 5
    AirwayTongue = 6
    BreathingNone = 7
    BreathingSnoring = 8
    BreathingSeeSaw = 9
    BreathingEqualChestExpansion = 10
    BreathingBibasalCrepitations = 11
    BreathingWheeze = 12
    BreathingCoarseCrepitationsAtBase = 13
    BreathingPneumothoraxSymptoms = 14
    VentilationResistance = 15
    RadialPulsePalpable = 16
    RadialPulseNonPalpable = 17
    HeartSoundsMuffled = 18
    HeartSoundsNormal = 19
    AVPU_A = 20
    AVPU_U = 21
    AVPU_V = 22
    PupilsPinpoint = 23
    PupilsNormal = 24
    ExposureRash = 25
    ExposurePeripherallyShutdown = 26
    ExposureStainedUnderwear = 27
    HeartRhythm0 = 28
    HeartRhythm1 = 29
    HeartRhythm2 = 30
    HeartRhythm3 = 31
    HeartRhythm4 = 32


class MeasurementId(IntEnum):
    MeasuredHeartRate = 0
    MeasuredRespRate = 1
    MeasuredCapillaryGlucose = 2
    MeasuredTemperature = 3
    MeasuredMAP = 4
    MeasuredSats = 5
    MeasuredResps = 6


class ActionId(IntEnum):
    DoNothing = 0
    CheckSignsOfLife = 1
    CheckRhythm = 2
    ExamineAirway = 3
    ExamineBreathing = 4
    ExamineCirculation = 5
    ExamineDisability = 6
    ExamineExposure = 7
    ExamineResponse = 8
    GiveAdenosine = 9
    GiveAdrenaline = 10
    GiveAmiodarone = 11
    GiveAtropine = 12
    GiveMidazolam = 13
    UseVenflonIVCatheter = 14
    GiveFluids = 15
    ViewMonitor = 16
    StartChestCompression = 17
    OpenAirwayDrawer = 18
    OpenBreathingDrawer = 19
    OpenCirculationDrawer = 20
    OpenDrugsDrawer = 21
    BagDuringCPR = 22
    ResumeCPR = 23
    UseMonitorPads = 24
    UseSatsProbe = 25
    UseAline = 26
    UseBloodPressureCuff = 27
    AttachDefibPads = 28
    UseBagValveMask = 29
    UseNonRebreatherMask = 30
    UseYankeurSucionCatheter = 31
    UseGuedelAirway = 32
    TakeBloodForArtherialBloodGas = 33
    TakeRoutineBloods = 34
    PerformAirwayManoeuvres = 35
    PerformHeadTiltChinLift = 36
    PerformJawThrust = 37
    TakeBloodPressure = 38
    TurnOnDefibrillator = 39
    DefibrillatorCharge = 40
    DefibrillatorCurrentUp = 41
    DefibrillatorCurrentDown = 42
    DefibrillatorPace = 43
    DefibrillatorPacePause = 44
    DefibrillatorRateUp = 45
    DefibrillatorRateDown = 46
    DefibrillatorSync = 47
    Finish = 48


N_EVENTS = len(EventId)
N_MEASUREMENTS = len(MeasurementId)
N_ACTIONS = len(ActionId)
OBS_DIM = N_EVENTS + 2 * N_MEASUREMENTS  # 33 + 7 + 7 = 47


@dataclass
class EventTrace:
    """Timestamped log of typed events and vital-sign measurements.

    Times are seconds.  `t` is the current clock; recording in the past is a
    caller bug and rejected.
    """

    events: list[tuple[float, EventId]] = field(default_factory=list)
    measurements: list[tuple[float, MeasurementId, float]] = field(default_factory=list)
    t: float = 0.0

    def advance(self, dt: float) -> None:
        if dt < 0:
            raise ValidationError("time cannot run backwards")
        self.t += dt

    def record_event(self, event: EventId, at: float | None = None) -> None:
        at = self.t if at is None else at
        if at > self.t:
            raise ValidationError("event time ahead of the trace clock")
        self.events.append((at, EventId(event)))

    def record_measurement(self, which: MeasurementId, value: float, at: float | None = None) -> None:
        at = self.t if at is None else at
        if at > self.t:
            raise ValidationError("measurement time ahead of the trace clock")
        self.measurements.append((at, MeasurementId(which), float(value)))


def encode_observation(trace: EventTrace) -> np.ndarray:
    """47-vector: event relevance exp(t_i - t) per event type, measurement
    recency with the same decay, then the last measured values.

    Components for events that never occurred are exactly 0 (the infinite-age
    limit of the decay).
    """
    obs = np.zeros(OBS_DIM, dtype=np.float64)
    last_event: dict[EventId, float] = {}
    for at, ev in trace.events:
        if ev not in last_event or at > last_event[ev]:
            last_event[ev] = at
    for ev, at in last_event.items():
        obs[int(ev)] = math.exp(at - trace.t)

    last_meas: dict[MeasurementId, tuple[float, float]] = {}
    for at, which, value in trace.measurements:
        if which not in last_meas or at >= last_meas[which][0]:
            last_meas[which] = (at, value)
    for which, (at, value) in last_meas.items():
        obs[N_EVENTS + int(which)] = math.exp(at - trace.t)
        obs[N_EVENTS + N_MEASUREMENTS + int(which)] = value
    return obs
