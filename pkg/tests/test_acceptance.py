"""Acceptance suite: one test per release criterion, each printing a PASS/FAIL
line (run with `pytest tests/test_acceptance.py -s` to see them)."""

import math
import time

import numpy as np
import pytest

from medgym import (
    EventTrace,
    FormatError,
    PatientState,
    ProbePose,
    ResusEnv,
    SampleGrid,
    ValidationError,
    bundled_scenarios,
    clamp_to_surface,
    encode_observation,
    generate_phantom,
    load_volume,
    organ_volume,
    quality,
    render_slice,
    save_volume,
    success,
)
from medgym.events import EventId, MeasurementId
from medgym.imagym import ImagymConfig, ImagymEnv
from medgym.protocol import ImagymAdapter, ResusAdapter, build_imagym_config
from medgym.resus import PURE_ACTIONS, ActionId
from medgym.rollout import RandomAgent, replay_log, run_rollout

from conftest import oracle_nearest_surface, oracle_render_pixels, random_spec, sphere_spec
from test_events import EVENT_ORDER, MEASUREMENT_ORDER


def report(name: str, ok: bool, detail: str = ""):
    print(f"ACCEPTANCE {'PASS' if ok else 'FAIL'}: {name}" + (f" ({detail})" if detail else ""))
    assert ok, f"{name}: {detail}"


def test_telescoping_reward_100_episodes():
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    volumes = [generate_phantom(random_spec(rng)) for _ in range(10)]
    grid = SampleGrid(32, 32, (70.0, 70.0))
    worst = 0.0
    for episode in range(100):
        mode = "free" if episode % 2 == 0 else "realistic"
        v = volumes[episode % len(volumes)]
        cfg = ImagymConfig(movement_mode=mode, grid=grid, max_steps=20)
        env = ImagymEnv(v, cfg)
        obs, _ = env.reset()
        total = 0.0
        terminated = False
        while not terminated:
            a = rng.uniform(-1.2, 1.2, 7)
            if env.state.steps >= 14:
                a[6] = 1.0
            obs, reward, terminated = env.step(a)
            total += reward
        worst = max(worst, abs(total - quality(obs, v, cfg)))
    elapsed = time.perf_counter() - start
    report(
        "telescoping reward over 100 random episodes",
        worst <= 1e-6 and elapsed < 60.0,
        f"max |sum(r) - Q(final)| = {worst:.2e}, {elapsed:.1f}s",
    )


def test_slice_rendering_matches_independent_oracle():
    rng = np.random.default_rng(7)
    volumes = [generate_phantom(random_spec(rng)) for _ in range(8)]
    worst = 0.0
    for pair in range(100):
        v = volumes[pair % len(volumes)]
        ext = v.extent
        loc = tuple(rng.uniform(-0.2 * e, 1.2 * e) for e in ext)
        angles = tuple(rng.uniform(-math.pi, math.pi, 3))
        grid = SampleGrid(16, 14, (float(rng.uniform(15, 80)), float(rng.uniform(15, 80))))
        got = render_slice(v, ProbePose(loc, angles), grid).pixels
        want = oracle_render_pixels(v, loc, angles, grid.rows, grid.cols, grid.extent)
        worst = max(worst, float(np.abs(got - want).max()))
    report("slice oracle over 100 random (volume, pose) pairs", worst <= 1e-5,
           f"max per-pixel diff = {worst:.2e}")


def test_clamp_matches_exhaustive_argmin():
    rng = np.random.default_rng(12)
    ok = True
    queries = 0
    for trial in range(10):
        size = 10_000 if trial < 2 else int(rng.integers(50, 2000))
        surface = rng.uniform(0, 40, (size, 3)).astype(np.float32)
        if trial % 3 == 0:
            surface[size // 2] = surface[size // 4]  # guaranteed exact tie
        for _ in range(100):
            q = tuple(rng.uniform(-10, 50, 3))
            if rng.random() < 0.2:
                q = tuple(float(c) for c in surface[int(rng.integers(size))])
            _, idx = clamp_to_surface(q, surface)
            ok = ok and idx == oracle_nearest_surface(q, surface)
            queries += 1
    report("clamp oracle, exact agreement incl. tie-break", ok, f"{queries} queries")


def test_analytic_sphere_geometry():
    v = generate_phantom(sphere_spec())
    analytic_volume = 4.0 / 3.0 * math.pi * 1000.0
    vol_err = abs(organ_volume(v, "stomach") - analytic_volume) / analytic_volume
    obs = render_slice(v, ProbePose((22.0, 22.0, 22.0)), SampleGrid(200, 200, (80.0, 80.0)))
    area_err = abs(obs.organ_area["stomach"] - math.pi * 100.0) / (math.pi * 100.0)
    report("analytic sphere geometry", vol_err < 0.02 and area_err < 0.03,
           f"volume err {vol_err:.3%}, area err {area_err:.3%}")


def test_encoder_golden():
    order_ok = all(int(EventId[name]) == i for i, name in enumerate(EVENT_ORDER)) and all(
        int(MeasurementId[name]) == i for i, name in enumerate(MEASUREMENT_ORDER)
    )
    empty_ok = bool((encode_observation(EventTrace(t=50.0)) == 0).all())
    trace = EventTrace(t=1.0)
    trace.record_event(EventId.ResponseVerbal, at=0.0)
    trace.record_measurement(MeasurementId.MeasuredSats, 93.0, at=0.0)
    obs = encode_observation(trace)
    decay_ok = (
        abs(obs[0] - 0.367879) <= 1e-6
        and abs(obs[33 + int(MeasurementId.MeasuredSats)] - 0.367879) <= 1e-6
        and obs[40 + int(MeasurementId.MeasuredSats)] == 93.0
    )
    report("encoder golden test (47-slot order, zero vector, exp(-1))",
           order_ok and empty_ok and decay_ok)


def test_success_predicate_truth_table():
    cases = []
    for ds, dr, dm in [(0, 0, 0), (-0.1, 0, 0), (0, -0.1, 0), (0, 0, -0.1),
                       (-0.1, -0.1, 0), (-0.1, 0, -0.1), (0, -0.1, -0.1), (-0.1, -0.1, -0.1)]:
        p = PatientState(airway="clear", spo2=88.0 + ds, breathing_rate=8.0 + dr, map=60.0 + dm)
        cases.append(success(p) == (ds == 0 and dr == 0 and dm == 0))
    airway_case = not success(PatientState(airway="tongue", spo2=99, breathing_rate=20, map=90))
    report("success predicate truth table (inclusive thresholds)", all(cases) and airway_case)


def test_examine_purity_and_gating():
    pure_ok = True
    for spec in bundled_scenarios():
        for action in PURE_ACTIONS:
            env = ResusEnv(spec)
            env.reset()
            before = env.patient.copy()
            env.step(action)
            pure_ok = pure_ok and env.patient == before
    env = ResusEnv(bundled_scenarios()[0])
    env.reset()
    obs, _, _ = env.step(ActionId.ViewMonitor)  # no cuff attached
    gating_ok = obs[33 + int(MeasurementId.MeasuredMAP)] == 0.0
    report("examine purity and MeasuredMAP gating", pure_ok and gating_ok)


def test_scripted_policy_and_random_baseline():
    start = time.perf_counter()
    ok = True
    details = []
    for spec in bundled_scenarios():
        env = ResusEnv(spec)
        env.reset()
        for action in spec.solution:
            env.step(action)
        scripted_ok = success(env.patient)
        summary = run_rollout(ResusAdapter(spec), RandomAgent(seed=0), episodes=1000)
        ok = ok and scripted_ok and summary.success_rate < 0.05
        details.append(f"{spec.name}: scripted={scripted_ok} random={summary.success_rate:.3f}")
    elapsed = time.perf_counter() - start
    report("scripted-policy success vs <5% random baseline",
           ok and elapsed < 30.0, "; ".join(details) + f"; {elapsed:.1f}s")


def test_determinism_and_replay(tmp_path):
    v = generate_phantom(sphere_spec(noise=0.08, seed=3))
    cfg = {"grid": {"rows": 24, "cols": 24}, "max_steps": 12}
    logs = []
    for run in range(2):
        path = tmp_path / f"imagym{run}.jsonl"
        run_rollout(ImagymAdapter(v, build_imagym_config(cfg)), RandomAgent(seed=21),
                    episodes=3, out_path=path, seed=4)
        logs.append(path)
    identical = logs[0].read_bytes() == logs[1].read_bytes()
    steps = replay_log(ImagymAdapter(v, build_imagym_config(cfg)), logs[0], seed=4)

    resus_logs = []
    for run in range(2):
        path = tmp_path / f"resus{run}.jsonl"
        run_rollout(ResusAdapter(bundled_scenarios()[1]), RandomAgent(seed=8),
                    episodes=5, out_path=path, seed=0)
        resus_logs.append(path)
    identical = identical and resus_logs[0].read_bytes() == resus_logs[1].read_bytes()
    steps += replay_log(ResusAdapter(bundled_scenarios()[1]), resus_logs[0], seed=0)
    report("determinism and replay fidelity", identical and steps > 0,
           f"{steps} replayed steps verified")


def test_file_format_roundtrip_and_fuzzing(tmp_path):
    rng = np.random.default_rng(99)
    round_ok = True
    for i in range(50):
        v = generate_phantom(random_spec(rng))
        path = tmp_path / f"v{i}.phv"
        save_volume(v, path)
        round_ok = round_ok and load_volume(path) == v

    reference = tmp_path / "v0.phv"
    data = reference.read_bytes()
    fuzz_ok = True
    target = tmp_path / "fuzz.phv"
    for _ in range(60):
        cut = int(rng.integers(0, len(data)))
        target.write_bytes(data[:cut])
        try:
            load_volume(target)
            fuzz_ok = False  # truncated file must not load
        except (FormatError, ValidationError):
            pass
        except Exception:
            fuzz_ok = False  # anything else is a crash
    target.write_bytes(b"XXXX" + data[4:])
    try:
        load_volume(target)
        fuzz_ok = False
    except FormatError:
        pass
    report("PHV1 round-trip (50 phantoms) and corruption fuzzing", round_ok and fuzz_ok)
