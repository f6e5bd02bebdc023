"""Rollout runner: agents, JSONL trajectory logs, replay verification.

Log records are one JSON object per step with keys episode, step, action,
reward, terminated, digest and wall_time.  The digest is the first 64 bits of
SHA-256 over the observation as float64 bytes in C order, so replays can be
verified without storing frames.  wall_time is null unless timestamps are
requested, keeping logs byte-reproducible under fixed seeds.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, MedgymError
from .protocol import NativeEnv


def obs_digest(obs) -> str:
    """64-bit observation fingerprint, reproducible from the observation alone."""
    data = np.ascontiguousarray(np.asarray(obs, dtype=np.float64))
    return hashlib.sha256(data.tobytes()).hexdigest()[:16]


class RandomAgent:
    def __init__(self, seed: int = 0):
        self.rng = np.random.default_rng(seed)

    def act(self, env: NativeEnv, obs):
        return env.sample_action(self.rng)


class ZeroAgent:
    def act(self, env: NativeEnv, obs):
        return env.zero_action()


class ScriptedAgent:
    """Plays a fixed action sequence each episode; episodes must terminate
    before the script runs out."""

    def __init__(self, actions: list):
        self.actions = list(actions)
        self.cursor = 0

    def begin_episode(self):
        self.cursor = 0

    def act(self, env: NativeEnv, obs):
        if self.cursor >= len(self.actions):
            raise MedgymError("scripted agent ran out of actions")
        action = self.actions[self.cursor]
        self.cursor += 1
        return action


def load_actions(path) -> list:
    """Actions from a JSON array file or from a JSONL trajectory log."""
    text = Path(path).read_text()
    stripped = text.lstrip()
    if stripped.startswith("["):
        return json.loads(text)
    actions = []
    for line in text.splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        if "action" not in record:
            raise FormatError(f"{path}: log line without an action")
        actions.append(record["action"])
    return actions


@dataclass
class RolloutSummary:
    episodes: int
    steps: int
    mean_return: float
    success_rate: float | None
    steps_per_sec: float


def run_rollout(env: NativeEnv, agent, episodes: int, out_path=None, seed: int = 0,
                timestamps: bool = False) -> RolloutSummary:
    records = []
    returns = []
    successes = []
    start = time.perf_counter()
    total_steps = 0
    for episode in range(episodes):
        if hasattr(agent, "begin_episode"):
            agent.begin_episode()
        obs = env.reset(seed + episode)
        ep_return = 0.0
        step = 0
        terminated = False
        while not terminated:
            action = agent.act(env, obs)
            obs, reward, terminated, truncated = env.step(action)
            records.append(
                {
                    "episode": episode,
                    "step": step,
                    "action": action,
                    "reward": reward,
                    "terminated": terminated,
                    "digest": obs_digest(obs),
                    "wall_time": time.perf_counter() - start if timestamps else None,
                }
            )
            ep_return += reward
            step += 1
            total_steps += 1
        returns.append(ep_return)
        s = env.episode_success()
        if s is not None:
            successes.append(bool(s))
    elapsed = time.perf_counter() - start

    if out_path is not None:
        with open(out_path, "w") as fh:
            for record in records:
                fh.write(json.dumps(record) + "\n")

    return RolloutSummary(
        episodes=episodes,
        steps=total_steps,
        mean_return=float(np.mean(returns)) if returns else 0.0,
        success_rate=(sum(successes) / len(successes)) if successes else None,
        steps_per_sec=total_steps / elapsed if elapsed > 0 else float("inf"),
    )


def replay_log(env: NativeEnv, log_path, seed: int = 0) -> int:
    """Re-run a logged action sequence and verify every reward and digest.

    Returns the number of verified steps; raises MedgymError on the first
    mismatch.
    """
    episodes: dict[int, list[dict]] = {}
    for line in Path(log_path).read_text().splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        episodes.setdefault(record["episode"], []).append(record)

    verified = 0
    for episode, records in sorted(episodes.items()):
        records.sort(key=lambda r: r["step"])
        env.reset(seed + episode)
        for record in records:
            obs, reward, terminated, _ = env.step(record["action"])
            if obs_digest(obs) != record["digest"]:
                raise MedgymError(
                    f"replay mismatch at episode {episode} step {record['step']}: digest differs"
                )
            if abs(reward - record["reward"]) > 0.0:
                raise MedgymError(
                    f"replay mismatch at episode {episode} step {record['step']}: reward differs"
                )
            if terminated != record["terminated"]:
                raise MedgymError(
                    f"replay mismatch at episode {episode} step {record['step']}: termination differs"
                )
            verified += 1
    return verified
