"""Probe-navigation POMDP over a Volume.

The agent steers a virtual ultrasound probe with 7-component continuous
actions; the observation is the rendered slice, the reward is the change in
image quality, so per-episode rewards telescope to the quality of the final
image.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EpisodeError, ValidationError
from .geometry import ProbePose, SampleGrid, SliceObservation, clamp_to_surface, render_slice, wrap_angle
from .volume import Volume, organ_volume

FREE = "free"
REALISTIC = "realistic"

ACTION_DIM = 7


@dataclass(frozen=True)
class ImagymConfig:
    movement_mode: str = FREE
    grid: SampleGrid = field(default_factory=SampleGrid)
    translation_scale: float = 5.0  # mm per unit action component
    rotation_scale: float = 0.1  # rad per unit action component
    action_clip: float = 1.0
    max_steps: int = 200
    heart_sign: float = 1.0  # -1 penalizes heart visibility instead

    def __post_init__(self) -> None:
        if self.movement_mode not in (FREE, REALISTIC):
            raise ValidationError(f"unknown movement mode: {self.movement_mode}")
        if self.translation_scale <= 0 or self.rotation_scale <= 0 or self.action_clip <= 0:
            raise ValidationError("scales and action_clip must be positive")
        if self.max_steps < 1:
            raise ValidationError("max_steps must be >= 1")
        if self.heart_sign not in (1.0, -1.0):
            raise ValidationError("heart_sign must be +1 or -1")


@dataclass
class ImagymState:
    pose: ProbePose
    prev_quality: float = 0.0
    steps: int = 0
    done: bool = False
    truncated: bool = False


def quality(s: SliceObservation, v: Volume, cfg: ImagymConfig) -> float:
    """Per-slice score: visible organ areas normalized by organ volumes (1/mm)."""
    q = s.organ_area["stomach"] / organ_volume(v, "stomach")
    q += cfg.heart_sign * s.organ_area["heart"] / organ_volume(v, "heart")
    q += s.organ_area["uv"] / organ_volume(v, "uv")
    return float(q)


class ImagymEnv:
    """One probe-navigation episode at a time over a shared immutable Volume."""

    def __init__(self, volume: Volume, config: ImagymConfig | None = None):
        self.volume = volume
        self.config = config or ImagymConfig()
        if self.config.movement_mode == REALISTIC and len(volume.surface) == 0:
            raise ValidationError("realistic movement requires a non-empty surface")
        self.state: ImagymState | None = None

    def _initial_loc(self) -> tuple[float, float, float]:
        if self.config.movement_mode == REALISTIC:
            centroid = self.volume.surface.astype(np.float64).mean(axis=0)
            loc, _ = clamp_to_surface(centroid, self.volume.surface)
            return tuple(loc)
        return tuple(self.volume.extent / 2.0)

    def reset(self, seed: int | None = None) -> tuple[SliceObservation, ImagymState]:
        # the environment is deterministic; seed is accepted for API symmetry
        pose = ProbePose(self._initial_loc(), (0.0, 0.0, 0.0))
        self.state = ImagymState(pose=pose)
        obs = render_slice(self.volume, pose, self.config.grid)
        return obs, self.state

    def step(self, action) -> tuple[SliceObservation, float, bool]:
        if self.state is None:
            raise EpisodeError("no active episode: call reset first")
        if self.state.done:
            raise EpisodeError("episode already terminated")
        a = np.asarray(action, dtype=np.float64).reshape(-1)
        if a.shape != (ACTION_DIM,) or not np.isfinite(a).all():
            raise EpisodeError(f"action must be {ACTION_DIM} finite reals")
        cfg = self.config
        a = np.clip(a, -cfg.action_clip, cfg.action_clip)

        loc = np.asarray(self.state.pose.loc, dtype=np.float64) + a[:3] * cfg.translation_scale
        if cfg.movement_mode == REALISTIC:
            loc, _ = clamp_to_surface(loc, self.volume.surface)
        else:
            loc = np.clip(loc, 0.0, self.volume.extent)
        angles = tuple(
            wrap_angle(old + delta * cfg.rotation_scale)
            for old, delta in zip(self.state.pose.angles, a[3:6])
        )
        pose = ProbePose(tuple(loc), angles)

        obs = render_slice(self.volume, pose, cfg.grid)
        q = quality(obs, self.volume, cfg)
        reward = q - self.state.prev_quality

        self.state.pose = pose
        self.state.prev_quality = q
        self.state.steps += 1
        ended = bool(a[6] > 0.0)
        truncated = not ended and self.state.steps >= cfg.max_steps
        self.state.done = ended or truncated
        self.state.truncated = truncated
        return obs, reward, self.state.done
