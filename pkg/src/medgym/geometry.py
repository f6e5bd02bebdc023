"""Probe pose arithmetic, nearest-legal-point clamping, and plane-slice
rendering of a Volume onto a sampling grid."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .volume import ORGANS, Volume


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    w = (a + math.pi) % (2.0 * math.pi) - math.pi
    if w == -math.pi:
        w = math.pi
    return w


@dataclass
class ProbePose:
    """Probe location (mm) and (roll, pitch, yaw) orientation in radians.

    Angles are wrapped to (-pi, pi] on construction.  The probe direction is
    the forward axis of pose_axes().
    """

    loc: tuple[float, float, float]
    angles: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        self.loc = tuple(float(c) for c in self.loc)
        self.angles = tuple(wrap_angle(float(a)) for a in self.angles)


@dataclass(frozen=True)
class SampleGrid:
    """Pixel counts and physical extent (mm) of the imaged plane."""

    rows: int = 128
    cols: int = 128
    extent: tuple[float, float] = (80.0, 80.0)  # (height, width) mm

    def __post_init__(self) -> None:
        if self.rows < 2 or self.cols < 2:
            raise ValidationError("grid needs at least 2 rows and 2 cols")
        if self.extent[0] <= 0 or self.extent[1] <= 0:
            raise ValidationError("grid extent must be positive")

    @property
    def cell_area(self) -> float:
        return (self.extent[0] / self.rows) * (self.extent[1] / self.cols)

    @property
    def area(self) -> float:
        return self.extent[0] * self.extent[1]


@dataclass
class SliceObservation:
    """Rendered plane: interpolated intensities plus per-organ visible area (mm^2)."""

    pixels: np.ndarray
    organ_area: dict[str, float]


def pose_axes(p: ProbePose) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Right-handed orthonormal (forward, lateral, normal) triad.

    Obtained by rotating the canonical triad forward=(0,0,1), lateral=(1,0,0),
    normal=(0,1,0) by yaw about z, then pitch about y, then roll about x.
    """
    roll, pitch, yaw = p.angles
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    rx = np.array([[1, 0, 0], [0, cr, -sr], [0, sr, cr]])
    ry = np.array([[cp, 0, sp], [0, 1, 0], [-sp, 0, cp]])
    rz = np.array([[cy, -sy, 0], [sy, cy, 0], [0, 0, 1]])
    r = rx @ ry @ rz
    return r[:, 2].copy(), r[:, 0].copy(), r[:, 1].copy()


def clamp_to_surface(requested, surface: np.ndarray) -> tuple[np.ndarray, int]:
    """Nearest surface point to the requested location.

    Returns (point, index).  Ties break toward the lowest stored index, so
    replays are deterministic.
    """
    if surface is None or len(surface) == 0:
        raise ValidationError("empty surface: realistic movement unavailable")
    q = np.asarray(requested, dtype=np.float64)
    d = surface.astype(np.float64) - q[None, :]
    d2 = d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1] + d[:, 2] * d[:, 2]
    idx = int(np.argmin(d2))
    return surface[idx].astype(np.float64), idx


def _plane_points(v: Volume, p: ProbePose, g: SampleGrid) -> np.ndarray:
    forward, lateral, _ = pose_axes(p)
    h, w = g.extent
    r_off = ((np.arange(g.rows) + 0.5) / g.rows - 0.5) * h
    c_off = ((np.arange(g.cols) + 0.5) / g.cols - 0.5) * w
    loc = np.asarray(p.loc, dtype=np.float64)
    return (
        loc[None, None, :]
        + r_off[:, None, None] * forward[None, None, :]
        + c_off[None, :, None] * lateral[None, None, :]
    )


def render_slice(v: Volume, p: ProbePose, g: SampleGrid) -> SliceObservation:
    """Sample the volume on the probe plane.

    Pixel (r, c) sits at loc + r_off*forward + c_off*lateral with the offsets
    partitioning [-extent/2, +extent/2] into cell centers.  Intensity is
    trilinear over voxel centers (edge-clamped inside the cuboid, 0 outside);
    organ masks use nearest-voxel lookup at the same points and contribute one
    grid cell of area per set pixel.
    """
    pts = _plane_points(v, p, g)
    spacing = np.asarray(v.spacing, dtype=np.float64)
    dims = np.asarray(v.dims)
    ext = v.extent

    inside = np.logical_and.reduce(
        [(pts[..., i] >= 0.0) & (pts[..., i] <= ext[i]) for i in range(3)]
    )

    # continuous voxel-center index
    f = pts / spacing[None, None, :] - 0.5
    fc = np.clip(f, 0.0, (dims - 1).astype(np.float64))
    i0 = np.minimum(fc.astype(np.int64), dims - 2)
    i0 = np.maximum(i0, 0)
    t = fc - i0

    x0, y0, z0 = i0[..., 0], i0[..., 1], i0[..., 2]
    tx, ty, tz = t[..., 0], t[..., 1], t[..., 2]
    inten = v.intensity.astype(np.float64)

    def at(dx, dy, dz):
        return inten[x0 + dx, y0 + dy, z0 + dz]

    c00 = at(0, 0, 0) * (1 - tx) + at(1, 0, 0) * tx
    c10 = at(0, 1, 0) * (1 - tx) + at(1, 1, 0) * tx
    c01 = at(0, 0, 1) * (1 - tx) + at(1, 0, 1) * tx
    c11 = at(0, 1, 1) * (1 - tx) + at(1, 1, 1) * tx
    c0 = c00 * (1 - ty) + c10 * ty
    c1 = c01 * (1 - ty) + c11 * ty
    pixels = np.where(inside, c0 * (1 - tz) + c1 * tz, 0.0)

    near = np.clip(np.rint(f).astype(np.int64), 0, (dims - 1)[None, None, :])
    organ_area = {}
    for organ in ORGANS:
        hit = v.masks[organ][near[..., 0], near[..., 1], near[..., 2]] & inside
        organ_area[organ] = float(np.count_nonzero(hit)) * g.cell_area
    return SliceObservation(pixels=pixels, organ_area=organ_area)
