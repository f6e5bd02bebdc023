"""Volumetric scan model: intensity field, organ masks, probe surface, phantom
generation and bit-exact PHV1 file I/O.

Grid convention: voxel (i, j, k) is centered at ((i+0.5)*sx, (j+0.5)*sy,
(k+0.5)*sz) so the voxel grid tiles the physical cuboid
[0, nx*sx] x [0, ny*sy] x [0, nz*sz] exactly.
"""

from __future__ import annotations

import dataclasses
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, ValidationError

ORGANS = ("heart", "stomach", "uv")

MAGIC = b"PHV1"
_HEADER = struct.Struct("<3I3f")


@dataclass
class Volume:
    """Immutable-by-convention volumetric scan.

    intensity is float32 in [0, 1], shape (nx, ny, nz).  masks maps each organ
    name to a bool array of the same shape.  surface is a float32 (n, 3) array
    of legal probe locations in mm (may be empty; realistic movement then
    becomes unavailable).
    """

    dims: tuple[int, int, int]
    spacing: tuple[float, float, float]
    intensity: np.ndarray
    masks: dict[str, np.ndarray]
    surface: np.ndarray

    def __post_init__(self) -> None:
        self.dims = tuple(int(d) for d in self.dims)
        # spacing is f32 on disk; quantize up front so round-trips are exact
        self.spacing = tuple(float(np.float32(s)) for s in self.spacing)

    @property
    def extent(self) -> np.ndarray:
        """Physical cuboid size (x_max, y_max, z_max) in mm."""
        return np.array(self.dims, dtype=np.float64) * np.array(self.spacing, dtype=np.float64)

    @property
    def voxel_volume(self) -> float:
        sx, sy, sz = self.spacing
        return float(sx) * float(sy) * float(sz)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Volume):
            return NotImplemented
        return (
            self.dims == other.dims
            and self.spacing == other.spacing
            and np.array_equal(self.intensity, other.intensity)
            and all(np.array_equal(self.masks[o], other.masks[o]) for o in ORGANS)
            and np.array_equal(self.surface, other.surface)
        )

    def validate(self) -> None:
        """Raise ValidationError on any invariant violation."""
        nx, ny, nz = self.dims
        if self.intensity.shape != (nx, ny, nz):
            raise ValidationError("intensity shape does not match dims")
        lo = float(self.intensity.min(initial=0.0))
        hi = float(self.intensity.max(initial=0.0))
        if lo < 0.0 or hi > 1.0:
            raise ValidationError(f"intensity out of [0,1]: range [{lo}, {hi}]")
        for organ in ORGANS:
            mask = self.masks.get(organ)
            if mask is None or mask.shape != (nx, ny, nz):
                raise ValidationError(f"missing or misshapen mask: {organ}")
            if not mask.any():
                raise ValidationError(f"empty organ mask: {organ}")
        if self.surface.size:
            ext = self.extent
            pts = self.surface.astype(np.float64)
            # float32 storage can sit a hair past the float64 bound
            if (pts < -1e-4).any() or (pts > ext[None, :] + 1e-4).any():
                raise ValidationError("surface point outside the volume cuboid")


def voxel_centers(dims: tuple[int, int, int], spacing: tuple[float, float, float]):
    """Open (broadcastable) grids of voxel-center coordinates in mm."""
    xs = (np.arange(dims[0]) + 0.5) * spacing[0]
    ys = (np.arange(dims[1]) + 0.5) * spacing[1]
    zs = (np.arange(dims[2]) + 0.5) * spacing[2]
    return xs[:, None, None], ys[None, :, None], zs[None, None, :]


@dataclass
class Ellipsoid:
    center: tuple[float, float, float]
    semi_axes: tuple[float, float, float]
    level: float = 0.8


@dataclass
class PhantomSpec:
    """Recipe for a synthetic test volume: one ellipsoid per organ over a
    speckled background."""

    dims: tuple[int, int, int]
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)
    organs: dict[str, Ellipsoid] = field(default_factory=dict)
    background_noise: float = 0.05
    seed: int = 0

    @classmethod
    def from_dict(cls, raw: dict) -> "PhantomSpec":
        organs = {
            name: Ellipsoid(tuple(o["center"]), tuple(o["semi_axes"]), float(o.get("level", 0.8)))
            for name, o in raw.get("organs", {}).items()
        }
        return cls(
            dims=tuple(raw["dims"]),
            spacing=tuple(raw.get("spacing", (1.0, 1.0, 1.0))),
            organs=organs,
            background_noise=float(raw.get("background_noise", 0.05)),
            seed=int(raw.get("seed", 0)),
        )

    def validate(self) -> None:
        if len(self.dims) != 3 or any(d < 1 for d in self.dims):
            raise ValidationError("dims must be three positive integers")
        if any(s <= 0 for s in self.spacing):
            raise ValidationError("spacing must be positive")
        if not 0.0 <= self.background_noise <= 0.2:
            raise ValidationError("background_noise must be in [0, 0.2]")
        for organ in ORGANS:
            if organ not in self.organs:
                raise ValidationError(f"missing organ: {organ}")
        ext = np.array(self.dims) * np.array(self.spacing)
        for organ, ell in self.organs.items():
            c = np.asarray(ell.center, dtype=np.float64)
            a = np.asarray(ell.semi_axes, dtype=np.float64)
            if (a <= 0).any():
                raise ValidationError(f"non-positive semi-axis for organ: {organ}")
            if not 0.0 <= ell.level <= 1.0:
                raise ValidationError(f"intensity level out of [0,1] for organ: {organ}")
            if (c - a < 0).any() or (c + a > ext).any():
                raise ValidationError(f"ellipsoid out of bounds for organ: {organ}")


def _ellipsoid_mask(spec: PhantomSpec, ell: Ellipsoid) -> np.ndarray:
    xs, ys, zs = voxel_centers(spec.dims, spec.spacing)
    cx, cy, cz = ell.center
    ax, ay, az = ell.semi_axes
    return ((xs - cx) / ax) ** 2 + ((ys - cy) / ay) ** 2 + ((zs - cz) / az) ** 2 <= 1.0


def generate_phantom(spec: PhantomSpec) -> Volume:
    """Deterministically build a Volume from a PhantomSpec.

    Masks are exact voxelizations (voxel center inside the ellipsoid), the
    intensity is the organ level inside organs and uniform speckle elsewhere,
    and the surface is the grid of voxel-center (x, y) points on the z=0 face.
    """
    spec.validate()
    # match the file format's f32 spacing before any geometry is derived
    spec = dataclasses.replace(spec, spacing=tuple(float(np.float32(s)) for s in spec.spacing))
    masks = {organ: _ellipsoid_mask(spec, spec.organs[organ]) for organ in ORGANS}
    for i, a in enumerate(ORGANS):
        for b in ORGANS[i + 1 :]:
            if (masks[a] & masks[b]).any():
                raise ValidationError(f"overlapping organs: {a} and {b}")

    rng = np.random.default_rng(spec.seed)
    intensity = (rng.random(spec.dims) * spec.background_noise).astype(np.float32)
    for organ in ORGANS:
        intensity[masks[organ]] = np.float32(spec.organs[organ].level)

    nx, ny, _ = spec.dims
    xs = (np.arange(nx) + 0.5) * spec.spacing[0]
    ys = (np.arange(ny) + 0.5) * spec.spacing[1]
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    surface = np.stack([gx.ravel(), gy.ravel(), np.zeros(nx * ny)], axis=1).astype(np.float32)

    vol = Volume(tuple(spec.dims), tuple(spec.spacing), intensity, masks, surface)
    vol.validate()
    return vol


def organ_volume(v: Volume, organ: str) -> float:
    """Physical volume of an organ mask in mm^3."""
    if organ not in ORGANS:
        raise ValidationError(f"unknown organ: {organ}")
    return float(np.count_nonzero(v.masks[organ])) * v.voxel_volume


# --- PHV1 serialization ----------------------------------------------------
# Layout (little-endian): magic "PHV1"; u32 nx, ny, nz; f32 sx, sy, sz;
# nx*ny*nz f32 intensities, x varying fastest; three bit-packed masks
# (heart, stomach, uv), each ceil(n/8) bytes, LSB-first within a byte,
# x-fastest voxel order; u32 surface point count; count f32 (x, y, z) triples.


def save_volume(v: Volume, destination) -> None:
    v.validate()
    parts = [MAGIC, _HEADER.pack(*v.dims, *v.spacing)]
    parts.append(np.ascontiguousarray(v.intensity, dtype=np.float32).flatten(order="F").tobytes())
    for organ in ORGANS:
        flat = v.masks[organ].flatten(order="F")
        parts.append(np.packbits(flat, bitorder="little").tobytes())
    parts.append(struct.pack("<I", len(v.surface)))
    parts.append(np.ascontiguousarray(v.surface, dtype=np.float32).tobytes())
    Path(destination).write_bytes(b"".join(parts))


def load_volume(source) -> Volume:
    buf = Path(source).read_bytes()
    if len(buf) < len(MAGIC):
        raise FormatError("truncated file: shorter than magic")
    if buf[:4] != MAGIC:
        raise FormatError(f"bad magic: {buf[:4]!r}")
    off = 4
    if len(buf) < off + _HEADER.size:
        raise FormatError("truncated file: incomplete header")
    nx, ny, nz, sx, sy, sz = _HEADER.unpack_from(buf, off)
    off += _HEADER.size
    if min(nx, ny, nz) < 1:
        raise FormatError("header declares a zero-sized dimension")
    n = nx * ny * nz

    need = 4 * n
    if len(buf) < off + need:
        raise FormatError("truncated file: incomplete intensity payload")
    flat = np.frombuffer(buf, dtype="<f4", count=n, offset=off)
    intensity = flat.reshape((nx, ny, nz), order="F").copy()
    off += need

    mask_bytes = (n + 7) // 8
    masks = {}
    for organ in ORGANS:
        if len(buf) < off + mask_bytes:
            raise FormatError(f"truncated file: incomplete mask payload ({organ})")
        packed = np.frombuffer(buf, dtype=np.uint8, count=mask_bytes, offset=off)
        bits = np.unpackbits(packed, count=n, bitorder="little").astype(bool)
        masks[organ] = bits.reshape((nx, ny, nz), order="F").copy()
        off += mask_bytes

    if len(buf) < off + 4:
        raise FormatError("truncated file: missing surface count")
    (count,) = struct.unpack_from("<I", buf, off)
    off += 4
    need = 12 * count
    if len(buf) < off + need:
        raise FormatError("truncated file: incomplete surface payload")
    surface = np.frombuffer(buf, dtype="<f4", count=3 * count, offset=off).reshape(count, 3).copy()
    off += need
    if off != len(buf):
        raise FormatError(f"trailing bytes after payload: {len(buf) - off}")

    vol = Volume((nx, ny, nz), (sx, sy, sz), intensity, masks, surface)
    vol.validate()
    return vol


def write_manifest(v: Volume, volume_path, provenance: str = "") -> Path:
    """Human-inspection JSON sidecar; informative only, never read back."""
    path = Path(str(volume_path) + ".json")
    path.write_text(
        json.dumps(
            {
                "dims": list(v.dims),
                "spacing": [float(s) for s in v.spacing],
                "organs": list(ORGANS),
                "surface_points": int(len(v.surface)),
                "provenance": provenance,
            },
            indent=2,
        )
        + "\n"
    )
    return path
