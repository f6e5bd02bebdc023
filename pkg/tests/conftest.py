import math

import numpy as np
import pytest

from medgym import Ellipsoid, PhantomSpec, generate_phantom


def sphere_spec(noise: float = 0.0, seed: int = 0) -> PhantomSpec:
    """Stomach is an exact 10 mm sphere at the cuboid center; the other organs
    sit out of its way so analytic checks stay clean."""
    return PhantomSpec(
        dims=(44, 44, 44),
        spacing=(1.0, 1.0, 1.0),
        organs={
            "stomach": Ellipsoid((22.0, 22.0, 22.0), (10.0, 10.0, 10.0), 0.7),
            "heart": Ellipsoid((7.0, 7.0, 7.0), (3.0, 3.0, 3.0), 0.9),
            "uv": Ellipsoid((36.0, 36.0, 8.0), (2.0, 2.0, 4.0), 0.4),
        },
        background_noise=noise,
        seed=seed,
    )


def random_spec(rng: np.random.Generator) -> PhantomSpec:
    """Small random phantom that always satisfies the PhantomSpec invariants."""
    dims = tuple(int(rng.integers(24, 40)) for _ in range(3))
    spacing = tuple(float(rng.uniform(0.8, 1.5)) for _ in range(3))
    ext = [d * s for d, s in zip(dims, spacing)]
    # one organ per octant so they can never overlap
    corners = [(0.25, 0.25, 0.25), (0.75, 0.75, 0.5), (0.25, 0.75, 0.75)]
    organs = {}
    for organ, corner in zip(("heart", "stomach", "uv"), corners):
        center = tuple(c * e for c, e in zip(corner, ext))
        max_ax = min(min(center), min(e - c for c, e in zip(center, ext))) * 0.45
        axes = tuple(float(rng.uniform(0.5 * max_ax, max_ax)) for _ in range(3))
        organs[organ] = Ellipsoid(center, axes, float(rng.uniform(0.3, 1.0)))
    return PhantomSpec(
        dims=dims,
        spacing=spacing,
        organs=organs,
        background_noise=float(rng.uniform(0.0, 0.2)),
        seed=int(rng.integers(0, 2**63)),
    )


@pytest.fixture(scope="session")
def sphere_volume():
    return generate_phantom(sphere_spec())


@pytest.fixture(scope="session")
def speckled_volume():
    return generate_phantom(sphere_spec(noise=0.1, seed=7))


# --- independent rendering oracle ------------------------------------------
# Deliberately scalar and shared-code-free: plain math, per-pixel loops.


def oracle_axes(roll, pitch, yaw):
    def rot(v, axis, a):
        c, s = math.cos(a), math.sin(a)
        x, y, z = v
        if axis == "z":
            return (c * x - s * y, s * x + c * y, z)
        if axis == "y":
            return (c * x + s * z, y, -s * x + c * z)
        return (x, c * y - s * z, s * y + c * z)

    def apply(v):
        return rot(rot(rot(v, "z", yaw), "y", pitch), "x", roll)

    return apply((0, 0, 1)), apply((1, 0, 0)), apply((0, 1, 0))


def oracle_trilinear(volume, px, py, pz):
    nx, ny, nz = volume.dims
    sx, sy, sz = volume.spacing
    if not (0 <= px <= nx * sx and 0 <= py <= ny * sy and 0 <= pz <= nz * sz):
        return 0.0
    vals = []
    idx = []
    for p, s, n in ((px, sx, nx), (py, sy, ny), (pz, sz, nz)):
        f = p / s - 0.5
        f = min(max(f, 0.0), n - 1.0)
        i0 = min(int(math.floor(f)), n - 2)
        i0 = max(i0, 0)
        idx.append((i0, f - i0))
    (x0, tx), (y0, ty), (z0, tz) = idx
    inten = volume.intensity
    acc = 0.0
    for dx in (0, 1):
        for dy in (0, 1):
            for dz in (0, 1):
                w = (tx if dx else 1 - tx) * (ty if dy else 1 - ty) * (tz if dz else 1 - tz)
                acc += w * float(inten[x0 + dx, y0 + dy, z0 + dz])
    return acc


def oracle_render_pixels(volume, loc, angles, rows, cols, extent):
    forward, lateral, _ = oracle_axes(*angles)
    h, w = extent
    out = np.empty((rows, cols))
    for r in range(rows):
        ro = ((r + 0.5) / rows - 0.5) * h
        for c in range(cols):
            co = ((c + 0.5) / cols - 0.5) * w
            px = loc[0] + ro * forward[0] + co * lateral[0]
            py = loc[1] + ro * forward[1] + co * lateral[1]
            pz = loc[2] + ro * forward[2] + co * lateral[2]
            out[r, c] = oracle_trilinear(volume, px, py, pz)
    return out


def oracle_nearest_surface(query, surface):
    """Exhaustive linear-scan argmin with first-wins tie-break."""
    best, best_d2 = None, float("inf")
    for i in range(len(surface)):
        dx = float(surface[i][0]) - query[0]
        dy = float(surface[i][1]) - query[1]
        dz = float(surface[i][2]) - query[2]
        d2 = dx * dx + dy * dy + dz * dz
        if d2 < best_d2:
            best, best_d2 = i, d2
    return best
