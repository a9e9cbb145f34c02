"""Binarized voxel occupancy: construction, free-space queries, ray clearance.

Voxels are half-open boxes [lo, hi) with flat index ix + nx*(iy + ny*iz)
(x fastest). Points outside the grid box count as not placeable, but a ray
that leaves the box simply reports no hit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import Aabb, Direction


class OriginOccupied(ValueError):
    """Clearance ray started inside an occupied voxel."""


@dataclass(frozen=True, eq=False)
class BoxPrimitive:
    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "min", np.asarray(self.min, dtype=np.float64))
        object.__setattr__(self, "max", np.asarray(self.max, dtype=np.float64))
        if not np.all(self.min < self.max):
            raise ValueError("degenerate box primitive")

    def contains_points(self, pts: np.ndarray) -> np.ndarray:
        return np.all((pts >= self.min) & (pts <= self.max), axis=-1)

    def intersects(self, box: Aabb) -> bool:
        return bool(np.all(self.min <= box.max) and np.all(self.max >= box.min))


@dataclass(frozen=True, eq=False)
class SpherePrimitive:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=np.float64))
        if self.radius <= 0:
            raise ValueError("sphere radius must be positive")

    def contains_points(self, pts: np.ndarray) -> np.ndarray:
        return np.sum((pts - self.center) ** 2, axis=-1) <= self.radius ** 2

    def intersects(self, box: Aabb) -> bool:
        closest = np.clip(self.center, box.min, box.max)
        return bool(np.sum((closest - self.center) ** 2) <= self.radius ** 2)


Primitive = BoxPrimitive | SpherePrimitive


@dataclass(frozen=True, eq=False)
class PrimitiveScene:
    """Boxes and spheres inside a scene box, plus the occupancy resolution."""

    box: Aabb
    resolution: tuple[int, int, int]
    primitives: tuple[Primitive, ...]

    def __post_init__(self):
        res = self.resolution
        if isinstance(res, int):
            res = (res, res, res)
        res = tuple(int(r) for r in res)
        if any(r < 1 for r in res):
            raise ValueError("resolution must be positive")
        object.__setattr__(self, "resolution", res)
        object.__setattr__(self, "primitives", tuple(self.primitives))
        for prim in self.primitives:
            if not prim.intersects(self.box):
                raise ValueError(f"primitive {prim} lies outside the scene box")


class OccupancyGrid:
    """Per-voxel occupied flag over box, immutable after construction."""

    def __init__(self, box: Aabb, resolution, bits: np.ndarray):
        if isinstance(resolution, int):
            resolution = (resolution, resolution, resolution)
        self.box = box
        self.resolution = tuple(int(r) for r in resolution)
        nx, ny, nz = self.resolution
        bits = np.asarray(bits, dtype=bool).reshape(nx * ny * nz)
        bits.setflags(write=False)
        self.bits = bits
        self.voxel_size = box.size() / np.array(self.resolution, dtype=np.float64)

    @property
    def n_voxels(self) -> int:
        nx, ny, nz = self.resolution
        return nx * ny * nz

    def flat_index(self, ix, iy, iz):
        nx, ny, _ = self.resolution
        return ix + nx * (iy + ny * iz)

    def voxel_of(self, p) -> tuple[int, int, int] | None:
        """Integer voxel coordinates of p, or None when p is outside the box."""
        idx = np.floor((np.asarray(p, dtype=np.float64) - self.box.min) / self.voxel_size)
        if np.any(idx < 0) or np.any(idx >= self.resolution):
            return None
        return int(idx[0]), int(idx[1]), int(idx[2])


def voxel_centers(box: Aabb, resolution) -> np.ndarray:
    """(n_voxels, 3) voxel center positions in flat-index order."""
    if isinstance(resolution, int):
        resolution = (resolution, resolution, resolution)
    nx, ny, nz = resolution
    step = box.size() / np.array([nx, ny, nz], dtype=np.float64)
    xs = box.min[0] + (np.arange(nx) + 0.5) * step[0]
    ys = box.min[1] + (np.arange(ny) + 0.5) * step[1]
    zs = box.min[2] + (np.arange(nz) + 0.5) * step[2]
    zz, yy, xx = np.meshgrid(zs, ys, xs, indexing="ij")
    return np.column_stack([xx.ravel(), yy.ravel(), zz.ravel()])


def voxelize(scene: PrimitiveScene) -> OccupancyGrid:
    """Occupancy grid marking voxels whose center lies inside any primitive."""
    centers = voxel_centers(scene.box, scene.resolution)
    occupied = np.zeros(len(centers), dtype=bool)
    for prim in scene.primitives:
        occupied |= prim.contains_points(centers)
    return OccupancyGrid(scene.box, scene.resolution, occupied)


def binarize_density(density: np.ndarray, box: Aabb, threshold: float) -> OccupancyGrid:
    """Occupied where density strictly exceeds threshold; density indexed [ix, iy, iz]."""
    density = np.asarray(density)
    if not np.all(np.isfinite(density)):
        raise ValueError("density grid contains non-finite values")
    if density.ndim == 3:
        resolution = density.shape
        flat = density.transpose(2, 1, 0).ravel()  # x fastest
    else:
        raise ValueError("density must be a 3-D grid")
    return OccupancyGrid(box, resolution, flat > threshold)


def is_free_many(grid: OccupancyGrid, pts: np.ndarray) -> np.ndarray:
    """Vectorized free-space test; outside the box counts as not free."""
    pts = np.asarray(pts, dtype=np.float64)
    idx = np.floor((pts - grid.box.min) / grid.voxel_size).astype(np.int64)
    inside = np.all((idx >= 0) & (idx < np.array(grid.resolution)), axis=1)
    flat = np.where(inside, grid.flat_index(idx[:, 0], idx[:, 1], idx[:, 2]), 0)
    return inside & ~grid.bits[flat]


def is_free(grid: OccupancyGrid, p) -> bool:
    return bool(is_free_many(grid, np.asarray(p, dtype=np.float64)[None, :])[0])


def clearance_along(grid: OccupancyGrid, origin, direction: Direction,
                    max_dist: float) -> float:
    """Distance along the ray to the first occupied voxel boundary.

    Amanatides-Woo traversal over the voxel lattice; returns max_dist when no
    occupied voxel is entered within range or the ray leaves the grid box.
    """
    origin = np.asarray(origin, dtype=np.float64)
    if not is_free(grid, origin):
        raise OriginOccupied(f"clearance ray starts at occupied/outside point {origin}")
    d = direction.vec
    nx, ny, nz = grid.resolution
    bmin = grid.box.min
    vs = grid.voxel_size
    ix, iy, iz = (int(math.floor((origin[a] - bmin[a]) / vs[a])) for a in range(3))
    # plain-float DDA state: (voxel, step, t at next boundary, t per voxel) per axis
    vox = [ix, iy, iz]
    step = [0, 0, 0]
    t_max = [math.inf] * 3
    t_delta = [math.inf] * 3
    for a in range(3):
        if d[a] > 0.0:
            step[a] = 1
            t_max[a] = (bmin[a] + (vox[a] + 1) * vs[a] - origin[a]) / d[a]
            t_delta[a] = vs[a] / d[a]
        elif d[a] < 0.0:
            step[a] = -1
            t_max[a] = (bmin[a] + vox[a] * vs[a] - origin[a]) / d[a]
            t_delta[a] = -vs[a] / d[a]
    dims = (nx, ny, nz)
    bits = grid.bits
    while True:
        a = 0 if t_max[0] <= t_max[1] and t_max[0] <= t_max[2] else (1 if t_max[1] <= t_max[2] else 2)
        t = t_max[a]
        if t > max_dist:
            return max_dist
        vox[a] += step[a]
        if vox[a] < 0 or vox[a] >= dims[a]:
            return max_dist
        if bits[vox[0] + nx * (vox[1] + ny * vox[2])]:
            return t
        t_max[a] += t_delta[a]


# ---------------------------------------------------------------------------
# file formats: scene JSON and raw density import

def scene_to_dict(scene: PrimitiveScene) -> dict:
    prims = []
    for prim in scene.primitives:
        if isinstance(prim, BoxPrimitive):
            prims.append({"type": "box", "min": prim.min.tolist(), "max": prim.max.tolist()})
        else:
            prims.append({"type": "sphere", "center": prim.center.tolist(),
                          "radius": float(prim.radius)})
    return {
        "aabb": {"min": scene.box.min.tolist(), "max": scene.box.max.tolist()},
        "resolution": list(scene.resolution),
        "primitives": prims,
    }


def scene_from_dict(doc: dict) -> PrimitiveScene:
    box = Aabb(doc["aabb"]["min"], doc["aabb"]["max"])
    res = doc["resolution"]
    prims = []
    for p in doc["primitives"]:
        if p["type"] == "box":
            prims.append(BoxPrimitive(p["min"], p["max"]))
        elif p["type"] == "sphere":
            prims.append(SpherePrimitive(p["center"], p["radius"]))
        else:
            raise ValueError(f"unknown primitive type {p['type']!r}")
    return PrimitiveScene(box, tuple(res) if isinstance(res, list) else res, tuple(prims))


def save_scene(scene: PrimitiveScene, path):
    Path(path).write_text(json.dumps(scene_to_dict(scene), indent=2) + "\n")


def load_scene(path) -> PrimitiveScene:
    return scene_from_dict(json.loads(Path(path).read_text()))


def load_density(header_path) -> OccupancyGrid:
    """Binarized occupancy from a density header JSON plus raw float32 file.

    Header fields: dims [nx, ny, nz], aabb {min, max}, threshold, data
    (path of the raw little-endian float32 array, x-fastest, relative to the
    header file).
    """
    header_path = Path(header_path)
    hdr = json.loads(header_path.read_text())
    nx, ny, nz = (int(v) for v in hdr["dims"])
    box = Aabb(hdr["aabb"]["min"], hdr["aabb"]["max"])
    raw = (header_path.parent / hdr["data"]).read_bytes()
    values = np.frombuffer(raw, dtype="<f4")
    if values.size != nx * ny * nz:
        raise ValueError(f"density file holds {values.size} floats, expected {nx * ny * nz}")
    if not np.all(np.isfinite(values)):
        raise ValueError("density grid contains non-finite values")
    return OccupancyGrid(box, (nx, ny, nz), values > float(hdr["threshold"]))
