"""Camera poses, view frusta and direction math.

Conventions used throughout: cameras look along their local -Z axis with +Y
up and +X right (camera-to-world rotation stored as a unit quaternion in
(w, x, y, z) order). Polar angle theta is measured from world +Y, azimuth phi
from +X in the XZ plane, phi in [0, 2*pi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

UNIT_TOL = 1e-9
# view directions closer than this (vector distance) to +/-Y use the fallback up axis
POLE_EPS = 1e-6
FALLBACK_UP = np.array([0.0, 0.0, 1.0])


class DegenerateDirection(ValueError):
    """Direction requested between coincident points."""


def _as_vec3(v) -> np.ndarray:
    a = np.asarray(v, dtype=np.float64)
    if a.shape != (3,):
        raise ValueError(f"expected 3-vector, got shape {a.shape}")
    return a


@dataclass(frozen=True, eq=False)
class Aabb:
    """Axis-aligned box, min < max componentwise."""

    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "min", _as_vec3(self.min))
        object.__setattr__(self, "max", _as_vec3(self.max))
        if not np.all(self.min < self.max):
            raise ValueError(f"degenerate box: min={self.min} max={self.max}")

    def contains(self, p) -> bool:
        p = np.asarray(p, dtype=np.float64)
        return bool(np.all(p >= self.min) and np.all(p <= self.max))

    def contains_box(self, other: "Aabb") -> bool:
        return bool(np.all(other.min >= self.min) and np.all(other.max <= self.max))

    def diagonal(self) -> float:
        return float(np.linalg.norm(self.max - self.min))

    def size(self) -> np.ndarray:
        return self.max - self.min


def quat_to_rotmat(q) -> np.ndarray:
    """Unit quaternion (w, x, y, z) to 3x3 rotation matrix."""
    w, x, y, z = q
    return np.array([
        [1 - 2 * y * y - 2 * z * z, 2 * x * y - 2 * w * z, 2 * x * z + 2 * w * y],
        [2 * x * y + 2 * w * z, 1 - 2 * x * x - 2 * z * z, 2 * y * z - 2 * w * x],
        [2 * x * z - 2 * w * y, 2 * y * z + 2 * w * x, 1 - 2 * x * x - 2 * y * y],
    ])


def rotmat_to_quat(R: np.ndarray) -> np.ndarray:
    """3x3 rotation matrix to unit quaternion (w, x, y, z), w >= 0."""
    trace = R[0, 0] + R[1, 1] + R[2, 2]
    if trace > 0:
        s = 0.5 / math.sqrt(trace + 1.0)
        w = 0.25 / s
        x = (R[2, 1] - R[1, 2]) * s
        y = (R[0, 2] - R[2, 0]) * s
        z = (R[1, 0] - R[0, 1]) * s
    elif R[0, 0] > R[1, 1] and R[0, 0] > R[2, 2]:
        s = 2.0 * math.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2])
        w = (R[2, 1] - R[1, 2]) / s
        x = 0.25 * s
        y = (R[0, 1] + R[1, 0]) / s
        z = (R[0, 2] + R[2, 0]) / s
    elif R[1, 1] > R[2, 2]:
        s = 2.0 * math.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2])
        w = (R[0, 2] - R[2, 0]) / s
        x = (R[0, 1] + R[1, 0]) / s
        y = 0.25 * s
        z = (R[1, 2] + R[2, 1]) / s
    else:
        s = 2.0 * math.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1])
        w = (R[1, 0] - R[0, 1]) / s
        x = (R[0, 2] + R[2, 0]) / s
        y = (R[1, 2] + R[2, 1]) / s
        z = 0.25 * s
    q = np.array([w, x, y, z])
    q /= np.linalg.norm(q)
    if q[0] < 0 or (q[0] == 0 and (q[1] < 0 or (q[1] == 0 and (q[2] < 0 or (q[2] == 0 and q[3] < 0))))):
        q = -q  # canonical sign so exports are reproducible
    return q


def look_rotations(view_dirs: np.ndarray) -> np.ndarray:
    """Row-wise orientation quaternions turning -Z onto each view direction.

    World +Y is the up hint; directions within POLE_EPS (vector distance) of
    +/-Y fall back to +Z so the frame stays well defined.
    """
    d = np.asarray(view_dirs, dtype=np.float64)
    norms = np.linalg.norm(d, axis=1)
    if np.any(norms == 0.0):
        raise DegenerateDirection("zero view direction")
    d = d / norms[:, None]
    world_up = np.array([0.0, 1.0, 0.0])
    up = np.tile(world_up, (len(d), 1))
    near_pole = np.minimum(np.linalg.norm(d - world_up, axis=1),
                           np.linalg.norm(d + world_up, axis=1)) < POLE_EPS
    up[near_pole] = FALLBACK_UP
    z = -d
    x = np.cross(up, z)
    x = x / np.linalg.norm(x, axis=1)[:, None]
    y = np.cross(z, x)
    return np.array([rotmat_to_quat(np.column_stack([x[i], y[i], z[i]]))
                     for i in range(len(d))])


def look_rotation(view_dir) -> np.ndarray:
    """Quaternion turning -Z onto view_dir with world +Y as up."""
    return look_rotations(_as_vec3(view_dir)[None, :])[0]


@dataclass(frozen=True, eq=False)
class CameraPose:
    """Camera position plus camera-to-world orientation quaternion (w, x, y, z)."""

    position: np.ndarray
    orientation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position", _as_vec3(self.position))
        q = np.asarray(self.orientation, dtype=np.float64)
        if q.shape != (4,):
            raise ValueError("orientation must be a quaternion (w, x, y, z)")
        object.__setattr__(self, "orientation", q)
        if not np.all(np.isfinite(self.position)):
            raise ValueError("non-finite camera position")
        if abs(np.linalg.norm(q) - 1.0) > UNIT_TOL:
            raise ValueError(f"orientation norm {np.linalg.norm(q)} not unit")
        self.position.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "_rot", None)

    def rotation(self) -> np.ndarray:
        """Camera-to-world rotation matrix (columns = camera axes in world)."""
        if self._rot is None:
            object.__setattr__(self, "_rot", quat_to_rotmat(self.orientation))
        return self._rot

    def view_direction(self) -> np.ndarray:
        return -self.rotation()[:, 2]

    @classmethod
    def looking(cls, position, view_dir) -> "CameraPose":
        return cls(position, look_rotation(view_dir))


@dataclass(frozen=True)
class Intrinsics:
    """Pinhole field of view (radians) and near/far clip distances."""

    fov_x: float
    fov_y: float
    near: float
    far: float

    def __post_init__(self):
        if not (0.0 < self.fov_x < math.pi and 0.0 < self.fov_y < math.pi):
            raise ValueError("fov must be in (0, pi)")
        if not (0.0 < self.near < self.far):
            raise ValueError("need 0 < near < far")


@dataclass(frozen=True, eq=False)
class Frustum:
    """Six inward-facing planes; p is inside iff normals @ p + offsets >= 0 for all.

    Plane order: near, far, +x, -x, +y, -y.
    """

    normals: np.ndarray
    offsets: np.ndarray

    def __post_init__(self):
        n = np.asarray(self.normals, dtype=np.float64)
        d = np.asarray(self.offsets, dtype=np.float64)
        if n.shape != (6, 3) or d.shape != (6,):
            raise ValueError("frustum needs 6 planes")
        if np.max(np.abs(np.linalg.norm(n, axis=1) - 1.0)) > UNIT_TOL:
            raise ValueError("plane normals must be unit length")
        object.__setattr__(self, "normals", n)
        object.__setattr__(self, "offsets", d)
        n.setflags(write=False)
        d.setflags(write=False)


def build_frustum(pose: CameraPose, intr: Intrinsics) -> Frustum:
    """Assemble the six world-space planes of the camera's view frustum."""
    tx = math.tan(intr.fov_x / 2.0)
    ty = math.tan(intr.fov_y / 2.0)
    nx = 1.0 / math.sqrt(1.0 + tx * tx)
    ny = 1.0 / math.sqrt(1.0 + ty * ty)
    # camera-space (normal, offset) pairs, inside where n.p + d >= 0
    normals_c = np.array([
        [0.0, 0.0, -1.0],          # near: z <= -near
        [0.0, 0.0, 1.0],           # far:  z >= -far
        [-nx, 0.0, -tx * nx],      # +x side
        [nx, 0.0, -tx * nx],       # -x side
        [0.0, -ny, -ty * ny],      # +y side
        [0.0, ny, -ty * ny],       # -y side
    ])
    offsets_c = np.array([-intr.near, intr.far, 0.0, 0.0, 0.0, 0.0])
    R = pose.rotation()
    normals_w = normals_c @ R.T
    offsets_w = offsets_c - normals_w @ pose.position
    return Frustum(normals_w, offsets_w)


def frustum_corners(pose: CameraPose, intr: Intrinsics) -> np.ndarray:
    """The eight frustum corner points in world space, shape (8, 3)."""
    tx = math.tan(intr.fov_x / 2.0)
    ty = math.tan(intr.fov_y / 2.0)
    corners = []
    for depth in (intr.near, intr.far):
        for sy in (-1.0, 1.0):
            for sx in (-1.0, 1.0):
                corners.append([sx * tx * depth, sy * ty * depth, -depth])
    corners = np.asarray(corners)
    return corners @ pose.rotation().T + pose.position


def observes(frustum: Frustum, p) -> bool:
    """True iff p lies inside the frustum (boundary counts as inside)."""
    p = _as_vec3(p)
    return bool(np.all(frustum.normals @ p + frustum.offsets >= 0.0))


@dataclass(frozen=True, eq=False)
class Direction:
    """Unit direction with polar angle theta (from +Y) and azimuth phi (XZ plane)."""

    vec: np.ndarray
    theta: float
    phi: float

    def __post_init__(self):
        v = _as_vec3(self.vec)
        object.__setattr__(self, "vec", v)
        if abs(np.linalg.norm(v) - 1.0) > UNIT_TOL:
            raise ValueError("direction must be unit length")
        if not (0.0 <= self.theta <= math.pi and 0.0 <= self.phi < 2.0 * math.pi):
            raise ValueError(f"angles out of range: theta={self.theta} phi={self.phi}")
        v.setflags(write=False)

    @classmethod
    def from_vector(cls, v) -> "Direction":
        v = _as_vec3(v)
        n = np.linalg.norm(v)
        if n == 0.0:
            raise DegenerateDirection("zero-length direction")
        theta, phi = _angles_from_raw(v[0], v[1], v[2], n)
        return cls(v / n, float(theta), float(phi))

    @classmethod
    def from_angles(cls, theta: float, phi: float) -> "Direction":
        s = math.sin(theta)
        v = np.array([s * math.cos(phi), math.cos(theta), s * math.sin(phi)])
        return cls(v, theta, phi)


def _angles_from_raw(dx, dy, dz, norms) -> tuple[np.ndarray, np.ndarray]:
    """(theta, phi) from raw (unnormalized) components and their norms.

    phi is taken from the unscaled x/z components (atan2 is scale invariant),
    and equals 0 exactly at the poles. Shared by every angle-producing path
    so binning is bitwise identical however directions are computed.
    """
    theta = np.arccos(np.clip(dy / norms, -1.0, 1.0))
    phi = np.mod(np.arctan2(dz, dx), 2.0 * math.pi)
    # atan2 can return exactly 2*pi after the mod when z is a tiny negative
    phi = np.where(phi >= 2.0 * math.pi, 0.0, phi)
    return theta, phi


def angles_to_point(points: np.ndarray, target) -> tuple[np.ndarray, np.ndarray]:
    """(theta, phi) of the directions from each row of points toward target."""
    target = _as_vec3(target)
    dx = target[0] - points[:, 0]
    dy = target[1] - points[:, 1]
    dz = target[2] - points[:, 2]
    norms = np.sqrt(dx * dx + dy * dy + dz * dz)
    if np.any(norms == 0.0):
        raise DegenerateDirection("point coincides with target")
    return _angles_from_raw(dx, dy, dz, norms)


def directions_to_point(points: np.ndarray, target) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Unit vectors (and angles) from each row of points toward target.

    Returns (vecs, theta, phi). Raises DegenerateDirection if any point
    coincides with target.
    """
    points = np.asarray(points, dtype=np.float64)
    target = _as_vec3(target)
    d = target[None, :] - points
    norms = np.linalg.norm(d, axis=1)
    if np.any(norms == 0.0):
        raise DegenerateDirection("point coincides with target")
    theta, phi = _angles_from_raw(d[:, 0], d[:, 1], d[:, 2], norms)
    return d / norms[:, None], theta, phi


def direction_to_camera(p, pose: CameraPose) -> Direction:
    """Unit direction from point p toward the camera position."""
    vecs, theta, phi = directions_to_point(np.asarray(p, dtype=np.float64)[None, :], pose.position)
    return Direction(vecs[0], float(theta[0]), float(phi[0]))
