import math

import numpy as np
import pytest

from nbvplan.geometry import Aabb, CameraPose, Intrinsics


def random_quaternion(rng):
    q = rng.normal(size=4)
    return q / np.linalg.norm(q)


def random_pose(rng, lo=-2.0, hi=2.0):
    return CameraPose(rng.uniform(lo, hi, 3), random_quaternion(rng))


def random_intrinsics(rng):
    return Intrinsics(
        fov_x=rng.uniform(0.3, 2.6),
        fov_y=rng.uniform(0.3, 2.6),
        near=rng.uniform(0.05, 0.5),
        far=rng.uniform(1.0, 8.0),
    )


def oracle_observes(pose, intr, p):
    """Independent camera-space frustum test."""
    R = pose.rotation()
    pc = R.T @ (np.asarray(p, dtype=float) - pose.position)
    x, y, z = pc
    if not (-intr.far <= z <= -intr.near):
        return False
    return (abs(x) <= math.tan(intr.fov_x / 2) * -z
            and abs(y) <= math.tan(intr.fov_y / 2) * -z)


def observe_margin(pose, intr, p):
    """Smallest slack of p against the six analytic constraints (signed)."""
    R = pose.rotation()
    x, y, z = R.T @ (np.asarray(p, dtype=float) - pose.position)
    return min(
        -intr.near - z,
        z + intr.far,
        math.tan(intr.fov_x / 2) * -z - abs(x),
        math.tan(intr.fov_y / 2) * -z - abs(y),
    )


@pytest.fixture
def unit_box():
    return Aabb([0.0, 0.0, 0.0], [1.0, 1.0, 1.0])
