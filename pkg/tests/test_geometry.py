import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import observe_margin, oracle_observes, random_intrinsics, random_pose, random_quaternion
from nbvplan.geometry import (
    CameraPose,
    DegenerateDirection,
    Direction,
    Frustum,
    Intrinsics,
    build_frustum,
    direction_to_camera,
    frustum_corners,
    look_rotation,
    observes,
    quat_to_rotmat,
    rotmat_to_quat,
)

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


def canonical_setup():
    pose = CameraPose([0, 0, 0], IDENTITY)
    intr = Intrinsics(math.pi / 2, math.pi / 2, 0.1, 10.0)
    return pose, intr


class TestCameraPose:
    def test_rejects_non_unit_quaternion(self):
        with pytest.raises(ValueError):
            CameraPose([0, 0, 0], [1.0, 0.0, 0.1, 0.0])

    def test_rejects_non_finite_position(self):
        with pytest.raises(ValueError):
            CameraPose([np.inf, 0, 0], IDENTITY)

    def test_identity_looks_down_negative_z(self):
        pose = CameraPose([1, 2, 3], IDENTITY)
        np.testing.assert_allclose(pose.view_direction(), [0, 0, -1])

    def test_quaternion_matrix_round_trip(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            q = random_quaternion(rng)
            R = quat_to_rotmat(q)
            q2 = rotmat_to_quat(R)
            # same rotation up to sign; the matrix must match
            np.testing.assert_allclose(quat_to_rotmat(q2), R, atol=1e-12)


class TestBuildFrustum:
    def test_canonical_axis_aligned_planes(self):
        pose, intr = canonical_setup()
        f = build_frustum(pose, intr)
        # near plane sits at z = -0.1: boundary point has zero distance
        assert abs(f.normals[0] @ [0, 0, -0.1] + f.offsets[0]) < 1e-12
        assert abs(f.normals[1] @ [0, 0, -10.0] + f.offsets[1]) < 1e-12
        # 90 degree fov: side planes at 45 degrees through the origin
        s = math.sqrt(0.5)
        np.testing.assert_allclose(f.normals[2], [-s, 0, -s], atol=1e-12)
        np.testing.assert_allclose(f.offsets[2:], np.zeros(4), atol=1e-12)

    def test_rotated_180_opens_along_positive_z(self):
        intr = Intrinsics(math.pi / 2, math.pi / 2, 0.1, 10.0)
        pose = CameraPose([0, 0, 0], [0.0, 0.0, 1.0, 0.0])  # 180 deg about +Y
        f = build_frustum(pose, intr)
        assert observes(f, [0, 0, 1])
        assert not observes(f, [0, 0, -1])

    def test_corners_lie_on_their_three_planes(self):
        # corner points computed independently in camera space, then transformed
        rng = np.random.default_rng(11)
        for _ in range(100):
            pose = random_pose(rng)
            intr = random_intrinsics(rng)
            f = build_frustum(pose, intr)
            R = pose.rotation()
            for depth, depth_plane in ((intr.near, 0), (intr.far, 1)):
                for sy, y_plane in ((-1, 5), (1, 4)):
                    for sx, x_plane in ((-1, 3), (1, 2)):
                        corner_cam = np.array([
                            sx * math.tan(intr.fov_x / 2) * depth,
                            sy * math.tan(intr.fov_y / 2) * depth,
                            -depth,
                        ])
                        corner = R @ corner_cam + pose.position
                        for plane in (depth_plane, x_plane, y_plane):
                            dist = f.normals[plane] @ corner + f.offsets[plane]
                            assert abs(dist) <= 1e-6

    def test_frustum_corners_helper_matches_planes(self):
        rng = np.random.default_rng(3)
        pose = random_pose(rng)
        intr = random_intrinsics(rng)
        f = build_frustum(pose, intr)
        for corner in frustum_corners(pose, intr):
            dists = f.normals @ corner + f.offsets
            assert np.min(dists) > -1e-9  # corners are inside (on the boundary)

    def test_plane_normals_unit(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            f = build_frustum(random_pose(rng), random_intrinsics(rng))
            np.testing.assert_allclose(np.linalg.norm(f.normals, axis=1), 1.0, atol=1e-9)


class TestObserves:
    def test_on_axis_point(self):
        pose, intr = canonical_setup()
        f = build_frustum(pose, intr)
        assert observes(f, [0, 0, -1])

    def test_behind_camera(self):
        pose, intr = canonical_setup()
        f = build_frustum(pose, intr)
        assert not observes(f, [0, 0, 1])

    def test_side_plane_boundary_at_unit_depth(self):
        pose, intr = canonical_setup()
        f = build_frustum(pose, intr)
        assert not observes(f, [1.001, 0, -1])
        assert observes(f, [0.999, 0, -1])

    def test_agrees_with_camera_space_oracle(self):
        rng = np.random.default_rng(42)
        checked = 0
        while checked < 1000:
            pose = random_pose(rng)
            intr = random_intrinsics(rng)
            p = rng.uniform(-6, 6, 3)
            if abs(observe_margin(pose, intr, p)) < 1e-6:
                continue
            f = build_frustum(pose, intr)
            assert observes(f, p) == oracle_observes(pose, intr, p)
            checked += 1

    def test_invariant_under_rigid_transform(self):
        rng = np.random.default_rng(9)
        for _ in range(300):
            pose = random_pose(rng)
            intr = random_intrinsics(rng)
            p = rng.uniform(-6, 6, 3)
            if abs(observe_margin(pose, intr, p)) < 1e-5:
                continue
            before = observes(build_frustum(pose, intr), p)
            q = random_quaternion(rng)
            R = quat_to_rotmat(q)
            t = rng.uniform(-3, 3, 3)
            moved_pose = CameraPose(
                R @ pose.position + t,
                rotmat_to_quat(R @ pose.rotation()),
            )
            after = observes(build_frustum(moved_pose, intr), R @ p + t)
            assert before == after


class TestDirection:
    def test_north_pole(self):
        d = direction_to_camera([0, 0, 0], CameraPose([0, 1, 0], IDENTITY))
        np.testing.assert_allclose(d.vec, [0, 1, 0])
        assert d.theta == 0.0
        assert d.phi == 0.0

    def test_equator_azimuth_reference(self):
        d = direction_to_camera([0, 0, 0], CameraPose([1, 0, 0], IDENTITY))
        assert d.theta == pytest.approx(math.pi / 2)
        assert d.phi == 0.0

    def test_south_pole(self):
        d = direction_to_camera([0, 0, 0], CameraPose([0, -2, 0], IDENTITY))
        assert d.theta == pytest.approx(math.pi)
        assert d.phi == 0.0

    def test_degenerate(self):
        with pytest.raises(DegenerateDirection):
            direction_to_camera([1, 1, 1], CameraPose([1, 1, 1], IDENTITY))

    def test_unit_norm(self):
        rng = np.random.default_rng(2)
        for _ in range(500):
            p = rng.uniform(-5, 5, 3)
            pose = random_pose(rng)
            if np.allclose(p, pose.position):
                continue
            d = direction_to_camera(p, pose)
            assert abs(np.linalg.norm(d.vec) - 1.0) <= 1e-9

    @given(theta=st.floats(1e-4, math.pi - 1e-4), phi=st.floats(0.0, 2 * math.pi, exclude_max=True))
    @settings(max_examples=200)
    def test_angle_round_trip_away_from_poles(self, theta, phi):
        d = Direction.from_angles(theta, phi)
        d2 = Direction.from_vector(d.vec)
        assert d2.theta == pytest.approx(theta, abs=1e-6)
        assert abs(d2.phi - phi) % (2 * math.pi) == pytest.approx(0.0, abs=1e-6)


class TestLookRotation:
    def test_view_direction_matches(self):
        rng = np.random.default_rng(21)
        for _ in range(200):
            v = rng.normal(size=3)
            v /= np.linalg.norm(v)
            pose = CameraPose([0, 0, 0], look_rotation(v))
            np.testing.assert_allclose(pose.view_direction(), v, atol=1e-9)

    def test_up_stays_world_up(self):
        pose = CameraPose([0, 0, 0], look_rotation([1.0, 0.2, -0.5]))
        assert pose.rotation()[:, 1] @ [0, 1, 0] > 0.9

    def test_pole_fallback(self):
        for v in ([0.0, 1.0, 0.0], [0.0, -1.0, 0.0]):
            pose = CameraPose([0, 0, 0], look_rotation(v))
            np.testing.assert_allclose(pose.view_direction(), v, atol=1e-12)
