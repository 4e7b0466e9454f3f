import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from physmocap.rotations import (
    euler_axes,
    euler_to_matrix,
    geodesic_angle,
    log_map,
    matrix_to_euler,
    orthonormal_tangents,
    project_to_rotation,
    rotation_about_axis,
    skew,
    twist_angle,
)


class TestEuler:
    def test_matches_scipy_intrinsic_xyz(self, rng):
        for _ in range(50):
            ang = rng.uniform(-np.pi, np.pi, 3)
            expect = Rotation.from_euler("XYZ", ang).as_matrix()
            np.testing.assert_allclose(euler_to_matrix(ang), expect, atol=1e-12)

    def test_round_trip(self, rng):
        for _ in range(50):
            ang = np.array(
                [
                    rng.uniform(-np.pi, np.pi),
                    rng.uniform(-np.pi / 2 + 0.01, np.pi / 2 - 0.01),
                    rng.uniform(-np.pi, np.pi),
                ]
            )
            back = matrix_to_euler(euler_to_matrix(ang))
            np.testing.assert_allclose(back, ang, atol=1e-9)

    def test_rate_matrix_matches_finite_differences(self, rng):
        # omega_local = axes(angles) @ angle_rates
        eps = 1e-7
        for _ in range(20):
            ang = rng.uniform(-1.2, 1.2, 3)
            rates = rng.normal(0, 1, 3)
            R0 = euler_to_matrix(ang - rates * eps)
            R1 = euler_to_matrix(ang + rates * eps)
            W = (R1 - R0) @ euler_to_matrix(ang).T / (2 * eps)
            omega_fd = np.array([W[2, 1], W[0, 2], W[1, 0]])
            np.testing.assert_allclose(euler_axes(ang) @ rates, omega_fd, atol=1e-6)


class TestLogMap:
    def test_small_angles(self, rng):
        v = rng.normal(0, 1e-6, 3)
        R = Rotation.from_rotvec(v).as_matrix()
        np.testing.assert_allclose(log_map(R), v, atol=1e-12)

    def test_generic(self, rng):
        for _ in range(30):
            v = Rotation.random(random_state=rng).as_rotvec()
            np.testing.assert_allclose(log_map(Rotation.from_rotvec(v).as_matrix()), v, atol=1e-8)

    def test_near_pi(self):
        axis = np.array([1.0, 2.0, -0.5])
        axis /= np.linalg.norm(axis)
        v = axis * (np.pi - 1e-8)
        got = log_map(Rotation.from_rotvec(v).as_matrix())
        assert geodesic_angle(
            Rotation.from_rotvec(got).as_matrix(), Rotation.from_rotvec(v).as_matrix()
        ) < 1e-6


class TestMisc:
    def test_skew_is_cross(self, rng):
        a, b = rng.normal(0, 1, (2, 3))
        np.testing.assert_allclose(skew(a) @ b, np.cross(a, b), atol=1e-15)

    def test_rotation_about_axis(self, rng):
        axis = rng.normal(0, 1, 3)
        axis /= np.linalg.norm(axis)
        ang = rng.uniform(-np.pi, np.pi)
        expect = Rotation.from_rotvec(axis * ang).as_matrix()
        np.testing.assert_allclose(rotation_about_axis(axis, ang), expect, atol=1e-12)

    def test_orthonormal_tangents(self, rng):
        for _ in range(20):
            n = rng.normal(0, 1, 3)
            t1, t2 = orthonormal_tangents(n)
            n /= np.linalg.norm(n)
            for t in (t1, t2):
                assert abs(np.dot(t, n)) < 1e-12
                assert abs(np.linalg.norm(t) - 1.0) < 1e-12
            assert abs(np.dot(t1, t2)) < 1e-12

    def test_project_to_rotation(self, rng):
        R = Rotation.random(random_state=rng).as_matrix()
        noisy = R + rng.normal(0, 1e-3, (3, 3))
        P = project_to_rotation(noisy)
        np.testing.assert_allclose(P.T @ P, np.eye(3), atol=1e-12)
        assert np.linalg.det(P) > 0
        assert geodesic_angle(P, R) < 5e-3

    def test_twist_angle_pure_twist(self, rng):
        axis = np.array([0.0, 1.0, 0.0])
        ang = rng.uniform(-np.pi + 0.1, np.pi - 0.1)
        R = rotation_about_axis(axis, ang)
        assert twist_angle(R, axis) == pytest.approx(ang, abs=1e-12)

    def test_twist_angle_orthogonal_axis_zero(self):
        R = rotation_about_axis(np.array([1.0, 0.0, 0.0]), 0.7)
        assert abs(twist_angle(R, np.array([0.0, 1.0, 0.0]))) < 1e-12
