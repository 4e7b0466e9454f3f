"""Small SO(3) toolbox shared across the package.

All rotation matrices map local-frame vectors into the parent/world frame
(column convention, ``v_world = R @ v_local``).  Joint orientations use
intrinsic XYZ Euler angles throughout: ``R = Rx(a) @ Ry(b) @ Rz(c)``.
"""

from __future__ import annotations

import numpy as np

_EPS = 1e-12


def skew(v: np.ndarray) -> np.ndarray:
    """Cross-product matrix: skew(v) @ u == np.cross(v, u)."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def rot_x(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def euler_to_matrix(angles: np.ndarray) -> np.ndarray:
    """Intrinsic XYZ Euler angles -> rotation matrix."""
    a, b, c = angles
    ca, sa = np.cos(a), np.sin(a)
    cb, sb = np.cos(b), np.sin(b)
    cc, sc = np.cos(c), np.sin(c)
    # Rx(a) @ Ry(b) @ Rz(c), written out to avoid three matmuls.
    return np.array(
        [
            [cb * cc, -cb * sc, sb],
            [sa * sb * cc + ca * sc, -sa * sb * sc + ca * cc, -sa * cb],
            [-ca * sb * cc + sa * sc, ca * sb * sc + sa * cc, ca * cb],
        ]
    )


def matrix_to_euler(R: np.ndarray) -> np.ndarray:
    """Inverse of euler_to_matrix; pitch clamped to [-pi/2, pi/2]."""
    b = np.arcsin(np.clip(R[0, 2], -1.0, 1.0))
    if abs(R[0, 2]) < 1.0 - 1e-9:
        a = np.arctan2(-R[1, 2], R[2, 2])
        c = np.arctan2(-R[0, 1], R[0, 0])
    else:
        # Gimbal lock: roll/yaw degenerate, put everything into roll.
        a = np.arctan2(R[2, 1], R[1, 1])
        c = 0.0
    return np.array([a, b, c])


def euler_axes(angles: np.ndarray) -> np.ndarray:
    """Instantaneous rotation axes of the intrinsic XYZ parameterization.

    Returns a 3x3 matrix whose columns are the axes (in the frame the Euler
    rotation is applied in) such that the local angular velocity is
    ``axes @ angle_rates``.
    """
    a, b, _ = angles
    ca, sa = np.cos(a), np.sin(a)
    cb, sb = np.cos(b), np.sin(b)
    # col0 = x, col1 = Rx(a) @ y, col2 = Rx(a) @ Ry(b) @ z
    return np.array(
        [
            [1.0, 0.0, sb],
            [0.0, ca, -sa * cb],
            [0.0, sa, ca * cb],
        ]
    )


def rotation_about_axis(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation about a unit axis."""
    axis = np.asarray(axis, dtype=float)
    K = skew(axis)
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)


def geodesic_angle(Ra: np.ndarray, Rb: np.ndarray) -> float:
    """Angle of the relative rotation Ra^T Rb, in radians."""
    tr = np.trace(Ra.T @ Rb)
    return float(np.arccos(np.clip((tr - 1.0) * 0.5, -1.0, 1.0)))


def log_map(R: np.ndarray) -> np.ndarray:
    """Rotation vector (axis * angle) of R."""
    angle = np.arccos(np.clip((np.trace(R) - 1.0) * 0.5, -1.0, 1.0))
    if angle < 1e-10:
        return np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]]) * 0.5
    if np.pi - angle < 1e-6:
        # Near pi: axis from the symmetric part.
        A = (R + np.eye(3)) * 0.5
        axis = np.sqrt(np.maximum(np.diag(A), 0.0))
        # Fix signs using the largest component.
        k = int(np.argmax(axis))
        axis[k] = max(axis[k], _EPS)
        for i in range(3):
            if i != k and A[k, i] < 0.0:
                axis[i] = -axis[i]
        axis /= np.linalg.norm(axis)
        return axis * angle
    w = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    return w * (angle / (2.0 * np.sin(angle)))


def twist_angle(R: np.ndarray, axis: np.ndarray) -> float:
    """Twist component of R about a unit axis (swing-twist decomposition).

    The angle is identical whether the twist factor is extracted on the
    left or on the right of the swing.
    """
    # Quaternion scalar/vector parts without a quaternion dependency.
    tr = np.trace(R)
    w = 0.5 * np.sqrt(max(1.0 + tr, 0.0))
    vec = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    if w > 1e-8:
        vec = vec / (4.0 * w)
    else:  # 180-degree rotation; vec direction from log map
        rv = log_map(R)
        vec = rv / np.linalg.norm(rv)
        w = 0.0
    proj = float(np.dot(vec, axis))
    return 2.0 * np.arctan2(proj, w)


def orthonormal_tangents(normal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic orthonormal basis of the plane orthogonal to ``normal``."""
    n = np.asarray(normal, dtype=float)
    n = n / np.linalg.norm(n)
    k = int(np.argmin(np.abs(n)))
    e = np.zeros(3)
    e[k] = 1.0
    t1 = np.cross(n, e)
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(n, t1)
    return t1, t2


def project_to_rotation(M: np.ndarray) -> np.ndarray:
    """Closest rotation matrix to M (Frobenius norm) via SVD."""
    U, _, Vt = np.linalg.svd(M)
    R = U @ Vt
    if np.linalg.det(R) < 0.0:
        U[:, -1] = -U[:, -1]
        R = U @ Vt
    return R
