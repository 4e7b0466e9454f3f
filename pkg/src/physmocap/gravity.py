"""Root-frame gravity computation and minimal-angle orientation correction.

The corrected orientation keeps the root-frame gravity consistent with the
refined estimate while applying, in the world frame, a pure tilt: the
relative rotation ``R_new @ R_prev.T`` always has its axis orthogonal to
gravity, so no rotation about the gravity axis is ever introduced (heading
is unobservable from gravity alone).
"""

from __future__ import annotations

import warnings

import numpy as np

from .rotations import rotation_about_axis, skew

_ANTIPARALLEL_TOL = 1e-8


def _unit(v: np.ndarray, what: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise ValueError(f"{what} must be nonzero")
    if abs(norm - 1.0) > 1e-6:
        warnings.warn(f"{what} not unit (norm {norm:.6g}); normalizing", stacklevel=3)
    return v / norm


def root_frame_gravity(R_root: np.ndarray, g_world: np.ndarray) -> np.ndarray:
    """Gravity direction expressed in the root frame: R_root^T @ g_world."""
    g = _unit(g_world, "g_world")
    return R_root.T @ g


def minimal_rotation(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Rotation taking ``src`` to ``dst`` with the smallest possible angle.

    The axis is src x dst; for antiparallel inputs the rotation is 180
    degrees about the world basis vector most orthogonal to ``src``
    (projected into src's orthogonal plane), which is deterministic.
    """
    a = _unit(src, "src")
    b = _unit(dst, "dst")
    c = float(np.dot(a, b))
    if c < -1.0 + _ANTIPARALLEL_TOL:
        k = int(np.argmin(np.abs(a)))
        e = np.zeros(3)
        e[k] = 1.0
        axis = e - np.dot(e, a) * a
        axis /= np.linalg.norm(axis)
        return rotation_about_axis(axis, np.pi)
    K = skew(np.cross(a, b))
    return np.eye(3) + K + K @ K / (1.0 + c)


def correct_root_orientation(
    R_prev: np.ndarray, g_refined: np.ndarray, g_prev: np.ndarray
) -> np.ndarray:
    """Re-orient the root so its root-frame gravity becomes ``g_refined``.

    Composes the minimal rotation between the refined and previous
    root-frame gravity directions on the local side, which in the world
    frame amounts to a tilt about an axis orthogonal to gravity.
    """
    return R_prev @ minimal_rotation(g_refined, g_prev)


def reexpress_root_relative(vectors: np.ndarray, R_old: np.ndarray, R_new: np.ndarray) -> np.ndarray:
    """Re-express root-relative vectors after a root-orientation update.

    ``vectors`` has shape (..., 3) in the old root frame; the same physical
    world vectors are returned in the new root frame.
    """
    vectors = np.asarray(vectors, dtype=float)
    T = R_new.T @ R_old
    return vectors @ T.T
