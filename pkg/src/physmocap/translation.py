"""Root-velocity assembly and stationary-constrained refinement.

Estimator frames carry the root velocity split into a signed speed along
the gravity direction plus a perpendicular vector, the per-endpoint
stationary probabilities, and the root-frame gravity direction.  The
refinement blends the estimated velocity with the velocity implied by
pinning each stationary endpoint at its previous root-relative position,
using the closed-form minimizer of

    |v~ - v|^2 + sum_i s_i / dt^2 * |fk_i(theta_t) + v~ dt - fk_i(theta_prev)|^2

which is

    v~ = v / (1 + S) + sum_i s_i / ((1 + S) dt) * (fk_i(theta_prev) - fk_i(theta_t)),

with S = sum_i s_i and fk_i the endpoint position at zero root translation.
Probabilities are used as soft weights exactly as given (no thresholding;
thresholds belong to contact identification).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .skeleton import SkeletonModel, endpoint_positions, forward_kinematics

FRAME_DT = 1.0 / 60.0


@dataclass
class EstimatorFrame:
    """One frame of estimator output driving the physics optimizer.

    theta_ref covers all rotational DOFs (root first), length n - 3.
    v_par_mag is the signed speed along the world gravity direction
    (positive = moving with gravity); v_perp is the world-frame component
    orthogonal to gravity.  s holds stationary probabilities for the
    tracked endpoints in model order; g_root is the unit root-frame
    gravity direction.
    """

    t: float
    theta_ref: np.ndarray
    v_par_mag: float
    v_perp: np.ndarray
    s: np.ndarray
    g_root: np.ndarray

    def __post_init__(self) -> None:
        self.theta_ref = np.asarray(self.theta_ref, dtype=float)
        self.v_perp = np.asarray(self.v_perp, dtype=float)
        self.s = np.asarray(self.s, dtype=float)
        self.g_root = np.asarray(self.g_root, dtype=float)
        if np.any(self.s < -1e-9) or np.any(self.s > 1.0 + 1e-9):
            raise ValueError("stationary probabilities must lie in [0, 1]")
        self.s = np.clip(self.s, 0.0, 1.0)


def assemble_velocity(v_par_mag: float, v_perp: np.ndarray, g_world: np.ndarray) -> np.ndarray:
    """World-frame root velocity from its gravity-decomposed parts.

    v_perp is projected onto the plane orthogonal to gravity before the
    parts are summed, so the decomposition is always consistent.
    """
    g = np.asarray(g_world, dtype=float)
    g = g / np.linalg.norm(g)
    v_perp = np.asarray(v_perp, dtype=float)
    v_perp = v_perp - np.dot(v_perp, g) * g
    return v_par_mag * g + v_perp


def endpoint_fk(model: SkeletonModel, theta: np.ndarray) -> np.ndarray:
    """Tracked-endpoint positions at zero root translation."""
    q = np.concatenate([np.zeros(3), theta])
    return endpoint_positions(model, forward_kinematics(model, q))


def refine_velocity(
    model: SkeletonModel,
    theta_t: np.ndarray,
    theta_prev: np.ndarray,
    v: np.ndarray,
    s: np.ndarray,
    dt: float = FRAME_DT,
    fk_t: np.ndarray | None = None,
    fk_prev: np.ndarray | None = None,
) -> np.ndarray:
    """Closed-form stationary-constrained root-velocity refinement.

    ``fk_t``/``fk_prev`` accept precomputed zero-translation endpoint
    positions for the two poses (streaming callers cache the previous one).
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    s = np.asarray(s, dtype=float)
    if fk_t is None:
        fk_t = endpoint_fk(model, theta_t)
    if fk_prev is None:
        fk_prev = endpoint_fk(model, theta_prev)
    total = 1.0 + float(np.sum(s))
    correction = (s[:, None] * (fk_prev - fk_t)).sum(axis=0) / (total * dt)
    return np.asarray(v, dtype=float) / total + correction
