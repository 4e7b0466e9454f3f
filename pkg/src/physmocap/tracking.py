"""Double-tracking physics optimizer.

Each frame the physics character is guided toward the estimator's
reference motion by dual PD controllers (joint-angle and joint-position
targets).  Pre-tracking solves for the accelerations and generalized
forces that realize the desired accelerations with an unconstrained root
("rocket" residual wrench); re-tracking re-solves with the identified
contact forces on the right-hand side, a stiffer force regularizer, and
contact-adjusted reference positions.

Both solves eliminate the equation-of-motion equality by substitution,
leaving one stacked sparse least-squares problem

    min_qdd || [A; J; sqrt(beta) M] qdd - [th_des; r_des - Jdot qdot; sqrt(beta)(f - h)] ||^2

with A the joint-angle selector, f = 0 for pre-tracking and f = J_c^T
lambda for re-tracking; solved with LSQR, falling back to a dense solve
for small systems when LSQR fails to converge.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import lsqr

from .dynamics import DynamicsModel, bias_forces, mass_matrix
from .skeleton import (
    CharacterState,
    KinematicPass,
    SkeletonModel,
    endpoint_positions,
    forward_kinematics,
    jacobian_from_pass,
    kinematic_pass,
)


@dataclass
class TrackingConfig:
    """Gains and solver settings; defaults follow the published tuning."""

    kp_theta: float = 3600.0
    kd_theta: float = 60.0
    kp_r: float = 3600.0
    kd_r: float = 60.0
    beta_tau: float = 1e-3 / 80.0
    beta_tau_star: float = 3e-3 / 80.0
    dt: float = 1.0 / 60.0
    d_th: float = 0.15
    pull_factor: float = 0.1
    lsqr_tol: float = 1e-10
    lsqr_max_iter: Optional[int] = None  # None -> 10 * n_dof
    dense_fallback_max_dof: int = 100

    def __post_init__(self) -> None:
        if min(self.kp_theta, self.kd_theta, self.kp_r, self.kd_r) <= 0.0:
            raise ValueError("PD gains must be positive")
        if self.beta_tau <= 0.0 or self.beta_tau_star <= 0.0:
            raise ValueError("force regularizers must be positive")

    @classmethod
    def for_total_mass(cls, total_mass: float, **overrides) -> "TrackingConfig":
        beta = 1e-3 / total_mass
        overrides.setdefault("beta_tau", beta)
        overrides.setdefault("beta_tau_star", 3.0 * beta)
        return cls(**overrides)


@dataclass
class TrackingOutput:
    tau: np.ndarray
    qddot: np.ndarray
    residual_root: np.ndarray  # first six entries of tau
    converged: bool
    used_dense_fallback: bool
    lsqr_iterations: int
    residual_norm: float
    state: Optional[CharacterState] = None


@dataclass
class FrameTerms:
    """Per-frame dynamics quantities shared between the two solves."""

    kin: KinematicPass
    M: np.ndarray
    h: np.ndarray
    J: np.ndarray
    jdot_qdot: np.ndarray

    @property
    def positions(self) -> np.ndarray:
        return self.kin.p

    @property
    def velocities(self) -> np.ndarray:
        return self.kin.pdot


def compute_frame_terms(model: DynamicsModel, state: CharacterState) -> FrameTerms:
    sk = model.skeleton
    kin = kinematic_pass(sk, state.q, state.qdot, np.zeros(sk.n_dof))
    M = mass_matrix(model, state.q, kin=kin)
    h = bias_forces(model, state.q, state.qdot, kin=kin)
    J = jacobian_from_pass(sk, kin)
    return FrameTerms(kin=kin, M=M, h=h, J=J, jdot_qdot=kin.pddot.reshape(-1))


def wrap_angles(d: np.ndarray) -> np.ndarray:
    """Wrap angle differences into (-pi, pi]."""
    return np.pi - np.mod(np.pi - d, 2.0 * np.pi)


def build_reference(
    model: SkeletonModel,
    theta_ref: np.ndarray,
    p_current: np.ndarray,
    v_refined: np.ndarray,
    r_current: np.ndarray,
    s: np.ndarray,
    dt: float,
) -> np.ndarray:
    """Reference joint positions: kinematic targets with stationary
    endpoints pulled toward their current positions."""
    q_ref = np.concatenate([np.zeros(3), theta_ref])
    r_ref = forward_kinematics(model, q_ref, root_override=p_current + v_refined * dt)
    cur = endpoint_positions(model, r_current)
    for i, j in enumerate(model.tracked_endpoints):
        r_ref[j] = r_ref[j] + s[i] * (cur[i] - r_ref[j])
    return r_ref


def dual_pd(
    config: TrackingConfig,
    theta_ref: np.ndarray,
    q: np.ndarray,
    qdot: np.ndarray,
    r_ref: np.ndarray,
    r: np.ndarray,
    rdot: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Desired joint angular and linear accelerations."""
    theta_err = wrap_angles(theta_ref - q[3:])
    theta_dd = config.kp_theta * theta_err - config.kd_theta * qdot[3:]
    r_dd = config.kp_r * (r_ref - r).reshape(-1) - config.kd_r * rdot.reshape(-1)
    return theta_dd, r_dd


def _solve_stacked(
    config: TrackingConfig,
    M: np.ndarray,
    h: np.ndarray,
    J: np.ndarray,
    jdot_qdot: np.ndarray,
    theta_dd_des: np.ndarray,
    r_dd_des: np.ndarray,
    beta: float,
    applied_force: Optional[np.ndarray],
):
    n = M.shape[0]
    sqrt_beta = np.sqrt(beta)
    rows = (n - 3) + J.shape[0] + n
    A = np.zeros((rows, n))
    A[: n - 3, 3:] = np.eye(n - 3)
    A[n - 3 : n - 3 + J.shape[0]] = J
    A[n - 3 + J.shape[0] :] = sqrt_beta * M
    f = -h if applied_force is None else applied_force - h
    b = np.concatenate([theta_dd_des, r_dd_des - jdot_qdot, sqrt_beta * f])
    A_sp = sp.csr_matrix(A)
    max_iter = config.lsqr_max_iter if config.lsqr_max_iter is not None else 10 * n
    x, istop, itn, r1norm = lsqr(
        A_sp, b, atol=config.lsqr_tol, btol=config.lsqr_tol, iter_lim=max_iter
    )[:4]
    converged = istop in (1, 2)
    used_dense = False
    if not converged and n <= config.dense_fallback_max_dof:
        x, *_ = np.linalg.lstsq(A, b, rcond=None)
        r1norm = float(np.linalg.norm(A @ x - b))
        used_dense = True
        converged = bool(np.all(np.isfinite(x)))
    return x, converged, used_dense, int(itn), float(r1norm)


def pretrack(
    model: DynamicsModel,
    config: TrackingConfig,
    state: CharacterState,
    theta_dd_des: np.ndarray,
    r_dd_des: np.ndarray,
    terms: Optional[FrameTerms] = None,
) -> TrackingOutput:
    """Track without contacts; the root carries the full residual wrench."""
    if terms is None:
        terms = compute_frame_terms(model, state)
    qddot, ok, dense, itn, rnorm = _solve_stacked(
        config, terms.M, terms.h, terms.J, terms.jdot_qdot,
        theta_dd_des, r_dd_des, config.beta_tau, None,
    )
    tau = terms.M @ qddot + terms.h
    return TrackingOutput(
        tau=tau,
        qddot=qddot,
        residual_root=tau[:6],
        converged=ok,
        used_dense_fallback=dense,
        lsqr_iterations=itn,
        residual_norm=rnorm,
    )


def retrack(
    model: DynamicsModel,
    config: TrackingConfig,
    state: CharacterState,
    theta_dd_des: np.ndarray,
    r_dd_des_star: np.ndarray,
    jt_lambda: np.ndarray,
    terms: Optional[FrameTerms] = None,
) -> TrackingOutput:
    """Re-track with contact forces applied; ``jt_lambda`` is J_c^T lambda."""
    if terms is None:
        terms = compute_frame_terms(model, state)
    qddot, ok, dense, itn, rnorm = _solve_stacked(
        config, terms.M, terms.h, terms.J, terms.jdot_qdot,
        theta_dd_des, r_dd_des_star, config.beta_tau_star, jt_lambda,
    )
    tau = terms.M @ qddot + terms.h - jt_lambda
    return TrackingOutput(
        tau=tau,
        qddot=qddot,
        residual_root=tau[:6],
        converged=ok,
        used_dense_fallback=dense,
        lsqr_iterations=itn,
        residual_norm=rnorm,
    )


def integrate(state: CharacterState, qddot_star: np.ndarray, dt: float) -> CharacterState:
    """Semi-implicit step: velocity first, position with the new velocity.

    This ordering is what makes the gains kp = 1/dt^2, kd = 1/dt exact
    one-step deadbeat for a tracked joint; integrating the position with
    the stale velocity instead leaves the tracking loop marginally stable
    at those gains (unit-circle eigenvalues) and it never converges.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    qdot_new = state.qdot + qddot_star * dt
    q_new = state.q + qdot_new * dt
    return CharacterState(q=q_new, qdot=qdot_new)
