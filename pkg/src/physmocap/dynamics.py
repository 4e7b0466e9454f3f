"""Floating-base rigid-body dynamics in generalized coordinates.

The equation of motion is ``tau = M(q) qddot + h(q, qdot)`` where the first
six entries of ``tau`` are the residual force and torque acting on the root.
The torque entries are generalized forces about the root joint origin,
projected on the root's instantaneous Euler axes (a plain Cartesian torque
at the identity orientation).
Because the coordinates are root translation plus Euler angles, every
rotational degree of freedom behaves as a revolute joint about an
instantaneous world axis; the mass matrix comes from a composite-rigid-body
sweep over those axes and ``h``/inverse dynamics from a Newton-Euler sweep,
both exact for the Euler-rate parameterization.

Masses, centers of mass, and inertia tensors are per-body constants about
each body's own CoM, expressed in the body frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .skeleton import ConfigurationError, KinematicPass, SkeletonModel, kinematic_pass

GRAVITY_MAGNITUDE = 9.8
DEFAULT_GRAVITY = np.array([0.0, -GRAVITY_MAGNITUDE, 0.0])


@dataclass(frozen=True)
class DynamicsModel:
    """Skeleton plus per-body mass parameters and the gravity vector."""

    skeleton: SkeletonModel
    mass: np.ndarray  # (k,)
    com: np.ndarray  # (k, 3) CoM offset from joint origin, body frame
    inertia: np.ndarray  # (k, 3, 3) about CoM, body frame
    gravity: np.ndarray = field(default_factory=lambda: DEFAULT_GRAVITY.copy())

    def __post_init__(self) -> None:
        k = self.skeleton.n_joints
        if self.mass.shape != (k,) or self.com.shape != (k, 3) or self.inertia.shape != (k, 3, 3):
            raise ConfigurationError("body parameter arrays do not match the skeleton")
        if np.any(self.mass <= 0.0):
            raise ConfigurationError("all body masses must be positive")
        for j in range(k):
            I = self.inertia[j]
            if not np.allclose(I, I.T, atol=1e-9):
                raise ConfigurationError(f"inertia of body {j} not symmetric")
            if np.any(np.linalg.eigvalsh(I) <= 0.0):
                raise ConfigurationError(f"inertia of body {j} not positive definite")

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.mass))

    @property
    def up(self) -> np.ndarray:
        """Unit vector opposing gravity."""
        g = self.gravity
        return -g / np.linalg.norm(g)

    def with_gravity(self, gravity: np.ndarray) -> "DynamicsModel":
        return DynamicsModel(self.skeleton, self.mass, self.com, self.inertia, np.asarray(gravity, dtype=float))


def _body_frame_quantities(model: DynamicsModel, kin: KinematicPass):
    """World-frame CoM positions and inertia tensors for every body."""
    R = kin.R
    com_w = kin.p + np.einsum("kij,kj->ki", R, model.com)
    I_w = np.einsum("kab,kbc,kdc->kad", R, model.inertia, R)
    return com_w, I_w


def _dof_axes_points(model: DynamicsModel, kin: KinematicPass):
    """Per-DOF world rotation axes and axis points (rotational DOFs only)."""
    k = model.skeleton.n_joints
    axes = kin.axes.transpose(0, 2, 1).reshape(3 * k, 3)  # DOF-major
    points = np.repeat(kin.p, 3, axis=0)
    return axes, points


def mass_matrix(model: DynamicsModel, q: np.ndarray, kin: Optional[KinematicPass] = None) -> np.ndarray:
    """Generalized inertia matrix M (n x n), composite-rigid-body sweep."""
    sk = model.skeleton
    if kin is None:
        kin = kinematic_pass(sk, q)
    k = sk.n_joints
    n = sk.n_dof
    com_w, I_w = _body_frame_quantities(model, kin)

    # Composite mass, CoM, and inertia (about composite CoM) per subtree.
    cm = model.mass.copy()
    cmoment = com_w * model.mass[:, None]
    for j in range(k - 1, 0, -1):
        par = sk.joints[j].parent
        cm[par] += cm[j]
        cmoment[par] += cmoment[j]
    ccom = cmoment / cm[:, None]

    cI = I_w.copy()
    # Shift each body's own inertia to its subtree CoM.
    d0 = com_w - ccom
    cI += model.mass[:, None, None] * (
        np.einsum("kl,kl->k", d0, d0)[:, None, None] * np.eye(3) - np.einsum("ka,kb->kab", d0, d0)
    )
    for j in range(k - 1, 0, -1):
        par = sk.joints[j].parent
        d = ccom[j] - ccom[par]
        shift = cm[j] * (np.dot(d, d) * np.eye(3) - np.outer(d, d))
        cI[par] += cI[j] + shift

    axes, points = _dof_axes_points(model, kin)
    body_of_dof = np.repeat(np.arange(k), 3)

    # Wrench (force f, moment n0 about world origin) from unit acceleration
    # of each rotational DOF, with everything distal to it rigid.
    mc = cm[body_of_dof]
    cc = ccom[body_of_dof]
    f_rot = mc[:, None] * np.cross(axes, cc - points)
    n0_rot = np.einsum("dab,db->da", cI[body_of_dof], axes) + np.cross(cc, f_rot)

    # Prismatic root DOFs: unit world-axis acceleration of the whole body.
    f_tra = cm[0] * np.eye(3)
    n0_tra = np.cross(ccom[0], f_tra)  # rows: per DOF

    W = np.zeros((n, 6))
    W[0:3, 0:3] = n0_tra
    W[0:3, 3:6] = f_tra
    W[3:, 0:3] = n0_rot
    W[3:, 3:6] = f_rot

    # Extraction rows: pairing of a DOF's motion screw with a wrench (n0, f).
    E = np.zeros((n, 6))
    E[0:3, 3:6] = np.eye(3)
    E[3:, 0:3] = axes
    E[3:, 3:6] = -np.cross(axes, points)

    G = E @ W.T  # G[d', d] valid when DOF d' supports the subtree of DOF d

    valid = np.zeros((n, n), dtype=bool)
    anc = sk.ancestor_mask()
    valid[0:3, :] = True
    dof_anc = np.repeat(np.repeat(anc, 3, axis=0), 3, axis=1)
    valid[3:, 3:] = dof_anc
    upper = valid & (np.arange(n)[:, None] <= np.arange(n)[None, :])

    M_half = np.where(upper, G, 0.0)
    M = M_half + M_half.T - np.diag(np.diag(M_half))
    return M


def inverse_dynamics(
    model: DynamicsModel,
    q: np.ndarray,
    qdot: np.ndarray,
    qddot: np.ndarray,
    kin: Optional[KinematicPass] = None,
) -> np.ndarray:
    """Generalized forces tau with M qddot + h = tau (Newton-Euler sweep)."""
    sk = model.skeleton
    if kin is None or kin.alpha is None:
        kin = kinematic_pass(sk, q, qdot, qddot)
    k = sk.n_joints
    com_w, I_w = _body_frame_quantities(model, kin)

    # CoM accelerations from joint-origin accelerations.
    arm = com_w - kin.p
    com_acc = (
        kin.pddot
        + np.cross(kin.alpha, arm)
        + np.cross(kin.omega, np.cross(kin.omega, arm))
    )

    F = model.mass[:, None] * (com_acc - model.gravity[None, :])
    Iw_omega = np.einsum("kab,kb->ka", I_w, kin.omega)
    N = np.einsum("kab,kb->ka", I_w, kin.alpha) + np.cross(kin.omega, Iw_omega)

    # Subtree totals: force and moment about the world origin.
    f_s = F.copy()
    n0_s = N + np.cross(com_w, F)
    for j in range(k - 1, 0, -1):
        par = sk.joints[j].parent
        f_s[par] += f_s[j]
        n0_s[par] += n0_s[j]

    axes, points = _dof_axes_points(model, kin)
    body_of_dof = np.repeat(np.arange(k), 3)
    tau = np.empty(sk.n_dof)
    tau[0:3] = f_s[0]
    tau[3:] = np.einsum("da,da->d", axes, n0_s[body_of_dof]) - np.einsum(
        "da,da->d", np.cross(axes, points), f_s[body_of_dof]
    )
    return tau


def bias_forces(
    model: DynamicsModel,
    q: np.ndarray,
    qdot: np.ndarray,
    kin: Optional[KinematicPass] = None,
) -> np.ndarray:
    """Coriolis, centrifugal, and gravity term h(q, qdot)."""
    sk = model.skeleton
    if kin is None or kin.alpha is None:
        kin = kinematic_pass(sk, q, qdot, np.zeros(sk.n_dof))
    return inverse_dynamics(model, q, qdot, np.zeros(sk.n_dof), kin=kin)


def dynamics_terms(model: DynamicsModel, kin: KinematicPass, q: np.ndarray, qdot: np.ndarray):
    """(M, h) sharing one zero-acceleration kinematic pass."""
    M = mass_matrix(model, q, kin=kin)
    h = bias_forces(model, q, qdot, kin=kin)
    return M, h


def box_inertia(mass: float, dims) -> np.ndarray:
    """Inertia of a solid box about its CoM; dims = (dx, dy, dz)."""
    dx, dy, dz = dims
    return np.diag(
        [
            mass * (dy * dy + dz * dz) / 12.0,
            mass * (dx * dx + dz * dz) / 12.0,
            mass * (dx * dx + dy * dy) / 12.0,
        ]
    )
