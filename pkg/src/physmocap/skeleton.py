"""Articulated skeleton: coordinate layout, forward kinematics, Jacobians.

Generalized coordinates ``q`` stack the root translation (3, world frame,
meters) followed by intrinsic XYZ Euler angles (radians), three per joint;
joint 0 is the root.  Joints are stored in topological order (parent index
strictly below the joint's own index), so single forward sweeps suffice
everywhere.

Models are immutable after construction and safe to share across threads;
every operation here is a pure function of its arguments.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .rotations import euler_axes, euler_to_matrix

# Canonical stationary-candidate endpoint order used by estimator frames.
ENDPOINT_NAMES = ("lhand", "rhand", "lfoot", "rfoot", "pelvis")


class ConfigurationError(ValueError):
    """Raised for malformed models or mismatched coordinate vectors."""


@dataclass(frozen=True)
class Joint:
    name: str
    parent: int  # -1 for the root
    offset: np.ndarray  # rest offset from parent joint, meters


def _endpoint_kind(name: str) -> str:
    if name.endswith("hand"):
        return "hand"
    if name.endswith("foot"):
        return "foot"
    if name == "pelvis":
        return "pelvis"
    return "other"


@dataclass(frozen=True)
class SkeletonModel:
    """Kinematic tree plus the tracked stationary-candidate endpoints."""

    joints: tuple[Joint, ...]
    tracked_endpoints: tuple[int, ...] = ()
    _children: tuple[tuple[int, ...], ...] = field(init=False, repr=False)
    _ancestor: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        k = len(self.joints)
        if k == 0:
            raise ConfigurationError("empty joint list")
        if self.joints[0].parent != -1:
            raise ConfigurationError("joint 0 must be the root")
        for i, j in enumerate(self.joints[1:], start=1):
            if not 0 <= j.parent < i:
                raise ConfigurationError(
                    f"joint {j.name!r}: parent index {j.parent} breaks topological order"
                )
            if not np.all(np.isfinite(j.offset)):
                raise ConfigurationError(f"joint {j.name!r}: non-finite offset")
        for e in self.tracked_endpoints:
            if not 0 <= e < k:
                raise ConfigurationError(f"endpoint index {e} out of range")
        children: list[list[int]] = [[] for _ in range(k)]
        for i, j in enumerate(self.joints):
            if j.parent >= 0:
                children[j.parent].append(i)
        # ancestor[a, m] == True iff joint a is an ancestor of m or a == m
        anc = np.eye(k, dtype=bool)
        for m in range(1, k):
            anc[:, m] = anc[:, self.joints[m].parent]
            anc[m, m] = True
        object.__setattr__(self, "_children", tuple(tuple(c) for c in children))
        object.__setattr__(self, "_ancestor", anc)

    @property
    def n_joints(self) -> int:
        return len(self.joints)

    @property
    def n_dof(self) -> int:
        return 3 + 3 * len(self.joints)

    @property
    def joint_names(self) -> tuple[str, ...]:
        return tuple(j.name for j in self.joints)

    @property
    def endpoint_kinds(self) -> tuple[str, ...]:
        return tuple(_endpoint_kind(self.joints[e].name) for e in self.tracked_endpoints)

    def joint_index(self, name: str) -> int:
        for i, j in enumerate(self.joints):
            if j.name == name:
                return i
        raise KeyError(name)

    def children(self, j: int) -> tuple[int, ...]:
        return self._children[j]

    def ancestor_mask(self) -> np.ndarray:
        return self._ancestor

    def dof_slice(self, j: int) -> slice:
        """Generalized-coordinate indices of joint j's Euler angles."""
        return slice(3 + 3 * j, 6 + 3 * j)

    def check_q(self, q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if q.shape != (self.n_dof,):
            raise ConfigurationError(f"expected q of length {self.n_dof}, got {q.shape}")
        if not np.all(np.isfinite(q)):
            raise ConfigurationError("non-finite entries in q")
        return q


@dataclass
class CharacterState:
    """Generalized position and velocity of the physics character."""

    q: np.ndarray
    qdot: np.ndarray

    def __post_init__(self) -> None:
        self.q = np.asarray(self.q, dtype=float)
        self.qdot = np.asarray(self.qdot, dtype=float)
        if self.q.shape != self.qdot.shape:
            raise ConfigurationError("q and qdot must have the same length")
        if not (np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.qdot))):
            raise ConfigurationError("non-finite state")

    def copy(self) -> "CharacterState":
        return CharacterState(self.q.copy(), self.qdot.copy())


@dataclass
class KinematicPass:
    """World-frame quantities from one sweep over the tree.

    ``axes[j][:, i]`` is the world direction of joint j's i-th Euler axis.
    Velocity/acceleration fields are None unless the sweep was handed the
    corresponding derivatives (acceleration fields always carry the exact
    velocity-product terms).
    """

    R: np.ndarray  # (k, 3, 3)
    p: np.ndarray  # (k, 3)
    axes: np.ndarray  # (k, 3, 3)
    omega: Optional[np.ndarray] = None  # (k, 3)
    pdot: Optional[np.ndarray] = None  # (k, 3)
    alpha: Optional[np.ndarray] = None  # (k, 3)
    pddot: Optional[np.ndarray] = None  # (k, 3)


def _cross3(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # np.cross has prohibitive overhead for single 3-vectors in hot loops
    return np.array(
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    )


def kinematic_pass(
    model: SkeletonModel,
    q: np.ndarray,
    qdot: Optional[np.ndarray] = None,
    qddot: Optional[np.ndarray] = None,
) -> KinematicPass:
    """Single forward sweep; pass qddot (possibly zeros) for accelerations.

    Accelerations require velocities.  With ``qddot`` all zeros the returned
    ``pddot`` is exactly the velocity-product term of the joint positions.
    """
    q = model.check_q(q)
    k = model.n_joints
    want_vel = qdot is not None
    want_acc = qddot is not None
    if want_acc and not want_vel:
        raise ConfigurationError("accelerations require velocities")
    if want_vel:
        qdot = np.asarray(qdot, dtype=float)
    if want_acc:
        qddot = np.asarray(qddot, dtype=float)

    R = np.empty((k, 3, 3))
    p = np.empty((k, 3))
    axes = np.empty((k, 3, 3))
    omega = np.empty((k, 3)) if want_vel else None
    pdot = np.empty((k, 3)) if want_vel else None
    alpha = np.empty((k, 3)) if want_acc else None
    pddot = np.empty((k, 3)) if want_acc else None

    for j, joint in enumerate(model.joints):
        sl = model.dof_slice(j)
        ang = q[sl]
        R_loc = euler_to_matrix(ang)
        E_loc = euler_axes(ang)
        if j == 0:
            R_par = np.eye(3)
            p[0] = q[0:3] + joint.offset
            R[0] = R_loc
            axes[0] = E_loc
        else:
            par = joint.parent
            R_par = R[par]
            arm = R_par @ joint.offset
            p[j] = p[par] + arm
            R[j] = R_par @ R_loc
            axes[j] = R_par @ E_loc

        if not want_vel:
            continue
        rates = qdot[sl]
        if j == 0:
            w_par = np.zeros(3)
            pdot[0] = qdot[0:3]
        else:
            w_par = omega[joint.parent]
            pdot[j] = pdot[joint.parent] + _cross3(w_par, arm)
        omega[j] = w_par + axes[j] @ rates

        if not want_acc:
            continue
        racc = qddot[sl]
        a1, a2, a3 = axes[j][:, 0], axes[j][:, 1], axes[j][:, 2]
        w_pre = w_par
        adot_term = rates[0] * _cross3(w_pre, a1)
        w_pre = w_pre + rates[0] * a1
        adot_term += rates[1] * _cross3(w_pre, a2)
        w_pre = w_pre + rates[1] * a2
        adot_term += rates[2] * _cross3(w_pre, a3)
        if j == 0:
            alpha[0] = axes[0] @ racc + adot_term
            pddot[0] = qddot[0:3]
        else:
            par = joint.parent
            a_par = alpha[par]
            alpha[j] = a_par + axes[j] @ racc + adot_term
            pddot[j] = (
                pddot[par]
                + _cross3(a_par, arm)
                + _cross3(w_par, _cross3(w_par, arm))
            )

    return KinematicPass(R=R, p=p, axes=axes, omega=omega, pdot=pdot, alpha=alpha, pddot=pddot)


def forward_kinematics(
    model: SkeletonModel,
    q: np.ndarray,
    root_override: Optional[np.ndarray] = None,
) -> np.ndarray:
    """World positions of all joints, shape (k, 3).

    ``root_override`` replaces the root translation stored in ``q``.
    """
    kin = kinematic_pass(model, q)
    pos = kin.p
    if root_override is not None:
        pos = pos + (np.asarray(root_override, dtype=float) - q[0:3])
    return pos


def joint_jacobian(model: SkeletonModel, q: np.ndarray, kin: Optional[KinematicPass] = None) -> np.ndarray:
    """Jacobian J (3k x n) with J @ qdot = stacked world joint velocities."""
    if kin is None:
        kin = kinematic_pass(model, q)
    return jacobian_from_pass(model, kin)


def jacobian_from_pass(model: SkeletonModel, kin: KinematicPass) -> np.ndarray:
    k = model.n_joints
    n = model.n_dof
    # Rotational block: column (j, i) moves joint m by axes[j][:,i] x (p_m - p_j)
    diff = kin.p[None, :, :] - kin.p[:, None, :]  # (j, m, 3)
    ax = kin.axes.transpose(0, 2, 1)  # (j, i, 3)
    crosses = np.cross(ax[:, :, None, :], diff[:, None, :, :])  # (j, i, m, 3)
    crosses *= model.ancestor_mask()[:, None, :, None]
    J = np.zeros((3 * k, n))
    J[:, 3:] = crosses.transpose(2, 3, 0, 1).reshape(3 * k, 3 * k)
    J[:, 0:3] = np.tile(np.eye(3), (k, 1))
    return J


def jdot_qdot(
    model: SkeletonModel,
    q: np.ndarray,
    qdot: np.ndarray,
    kin: Optional[KinematicPass] = None,
) -> np.ndarray:
    """Velocity-product acceleration term, length 3k: rddot = J qddot + this."""
    if kin is None or kin.pddot is None:
        kin = kinematic_pass(model, q, qdot, np.zeros(model.n_dof))
    return kin.pddot.reshape(-1).copy()


def endpoint_positions(model: SkeletonModel, positions: np.ndarray) -> np.ndarray:
    """Rows of ``positions`` for the tracked endpoints, shape (n_endpoints, 3)."""
    return positions[list(model.tracked_endpoints)]


def make_chain(offsets: Sequence[Sequence[float]], names: Optional[Sequence[str]] = None) -> SkeletonModel:
    """Serial chain helper for tests and small experiments."""
    joints = []
    for i, off in enumerate(offsets):
        name = names[i] if names else (f"link{i}" if i else "base")
        joints.append(Joint(name=name, parent=i - 1, offset=np.asarray(off, dtype=float)))
    return SkeletonModel(joints=tuple(joints))
