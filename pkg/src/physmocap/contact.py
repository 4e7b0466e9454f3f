"""3D contact identification and contact-force estimation.

Contacts live on the five tracked endpoints.  Rule-based marking promotes
stationary endpoints that are already in contact or touching a known
surface; remaining stationary endpoints are potentials.  Potentials are
admitted one by one (nearest to the ground first) only when adding them
cuts the unexplained root residual by more than half, and only become true
contacts after enough consecutive accepted frames, which suppresses
flickers.  When a potential is promoted, a horizontal proxy surface is
recorded at its current height.

Foot and pelvis forces are restricted to a linearized friction cone (a
four-edge pyramid around the negated gravity direction, an inner
approximation of the Coulomb cone); hand forces are unconstrained unless
the hand itself touches the ground.  The force fit

    min |(J^T lam)_{:6} - tau_{:6}|^2 + beta |lam|^2   s.t. cone

is solved as nonnegative least squares over pyramid-edge weights, with
free (sign-split) variables for unconstrained hands.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.optimize import nnls

from .rotations import orthonormal_tangents
from .skeleton import SkeletonModel

FREE = "free"
POTENTIAL = "potential"
CONTACT = "contact"


@dataclass
class ContactConfig:
    beta_lambda: float = 0.4
    mu: float = 0.7
    e_th: float = 400.0
    stationary_threshold: float = 0.7
    height_tolerance: float = 0.05
    counter_threshold: int = 5
    pyramid_edges: int = 4
    pair_distance: float = 0.3  # horizontal proximity for the pairing rule

    def __post_init__(self) -> None:
        if not 0.0 < self.stationary_threshold < 1.0:
            raise ValueError("stationary_threshold must lie in (0, 1)")
        for name in ("beta_lambda", "mu", "e_th", "height_tolerance", "counter_threshold", "pyramid_edges"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class EndpointContact:
    status: str = FREE
    surface_height: float = float("nan")
    counter: int = 0
    force: np.ndarray = field(default_factory=lambda: np.zeros(3))
    constrained: bool = True
    remembered_surface: float = float("nan")

    def copy(self) -> "EndpointContact":
        return replace(self, force=self.force.copy())


@dataclass
class ContactSet:
    """Per-endpoint contact state, owned by one tracking pipeline."""

    endpoints: list[EndpointContact]

    @classmethod
    def empty(cls, n_endpoints: int) -> "ContactSet":
        return cls([EndpointContact() for _ in range(n_endpoints)])

    def copy(self) -> "ContactSet":
        return ContactSet([e.copy() for e in self.endpoints])

    def active(self) -> list[int]:
        return [i for i, e in enumerate(self.endpoints) if e.status == CONTACT]

    def potentials(self) -> list[int]:
        return [i for i, e in enumerate(self.endpoints) if e.status == POTENTIAL]


def pyramid_edges(up: np.ndarray, mu: float, n_edges: int = 4) -> np.ndarray:
    """Edge directions (3 x n_edges) of the friction pyramid around ``up``.

    Edges have unit normal component, so nonnegative edge weights always
    satisfy |tangential| <= mu * normal (inner approximation).
    """
    t1, t2 = orthonormal_tangents(up)
    up = np.asarray(up, dtype=float)
    up = up / np.linalg.norm(up)
    angles = 2.0 * np.pi * np.arange(n_edges) / n_edges
    return np.stack(
        [up + mu * (np.cos(a) * t1 + np.sin(a) * t2) for a in angles], axis=1
    )


def cone_violation(force: np.ndarray, up: np.ndarray, mu: float) -> float:
    """Positive when the force lies outside the Coulomb cone."""
    up = np.asarray(up, dtype=float)
    up = up / np.linalg.norm(up)
    normal = float(np.dot(force, up))
    tangential = float(np.linalg.norm(force - normal * up))
    return max(tangential - mu * normal, -normal)


def _heights(positions: np.ndarray, up: np.ndarray) -> np.ndarray:
    return positions @ np.asarray(up, dtype=float)


def _horizontal_distance(a: np.ndarray, b: np.ndarray, up: np.ndarray) -> float:
    d = a - b
    d = d - np.dot(d, up) * up
    return float(np.linalg.norm(d))


def mark_contacts(
    contacts: ContactSet,
    s: np.ndarray,
    endpoint_pos: np.ndarray,
    ground_height: float,
    config: ContactConfig,
    up: np.ndarray,
) -> ContactSet:
    """Rule-based contact marking; mutates and returns ``contacts``.

    Stationary endpoints keep their contact from the previous frame or gain
    one by touching the session ground / a remembered proxy surface; a
    stationary endpoint adjacent to a contact at the same height is paired
    in directly.  Everything else stationary is a potential; non-stationary
    endpoints are freed and their counters reset.
    """
    up = np.asarray(up, dtype=float)
    heights = _heights(endpoint_pos, up)
    tol = config.height_tolerance
    for i, e in enumerate(contacts.endpoints):
        if s[i] <= config.stationary_threshold:
            e.status = FREE
            e.counter = 0
            e.force = np.zeros(3)
            e.surface_height = float("nan")
            continue
        was_contact = e.status == CONTACT
        on_ground = heights[i] <= ground_height + tol
        on_remembered = (
            np.isfinite(e.remembered_surface)
            and abs(heights[i] - e.remembered_surface) <= tol
        )
        if was_contact:
            e.status = CONTACT
        elif on_ground or on_remembered:
            e.status = CONTACT
            e.surface_height = ground_height if on_ground else e.remembered_surface
            e.remembered_surface = e.surface_height
        else:
            e.status = POTENTIAL

    # Pairing rule: a stationary endpoint close to a contact at the same
    # height is marked in contact as well (single sweep, index order).
    for i, e in enumerate(contacts.endpoints):
        if e.status != POTENTIAL:
            continue
        for j, other in enumerate(contacts.endpoints):
            if i == j or other.status != CONTACT:
                continue
            if (
                abs(heights[i] - heights[j]) <= tol
                and _horizontal_distance(endpoint_pos[i], endpoint_pos[j], up) <= config.pair_distance
            ):
                e.status = CONTACT
                e.surface_height = (
                    other.surface_height if np.isfinite(other.surface_height) else heights[i]
                )
                e.remembered_surface = e.surface_height
                break
    return contacts


def solve_contact_forces(
    tau_root: np.ndarray,
    blocks: Sequence[np.ndarray],
    constrained: Sequence[bool],
    config: ContactConfig,
    up: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Contact forces explaining the root residual wrench.

    ``blocks[i]`` is the 6x3 map from endpoint i's force to the root wrench
    (the first six rows of J^T restricted to that endpoint).  Returns the
    per-contact forces (m, 3) and the remaining residual e (6,).
    """
    tau_root = np.asarray(tau_root, dtype=float)
    m = len(blocks)
    if m == 0:
        return np.zeros((0, 3)), tau_root.copy()
    edges = pyramid_edges(up, config.mu, config.pyramid_edges)
    n_e = edges.shape[1]

    fit_cols = []
    reg_cols = []
    spans = []  # (kind, slice) per contact for reconstruction
    col = 0
    for G, cone in zip(blocks, constrained):
        if cone:
            fit_cols.append(G @ edges)
            reg_cols.append(edges)
            spans.append(("cone", slice(col, col + n_e)))
            col += n_e
        else:
            # free force: split x = u - v to keep the NNLS form
            fit_cols.append(np.hstack([G, -G]))
            reg_cols.append(np.hstack([np.eye(3), -np.eye(3)]))
            spans.append(("free", slice(col, col + 6)))
            col += 6

    A_fit = np.hstack(fit_cols)
    sqrt_beta = np.sqrt(config.beta_lambda)
    # Regularizer acts on the physical forces, not on the edge weights.
    R = np.zeros((3 * m, col))
    for i, (_, sl) in enumerate(spans):
        R[3 * i : 3 * i + 3, sl] = reg_cols[i]
    A = np.vstack([A_fit, sqrt_beta * R])
    b = np.concatenate([tau_root, np.zeros(3 * m)])
    x, _ = nnls(A, b)

    lam = np.zeros((m, 3))
    for i, (kind, sl) in enumerate(spans):
        if kind == "cone":
            lam[i] = edges @ x[sl]
        else:
            w = x[sl]
            lam[i] = w[:3] - w[3:]
    e = tau_root - A_fit @ x
    return lam, e


def residual_after(tau_root: np.ndarray, blocks: Sequence[np.ndarray], lam: np.ndarray) -> tuple[np.ndarray, float]:
    """Exact residual e = tau_{:6} - (J^T lam)_{:6} and its norm."""
    e = np.asarray(tau_root, dtype=float).copy()
    for G, f in zip(blocks, lam):
        e = e - G @ f
    return e, float(np.linalg.norm(e))


def estimate_contacts(
    contacts: ContactSet,
    tau_root: np.ndarray,
    endpoint_pos: np.ndarray,
    endpoint_blocks: np.ndarray,
    endpoint_kinds: Sequence[str],
    ground_height: float,
    config: ContactConfig,
    up: np.ndarray,
) -> tuple[ContactSet, np.ndarray]:
    """Iterative contact acceptance against the pre-tracking residual.

    Solves with the current contacts, then admits potentials in increasing
    distance to the ground while the residual stays above threshold,
    keeping only those that cut it by more than half.  An accepted
    potential increments its hysteresis counter and becomes a true contact
    (with a proxy surface at its current height) once the counter reaches
    the threshold; potentials that were not accepted this frame reset.
    Returns the updated set and the final residual.
    """
    up = np.asarray(up, dtype=float)
    heights = _heights(endpoint_pos, up)

    def is_constrained(i: int) -> bool:
        if endpoint_kinds[i] == "hand":
            return heights[i] <= ground_height + config.height_tolerance
        return True

    active = contacts.active()

    def solve(idx: list[int]):
        blocks = [endpoint_blocks[i] for i in idx]
        cones = [is_constrained(i) for i in idx]
        return solve_contact_forces(tau_root, blocks, cones, config, up)

    lam, e = solve(active)
    e_norm = float(np.linalg.norm(e))

    queue = sorted(contacts.potentials(), key=lambda i: (abs(heights[i] - ground_height), i))
    accepted: set[int] = set()
    for i in queue:
        if e_norm <= config.e_th:
            break
        trial = active + [i]
        lam_t, e_t = solve(trial)
        e_t_norm = float(np.linalg.norm(e_t))
        if e_t_norm < 0.5 * e_norm:
            active = trial
            lam, e, e_norm = lam_t, e_t, e_t_norm
            accepted.add(i)
        # rejected candidates are simply not added; iteration continues

    for i in contacts.potentials():
        e_i = contacts.endpoints[i]
        if i in accepted:
            e_i.counter += 1
            if e_i.counter >= config.counter_threshold:
                e_i.status = CONTACT
                e_i.surface_height = heights[i]
                e_i.remembered_surface = heights[i]
        else:
            e_i.counter = 0

    for i, e_i in enumerate(contacts.endpoints):
        e_i.force = np.zeros(3)
        e_i.constrained = is_constrained(i)
    for pos, i in enumerate(active):
        contacts.endpoints[i].force = lam[pos].copy()
    return contacts, e


def adjust_references(
    r_ref: np.ndarray,
    contacts: ContactSet,
    model: SkeletonModel,
    config,
    up: np.ndarray,
) -> np.ndarray:
    """Pull contact references toward their proxy surfaces.

    Within ``d_th`` above the surface the gap shrinks by ``pull_factor``
    per frame; penetration is clamped to the surface; larger gaps are left
    alone.  Only true contacts with a recorded surface are touched.
    """
    up = np.asarray(up, dtype=float)
    out = r_ref.copy()
    for i, e in enumerate(contacts.endpoints):
        if e.status != CONTACT or not np.isfinite(e.surface_height):
            continue
        j = model.tracked_endpoints[i]
        height = float(np.dot(out[j], up))
        gap = height - e.surface_height
        if gap < 0.0:
            new_height = e.surface_height
        elif gap <= config.d_th:
            new_height = e.surface_height + (1.0 - config.pull_factor) * gap
        else:
            continue
        out[j] = out[j] + (new_height - height) * up
    return out
