"""Per-frame capture loop wiring estimator input to the physics optimizer.

Frame order: assemble and refine the root velocity, build references, dual
PD, pre-track, mark and estimate contacts, adjust contact references,
rebuild the desired linear accelerations, re-track, integrate, emit.  The
loop is strictly causal (no future frames) and deterministic for a given
input stream; a frame whose solve fails is flagged and the previous state
carried so live capture never halts.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

log = logging.getLogger(__name__)

from .contact import ContactConfig, ContactSet, adjust_references, estimate_contacts, mark_contacts
from .dynamics import DynamicsModel
from .skeleton import CharacterState, SkeletonModel, forward_kinematics
from .tracking import (
    FrameTerms,
    TrackingConfig,
    compute_frame_terms,
    dual_pd,
    integrate,
    pretrack,
    retrack,
)
from .translation import EstimatorFrame, assemble_velocity, refine_velocity


class NumericalFailure(RuntimeError):
    """Unrecoverable numerical breakdown of the tracking loop."""


@dataclass
class ContactSnapshot:
    status: str
    surface_height: float
    force: np.ndarray


@dataclass
class FrameRecord:
    t: float
    q: np.ndarray
    qdot: np.ndarray
    tau_root: np.ndarray
    e_norm: float
    flagged: bool
    contacts: list[ContactSnapshot]
    solve_ms: float = 0.0  # transient; not serialized


@dataclass
class PipelineStats:
    frames: int
    mean_ms: float
    max_ms: float
    flagged: int


@dataclass
class PipelineConfig:
    skeleton: str = "humanoid"
    gravity: Optional[Sequence[float]] = None
    ground_height: Optional[float] = None
    tracking: TrackingConfig = field(default_factory=TrackingConfig)
    contact: ContactConfig = field(default_factory=ContactConfig)
    seed: int = 0

    @classmethod
    def from_dict(cls, data: dict, total_mass: Optional[float] = None) -> "PipelineConfig":
        data = dict(data or {})
        tracking_over = dict(data.pop("tracking", {}) or {})
        contact_over = dict(data.pop("contact", {}) or {})
        if total_mass is not None and "beta_tau" not in tracking_over:
            tracking = TrackingConfig.for_total_mass(total_mass, **tracking_over)
        else:
            tracking = TrackingConfig(**tracking_over)
        contact = ContactConfig(**contact_over)
        known = {"skeleton", "gravity", "ground_height", "seed"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(tracking=tracking, contact=contact, **{k: data[k] for k in known if k in data})


def initialize_session(
    model: SkeletonModel,
    first_frame: EstimatorFrame,
    up: np.ndarray,
) -> tuple[CharacterState, float]:
    """Start at the origin in the first frame's pose; the ground sits at
    the lowest joint."""
    n = model.n_dof
    q = np.zeros(n)
    q[3:] = first_frame.theta_ref
    state = CharacterState(q=q, qdot=np.zeros(n))
    positions = forward_kinematics(model, q)
    ground = float(np.min(positions @ np.asarray(up, dtype=float)))
    return state, ground


class TrackingSession:
    """Stateful frame-by-frame tracker (used by the service sessions)."""

    def __init__(
        self,
        model: SkeletonModel,
        dynamics: DynamicsModel,
        config: PipelineConfig,
    ):
        self.model = model
        self.dynamics = dynamics
        self.config = config
        self.up = dynamics.up
        g = dynamics.gravity
        self.g_hat = g / np.linalg.norm(g)
        self.state: Optional[CharacterState] = None
        self.ground: float = 0.0
        self.contacts = ContactSet.empty(len(model.tracked_endpoints))
        self.prev_theta: Optional[np.ndarray] = None
        self.frame_times: list[float] = []
        self.flagged = 0
        self._ep_joints = list(model.tracked_endpoints)
        self._ep_kinds = model.endpoint_kinds
        self._prev_ref_fk: Optional[np.ndarray] = None
        self._prev_t = 0.0
        self._warned_dt = False

    def process(self, frame: EstimatorFrame) -> FrameRecord:
        t_start = time.perf_counter()
        if self.state is None:
            self.state, self.ground = initialize_session(self.model, frame, self.up)
            if self.config.ground_height is not None:
                self.ground = float(self.config.ground_height)
            self.prev_theta = frame.theta_ref
            self._prev_t = frame.t
        else:
            # frames are expected at the configured interval
            dt = self.config.tracking.dt
            if abs(frame.t - self._prev_t - dt) > 1e-6 and not self._warned_dt:
                log.warning(
                    "frame interval %.6f s deviates from configured dt %.6f s",
                    frame.t - self._prev_t, dt,
                )
                self._warned_dt = True
            self._prev_t = frame.t
        try:
            record = self._step(frame)
        except NumericalFailure:
            raise
        except Exception:
            record = self._flagged_record(frame)
        if not np.all(np.isfinite(record.q)):
            raise NumericalFailure(f"non-finite state at t={frame.t}")
        elapsed = (time.perf_counter() - t_start) * 1e3
        record.solve_ms = elapsed
        self.frame_times.append(elapsed)
        if record.flagged:
            self.flagged += 1
        return record

    def _flagged_record(self, frame: EstimatorFrame) -> FrameRecord:
        snaps = [
            ContactSnapshot(e.status, e.surface_height, e.force.copy())
            for e in self.contacts.endpoints
        ]
        return FrameRecord(
            t=frame.t,
            q=self.state.q.copy(),
            qdot=self.state.qdot.copy(),
            tau_root=np.zeros(6),
            e_norm=float("nan"),
            flagged=True,
            contacts=snaps,
        )

    def _step(self, frame: EstimatorFrame) -> FrameRecord:
        cfg = self.config
        dt = cfg.tracking.dt
        model, dyn = self.model, self.dynamics
        state = self.state

        v = assemble_velocity(frame.v_par_mag, frame.v_perp, self.g_hat)
        # Zero-translation reference FK serves both the velocity refinement
        # and (shifted by the updated root) the tracking references.
        ref_pos = forward_kinematics(
            model, np.concatenate([np.zeros(3), frame.theta_ref])
        )
        ref_fk = ref_pos[self._ep_joints]
        prev_fk = self._prev_ref_fk if self._prev_ref_fk is not None else ref_fk
        v_ref = refine_velocity(
            model, frame.theta_ref, self.prev_theta, v, frame.s, dt,
            fk_t=ref_fk, fk_prev=prev_fk,
        )
        self.prev_theta = frame.theta_ref
        self._prev_ref_fk = ref_fk

        terms: FrameTerms = compute_frame_terms(dyn, state)
        r = terms.positions
        rdot = terms.velocities
        r_ref = ref_pos + (r[0] + v_ref * dt)
        cur_ep = r[self._ep_joints]
        for i, j in enumerate(self._ep_joints):
            r_ref[j] = r_ref[j] + frame.s[i] * (cur_ep[i] - r_ref[j])
        theta_dd, r_dd = dual_pd(cfg.tracking, frame.theta_ref, state.q, state.qdot, r_ref, r, rdot)

        pre = pretrack(dyn, cfg.tracking, state, theta_dd, r_dd, terms=terms)
        if not pre.converged:
            return self._flagged_record(frame)

        ep_pos = cur_ep
        self.contacts = mark_contacts(
            self.contacts, frame.s, ep_pos, self.ground, cfg.contact, self.up
        )
        blocks = np.stack([terms.J[3 * j : 3 * j + 3, 0:6].T for j in self._ep_joints])
        self.contacts, e_vec = estimate_contacts(
            self.contacts, pre.residual_root, ep_pos, blocks,
            self._ep_kinds, self.ground, cfg.contact, self.up,
        )
        e_norm = float(np.linalg.norm(e_vec))

        r_ref_star = adjust_references(r_ref, self.contacts, model, cfg.tracking, self.up)
        r_dd_star = (
            cfg.tracking.kp_r * (r_ref_star - r).reshape(-1)
            - cfg.tracking.kd_r * rdot.reshape(-1)
        )

        jt_lambda = np.zeros(model.n_dof)
        for i, j in enumerate(self._ep_joints):
            f = self.contacts.endpoints[i].force
            if np.any(f):
                jt_lambda += terms.J[3 * j : 3 * j + 3, :].T @ f

        re = retrack(dyn, cfg.tracking, state, theta_dd, r_dd_star, jt_lambda, terms=terms)
        if not re.converged:
            return self._flagged_record(frame)

        self.state = integrate(state, re.qddot, dt)
        snaps = [
            ContactSnapshot(e.status, e.surface_height, e.force.copy())
            for e in self.contacts.endpoints
        ]
        return FrameRecord(
            t=frame.t,
            q=self.state.q.copy(),
            qdot=self.state.qdot.copy(),
            tau_root=re.residual_root.copy(),
            e_norm=e_norm,
            flagged=False,
            contacts=snaps,
        )

    def stats(self) -> PipelineStats:
        times = self.frame_times or [0.0]
        return PipelineStats(
            frames=len(self.frame_times),
            mean_ms=float(np.mean(times)),
            max_ms=float(np.max(times)),
            flagged=self.flagged,
        )


def run_pipeline(
    model: SkeletonModel,
    dynamics: DynamicsModel,
    config: PipelineConfig,
    frames: Iterable[EstimatorFrame],
) -> tuple[list[FrameRecord], PipelineStats]:
    session = TrackingSession(model, dynamics, config)
    records = [session.process(f) for f in frames]
    return records, session.stats()
