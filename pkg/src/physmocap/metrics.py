"""Evaluation metrics: pose errors, jerk-based jitter, translation drift.

Pose errors compare joint rotations (geodesic, degrees) and positions (cm)
between two motion streams on the same skeleton.  In the *local* setting
the root position and orientation are aligned per frame before comparison;
in the *global* setting only the root position is aligned.  SIP restricts
the rotation error to hips and shoulders.  Jitter is the mean magnitude of
the third finite difference of joint positions (jerk), reported in
10^3 m/s^3; drift reports the translation error against the cumulative
traveled distance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .rotations import geodesic_angle
from .skeleton import SkeletonModel, kinematic_pass
from .synth import MotionSequence

SIP_JOINTS = ("lhip", "rhip", "lshoulder", "rshoulder")


@dataclass
class EvalReport:
    sip_error_deg: tuple[float, float]  # mean, std over frames
    ang_error_deg: tuple[float, float]
    pos_error_cm: tuple[float, float]
    root_jitter: float  # 10^3 m/s^3
    joint_jitter: float
    drift_distance: np.ndarray
    drift_error: np.ndarray
    drift_percent: Optional[float]
    drift_reference: float
    alignment: str

    def summary(self) -> str:
        lines = [
            f"alignment        {self.alignment}",
            f"SIP error [deg]  {self.sip_error_deg[0]:.3f} +/- {self.sip_error_deg[1]:.3f}",
            f"Ang error [deg]  {self.ang_error_deg[0]:.3f} +/- {self.ang_error_deg[1]:.3f}",
            f"Pos error [cm]   {self.pos_error_cm[0]:.3f} +/- {self.pos_error_cm[1]:.3f}",
            f"Root jitter      {self.root_jitter:.4f} (10^3 m/s^3)",
            f"Joint jitter     {self.joint_jitter:.4f} (10^3 m/s^3)",
        ]
        if self.drift_percent is not None:
            lines.append(
                f"Trans drift      {self.drift_percent:.2f} % at {self.drift_reference:.1f} m"
            )
        else:
            lines.append(f"Trans drift      n/a (distance < {self.drift_reference:.1f} m)")
        return "\n".join(lines)


def _frame_quantities(model: SkeletonModel, q: np.ndarray):
    kin = kinematic_pass(model, q)
    return kin.p, kin.R


def pose_errors(
    pred: MotionSequence,
    truth: MotionSequence,
    model: SkeletonModel,
    alignment: str = "local",
) -> tuple[tuple[float, float], tuple[float, float], tuple[float, float]]:
    """(SIP, angular, positional) errors as per-frame (mean, std)."""
    if pred.n_frames != truth.n_frames:
        raise ValueError("sequences must have equal length")
    if alignment not in ("local", "global"):
        raise ValueError("alignment must be 'local' or 'global'")
    sip_idx = [model.joint_index(n) for n in SIP_JOINTS if n in model.joint_names]
    if not sip_idx:
        sip_idx = list(range(model.n_joints))

    sip, ang, pos = [], [], []
    for t in range(pred.n_frames):
        p_pos, p_rot = _frame_quantities(model, pred.q(t))
        t_pos, t_rot = _frame_quantities(model, truth.q(t))
        if alignment == "local":
            R_align = t_rot[0] @ p_rot[0].T
        else:
            R_align = np.eye(3)
        p_pos = (p_pos - p_pos[0]) @ R_align.T + t_pos[0]
        p_rot = np.einsum("ab,kbc->kac", R_align, p_rot)
        angles = np.degrees(
            [geodesic_angle(p_rot[j], t_rot[j]) for j in range(model.n_joints)]
        )
        sip.append(np.mean([angles[j] for j in sip_idx]))
        ang.append(np.mean(angles))
        pos.append(np.mean(np.linalg.norm(p_pos - t_pos, axis=1)) * 100.0)

    def agg(v):
        return float(np.mean(v)), float(np.std(v))

    return agg(sip), agg(ang), agg(pos)


def jitter(positions: np.ndarray, dt: float) -> float:
    """Mean |jerk| of a position stream, scaled to 10^3 m/s^3.

    ``positions`` is (T, 3) or (T, k, 3); needs at least four frames.
    """
    positions = np.asarray(positions, dtype=float)
    if positions.shape[0] < 4:
        raise ValueError("jitter needs at least 4 frames")
    jerk = positions[3:] - 3.0 * positions[2:-1] + 3.0 * positions[1:-2] - positions[:-3]
    jerk = jerk / dt**3
    mag = np.linalg.norm(jerk, axis=-1)
    return float(np.mean(mag)) * 1e-3


def motion_jitter(model: SkeletonModel, motion: MotionSequence) -> tuple[float, float]:
    """(root, all-joint) jitter of a motion sequence."""
    pos = np.stack([kinematic_pass(model, motion.q(t)).p for t in range(motion.n_frames)])
    return jitter(pos[:, 0, :], motion.dt), jitter(pos, motion.dt)


def translation_drift(
    pred_root: np.ndarray,
    truth_root: np.ndarray,
    reference_distance: float = 7.0,
) -> tuple[np.ndarray, np.ndarray, Optional[float]]:
    """Error-vs-traveled-distance curve and the drift percentage.

    The percentage is error/distance at the first frame whose cumulative
    true path length reaches ``reference_distance`` (None if never).
    """
    pred_root = np.asarray(pred_root, dtype=float)
    truth_root = np.asarray(truth_root, dtype=float)
    if pred_root.shape != truth_root.shape:
        raise ValueError("trajectories must have equal shape")
    steps = np.linalg.norm(np.diff(truth_root, axis=0), axis=1)
    distance = np.concatenate([[0.0], np.cumsum(steps)])
    error = np.linalg.norm(pred_root - truth_root, axis=1)
    reached = np.nonzero(distance >= reference_distance)[0]
    percent = None
    if len(reached):
        i = int(reached[0])
        percent = float(error[i] / distance[i] * 100.0)
    return distance, error, percent


def evaluate(
    pred: MotionSequence,
    truth: MotionSequence,
    model: SkeletonModel,
    alignment: str = "local",
    drift_reference: float = 7.0,
) -> EvalReport:
    sip, ang, pos = pose_errors(pred, truth, model, alignment)
    root_j, joint_j = motion_jitter(model, pred)
    distance, error, percent = translation_drift(pred.root, truth.root, drift_reference)
    return EvalReport(
        sip_error_deg=sip,
        ang_error_deg=ang,
        pos_error_cm=pos,
        root_jitter=root_j,
        joint_jitter=joint_j,
        drift_distance=distance,
        drift_error=error,
        drift_percent=percent,
        drift_reference=drift_reference,
        alignment=alignment,
    )


def drift_curve_csv(distance: np.ndarray, error: np.ndarray) -> str:
    lines = ["distance_m,error_m"]
    lines += [f"{d:.6f},{e:.6f}" for d, e in zip(distance, error)]
    return "\n".join(lines) + "\n"
