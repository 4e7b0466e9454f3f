"""Walking-based IMU calibration.

One standard step forward, bracketed by two standing phases, is enough to
recover (a) per-sensor heading corrections relative to the reference
sensor, (b) the global extrinsic rotation between the inertial frame and
the body-centric frame, and (c) each sensor-to-bone mounting rotation.

Frame conventions (subscript XY maps Y-frame vectors into X):
  R_IS  sensor -> inertial (what the IMU reports)
  R_IM  body-centric -> inertial
  R_MB  bone -> body-centric (identity in the straight standing pose)
  R_SB  bone -> sensor (the mounting rotation this module recovers)

The acceleration integration is stabilized by a zero-velocity update that
exploits the positive correlation between integrated position and velocity
accumulated during the step; the scalar covariances obey

    sigma_pv' = sigma_pv + sigma_vv * dt,   sigma_vv' = sigma_vv + 1

per sample, starting from zero.  The horizontal-step constraint then
removes the vertical component, and per-sensor step displacements are
rotated onto the reference sensor's to cancel relative heading drift.
Both corrections are insensitive to the scale of the gravity vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .rotations import geodesic_angle, rotation_about_axis

NUM_SENSORS = 6
REFERENCE_SENSOR = 5  # index of the sensor whose heading defines the others'

# Sensor order matches the wearing protocol: forearms, lower legs, head, pelvis.
SENSOR_NAMES = ("lforearm", "rforearm", "llowerleg", "rlowerleg", "head", "pelvis")
SENSOR_JOINTS = ("lelbow", "relbow", "lknee", "rknee", "head", "pelvis")


class CalibrationError(RuntimeError):
    """Protocol violations or degenerate data that require a redo."""


@dataclass
class ImuLog:
    """Raw per-sensor time series: accelerations and angular velocities in
    the sensor frame, orientations sensor -> inertial."""

    t: np.ndarray  # (T,)
    acc: np.ndarray  # (T, S, 3)
    gyro: np.ndarray  # (T, S, 3)
    rot: np.ndarray  # (T, S, 3, 3)

    def __post_init__(self) -> None:
        T = len(self.t)
        if not (self.acc.shape[0] == self.gyro.shape[0] == self.rot.shape[0] == T):
            raise ValueError("sensor streams must share a common length")
        ortho = np.einsum("tsij,tskj->tsik", self.rot, self.rot)
        if not np.allclose(ortho, np.eye(3), atol=1e-5):
            raise ValueError("orientation stream not orthonormal")

    @property
    def n_sensors(self) -> int:
        return self.acc.shape[1]

    @property
    def dt(self) -> float:
        return float(np.mean(np.diff(self.t)))


@dataclass
class CalibrationResult:
    headings: list[np.ndarray]  # heading corrections, identity for the reference
    R_IM: np.ndarray
    R_SB: list[np.ndarray]
    step_displacements: np.ndarray  # (S, 3) horizontal, drift-corrected frame
    residual_velocity: np.ndarray  # (S,) |v| at the end of the step window
    pose_return_deg: np.ndarray  # (S,) stand-pose agreement before/after
    pose_return_ok: bool


def integrate_step(
    acc_sensor: np.ndarray,
    rot: np.ndarray,
    g_inertial: np.ndarray,
    dt: float,
) -> tuple[np.ndarray, np.ndarray, float, float]:
    """Integrate one sensor's world acceleration over a step window.

    Returns (position, velocity, sigma_pv, sigma_vv); starts from rest.
    """
    if len(acc_sensor) == 0:
        raise CalibrationError("empty integration window")
    g = np.asarray(g_inertial, dtype=float)
    p = np.zeros(3)
    v = np.zeros(3)
    sigma_pv = 0.0
    sigma_vv = 0.0
    for a_s, R in zip(acc_sensor, rot):
        a = R @ a_s + g
        p = p + v * dt + 0.5 * a * dt * dt
        v = v + a * dt
        sigma_pv += sigma_vv * dt
        sigma_vv += 1.0
    return p, v, sigma_pv, sigma_vv


def zupt_correct(p: np.ndarray, v: np.ndarray, sigma_pv: float, sigma_vv: float) -> np.ndarray:
    """Posterior position given the zero-velocity observation at stand-still."""
    if sigma_vv <= 0.0:
        raise CalibrationError("zero velocity variance; nothing was integrated")
    return p - (sigma_pv / sigma_vv) * v


def horizontal_project(p: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Remove the gravity-parallel component (the step is on flat ground)."""
    g = np.asarray(g, dtype=float)
    gg = float(np.dot(g, g))
    if gg == 0.0:
        raise CalibrationError("gravity vector must be nonzero")
    return p - (np.dot(p, g) / gg) * g


def heading_align(
    p_bars: np.ndarray, g: np.ndarray, min_displacement: float = 0.05
) -> list[np.ndarray]:
    """Yaw rotations aligning each sensor's step direction to the reference's.

    All displacements are horizontal, so the minimal rotation between any
    pair is exactly a rotation about the gravity axis; it is computed as
    such.  Steps shorter than ``min_displacement`` cannot be aligned.
    """
    p_bars = np.asarray(p_bars, dtype=float)
    norms = np.linalg.norm(p_bars, axis=1)
    if np.any(norms < min_displacement):
        bad = [SENSOR_NAMES[i] if i < len(SENSOR_NAMES) else str(i) for i in np.nonzero(norms < min_displacement)[0]]
        raise CalibrationError(
            f"step displacement too small for sensors {bad}; redo the calibration step"
        )
    axis = np.asarray(g, dtype=float)
    axis = axis / np.linalg.norm(axis)
    ref = p_bars[REFERENCE_SENSOR]
    out = []
    for i in range(p_bars.shape[0]):
        if i == REFERENCE_SENSOR:
            out.append(np.eye(3))
            continue
        a = p_bars[i]
        angle = np.arctan2(float(np.dot(axis, np.cross(a, ref))), float(np.dot(a, ref)))
        out.append(rotation_about_axis(axis, angle))
    return out


def extrinsics(p_bar_ref: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Global extrinsic rotation built from the step direction and gravity.

    Columns: step x gravity (lateral), negative gravity (up), step
    direction (forward).
    """
    g = np.asarray(g, dtype=float)
    g_hat = g / np.linalg.norm(g)
    p_hat = np.asarray(p_bar_ref, dtype=float)
    p_hat = p_hat / np.linalg.norm(p_hat)
    return np.column_stack([np.cross(p_hat, g_hat), -g_hat, p_hat])


def sensor_to_bone(
    R_IS_recorded: np.ndarray,
    R_heading: np.ndarray,
    R_IM: np.ndarray,
    R_MB_standing: np.ndarray,
) -> np.ndarray:
    """Mounting rotation from the heading-corrected standing recording."""
    R_bar = R_heading @ R_IS_recorded
    return R_bar.T @ R_IM @ R_MB_standing


def verify_pose_return(
    R_before: Sequence[np.ndarray],
    R_after: Sequence[np.ndarray],
    tolerance_deg: float = 10.0,
) -> tuple[bool, np.ndarray]:
    """Geodesic per-sensor agreement between the two standing recordings."""
    angles = np.array(
        [np.degrees(geodesic_angle(a, b)) for a, b in zip(R_before, R_after)]
    )
    return bool(np.all(angles <= tolerance_deg)), angles


@dataclass
class StepWindows:
    stand1: slice
    step: slice
    stand2: slice


def detect_stand_step_stand(
    log: ImuLog,
    g_inertial: np.ndarray,
    quiet_threshold: float = 0.3,
    min_stand_duration: float = 0.5,
    smooth_duration: float = 0.15,
) -> StepWindows:
    """Split the log into stand / step / stand by world-acceleration energy.

    A sample is quiet when every sensor's gravity-compensated acceleration
    magnitude (moving-averaged over ``smooth_duration`` to reject sensor
    noise) stays below ``quiet_threshold`` m/s^2.
    """
    g = np.asarray(g_inertial, dtype=float)
    a_world = np.einsum("tsij,tsj->tsi", log.rot, log.acc) + g
    win = max(1, int(round(smooth_duration / log.dt)))
    if win > 1:
        kernel = np.ones(win) / win
        a_world = np.apply_along_axis(
            lambda c: np.convolve(c, kernel, mode="same"), 0, a_world
        )
    quiet = np.all(np.linalg.norm(a_world, axis=2) < quiet_threshold, axis=1)
    min_samples = max(1, int(round(min_stand_duration / log.dt)))

    runs = []  # (start, stop) of quiet runs
    start = None
    for i, flag in enumerate(quiet):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            runs.append((start, i))
            start = None
    if start is not None:
        runs.append((start, len(quiet)))
    runs = [r for r in runs if r[1] - r[0] >= min_samples]
    if len(runs) < 2:
        raise CalibrationError(
            "could not find two standing phases around a step; redo the calibration"
        )
    first, last = runs[0], runs[-1]
    if first[1] >= last[0]:
        raise CalibrationError("no motion between the standing phases")
    return StepWindows(
        stand1=slice(first[0], first[1]),
        step=slice(first[1], last[0]),
        stand2=slice(last[0], last[1]),
    )


def run_calibration(
    log: ImuLog,
    g_inertial: np.ndarray,
    R_MB_standing: Optional[Sequence[np.ndarray]] = None,
    pose_return_tolerance_deg: float = 10.0,
    quiet_threshold: float = 0.3,
) -> CalibrationResult:
    """Full walking calibration over a recorded stand-step-stand log."""
    S = log.n_sensors
    g = np.asarray(g_inertial, dtype=float)
    if R_MB_standing is None:
        R_MB_standing = [np.eye(3)] * S

    win = detect_stand_step_stand(log, g, quiet_threshold=quiet_threshold)
    mid1 = (win.stand1.start + win.stand1.stop) // 2
    mid2 = (win.stand2.start + win.stand2.stop) // 2
    R1 = [log.rot[mid1, i] for i in range(S)]
    R2 = [log.rot[mid2, i] for i in range(S)]

    dt = log.dt
    p_bars = np.zeros((S, 3))
    v_res = np.zeros(S)
    for i in range(S):
        p, v, s_pv, s_vv = integrate_step(
            log.acc[win.step, i], log.rot[win.step, i], g, dt
        )
        p_t = zupt_correct(p, v, s_pv, s_vv)
        p_bars[i] = horizontal_project(p_t, g)
        v_res[i] = float(np.linalg.norm(v))

    headings = heading_align(p_bars, g)
    R_IM = extrinsics(p_bars[REFERENCE_SENSOR], g)
    R_SB = [
        sensor_to_bone(R1[i], headings[i], R_IM, np.asarray(R_MB_standing[i], dtype=float))
        for i in range(S)
    ]
    ok, angles = verify_pose_return(R1, R2, pose_return_tolerance_deg)
    return CalibrationResult(
        headings=headings,
        R_IM=R_IM,
        R_SB=R_SB,
        step_displacements=p_bars,
        residual_velocity=v_res,
        pose_return_deg=angles,
        pose_return_ok=ok,
    )
