"""Synthetic motion, estimator streams, and IMU logs for tests and demos.

Scenario generators build humanoid motions with analytically known ground
truth: planted feet are placed by exact two-link leg IK (the bundled
humanoid's leg segments are collinear in the rest pose, so the closed form
is exact), so stationary endpoints really are stationary to machine
precision and every scenario carries per-frame ground-truth contacts.

IMU synthesis follows the specific-force convention: a static sensor reads
the negated gravity direction in its own frame.  World accelerations come
from central second differences of the sensor trajectories; orientation
rates from the matrix log of neighboring orientations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .calibration import ImuLog, SENSOR_JOINTS
from .dynamics import DEFAULT_GRAVITY
from .rotations import log_map, rotation_about_axis
from .skeleton import SkeletonModel, forward_kinematics, kinematic_pass
from .translation import EstimatorFrame

FPS = 60.0
STATIONARY_DISPLACEMENT = 0.002  # meters per frame, synthetic labeling rule


@dataclass
class MotionSequence:
    """Uniformly sampled motion: root translation plus all Euler angles."""

    name: str
    fps: float
    root: np.ndarray  # (T, 3)
    angles: np.ndarray  # (T, 3k)
    contacts: Optional[np.ndarray] = None  # (T, n_endpoints) bool ground truth

    def __post_init__(self) -> None:
        self.root = np.asarray(self.root, dtype=float)
        self.angles = np.asarray(self.angles, dtype=float)
        if self.root.shape[0] != self.angles.shape[0]:
            raise ValueError("root and angle streams must share a length")
        if self.contacts is not None:
            self.contacts = np.asarray(self.contacts, dtype=bool)
            if self.contacts.shape[0] != self.root.shape[0]:
                raise ValueError("contact stream length mismatch")

    @property
    def n_frames(self) -> int:
        return self.root.shape[0]

    @property
    def dt(self) -> float:
        return 1.0 / self.fps

    def q(self, t: int) -> np.ndarray:
        return np.concatenate([self.root[t], self.angles[t]])


# ---------------------------------------------------------------------------
# scenario construction helpers


def _smoothstep(u: np.ndarray) -> np.ndarray:
    """Quintic ease with zero velocity and acceleration at both ends."""
    u = np.clip(u, 0.0, 1.0)
    return u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)


def _leg_ik(dy: float, dz: float, l1: float, l2: float) -> tuple[float, float]:
    """Hip and knee pitch (rotations about +x) placing the foot at
    (0, dy, dz) relative to the hip, knee bending forward."""
    down = -dy
    r2 = down * down + dz * dz
    r = np.sqrt(r2)
    r = min(r, (l1 + l2) * (1.0 - 1e-9))
    cos_gamma = np.clip((l1 * l1 + r2 - l2 * l2) / (2.0 * l1 * r), -1.0, 1.0)
    gamma = np.arccos(cos_gamma)
    theta_line = -np.arctan2(dz, down)
    theta1 = theta_line - gamma
    knee = np.array(
        [0.0, -l1 * np.cos(theta1), -l1 * np.sin(theta1)]
    )
    v = np.array([0.0, dy, dz]) - knee
    theta2 = -np.arctan2(v[2], -v[1])
    return float(theta1), float(theta2 - theta1)


class _HumanoidRig:
    """Cached geometry and index lookups for scenario generation."""

    def __init__(self, model: SkeletonModel):
        self.model = model
        idx = model.joint_index
        self.lhip, self.rhip = idx("lhip"), idx("rhip")
        self.lknee, self.rknee = idx("lknee"), idx("rknee")
        self.lshoulder, self.rshoulder = idx("lshoulder"), idx("rshoulder")
        self.spine1 = idx("spine1")
        self.hip_off = {
            "l": model.joints[self.lhip].offset,
            "r": model.joints[self.rhip].offset,
        }
        self.l1 = float(np.linalg.norm(model.joints[self.lknee].offset))
        ankle = idx("lankle")
        foot = idx("lfoot")
        self.l2 = float(
            np.linalg.norm(model.joints[ankle].offset) + np.linalg.norm(model.joints[foot].offset)
        )
        rest = forward_kinematics(model, np.zeros(model.n_dof))
        self.foot_rest_y = float(rest[idx("lfoot")][1])

    def dof(self, joint: int, axis: int) -> int:
        return 3 + 3 * joint + axis

    def place_foot(self, angles: np.ndarray, side: str, root: np.ndarray, target: np.ndarray) -> None:
        """Set hip/knee pitch so the foot lands at the world target."""
        hip_world = root + self.hip_off[side]
        d = target - hip_world
        hip_pitch, knee_pitch = _leg_ik(float(d[1]), float(d[2]), self.l1, self.l2)
        hip = self.lhip if side == "l" else self.rhip
        knee = self.lknee if side == "l" else self.rknee
        angles[3 * hip] = hip_pitch
        angles[3 * knee] = knee_pitch


def _swing_point(a: np.ndarray, b: np.ndarray, u: float, lift: float) -> np.ndarray:
    """Foot swing trajectory from a to b with a parabolic height bump."""
    s = _smoothstep(np.array(u))[()]
    p = a + (b - a) * s
    p = p.copy()
    p[1] += lift * 4.0 * s * (1.0 - s)
    return p


def _endpoint_index(model: SkeletonModel, name: str) -> int:
    return model.tracked_endpoints.index(model.joint_index(name))


def _origin_normalized(motion: MotionSequence) -> MotionSequence:
    """Shift the whole trajectory so the root starts at (0, 0, 0), matching
    the session initialization convention."""
    motion.root = motion.root - motion.root[0]
    return motion


def stand_scenario(model: SkeletonModel, seconds: float = 10.0, fps: float = FPS) -> MotionSequence:
    T = int(round(seconds * fps))
    k = model.n_joints
    root = np.zeros((T, 3))
    angles = np.zeros((T, 3 * k))
    contacts = np.zeros((T, len(model.tracked_endpoints)), dtype=bool)
    contacts[:, _endpoint_index(model, "lfoot")] = True
    contacts[:, _endpoint_index(model, "rfoot")] = True
    return MotionSequence("stand", fps, root, angles, contacts)


def walk_in_place_scenario(
    model: SkeletonModel, seconds: float = 8.0, fps: float = FPS
) -> MotionSequence:
    rig = _HumanoidRig(model)
    T = int(round(seconds * fps))
    root = np.zeros((T, 3))
    angles = np.zeros((T, 3 * model.n_joints))
    contacts = np.zeros((T, len(model.tracked_endpoints)), dtype=bool)
    lf, rf = _endpoint_index(model, "lfoot"), _endpoint_index(model, "rfoot")
    period = 1.2
    for t in range(T):
        tt = t / fps
        phase = (tt % period) / period
        lift_l = phase < 0.5
        u = (phase % 0.5) / 0.5
        bump = np.sin(np.pi * u) ** 2 * 0.6
        hip = rig.lhip if lift_l else rig.rhip
        knee = rig.lknee if lift_l else rig.rknee
        angles[t, 3 * hip] = -bump
        angles[t, 3 * knee] = 2.0 * bump
        contacts[t, lf] = not lift_l or bump < 1e-3
        contacts[t, rf] = lift_l or bump < 1e-3
    return MotionSequence("walk_in_place", fps, root, angles, contacts)


def walk_scenario(
    model: SkeletonModel,
    steps: int = 8,
    stride: float = 0.5,
    step_time: float = 0.8,
    crouch: float = 0.10,
    fps: float = FPS,
) -> MotionSequence:
    """Straight walk along +z; the stance foot is pinned exactly.

    Total root displacement is exactly ``stride * steps``.
    """
    rig = _HumanoidRig(model)
    lead_in = int(round(0.5 * fps))
    per_step = int(round(step_time * fps))
    T = lead_in * 2 + per_step * steps
    root = np.zeros((T, 3))
    angles = np.zeros((T, 3 * model.n_joints))
    contacts = np.zeros((T, len(model.tracked_endpoints)), dtype=bool)
    lf, rf = _endpoint_index(model, "lfoot"), _endpoint_index(model, "rfoot")
    foot_y = rig.foot_rest_y + crouch  # feet keep ground height; root crouches

    # Foot placements: the foot that is about to swing moves one stride ahead.
    place = {"l": 0.0, "r": 0.0}
    for t in range(T):
        root[t, 1] = -crouch
        i = (t - lead_in) // per_step
        if t < lead_in or i >= steps:
            root[t, 2] = 0.0 if t < lead_in else stride * steps
            a = angles[t]
            rig.place_foot(a, "l", root[t], np.array([rig.hip_off["l"][0], foot_y, place["l"]]))
            rig.place_foot(a, "r", root[t], np.array([rig.hip_off["r"][0], foot_y, place["r"]]))
            contacts[t, lf] = contacts[t, rf] = True
            continue
        u = ((t - lead_in) % per_step) / per_step
        swing = "l" if i % 2 == 0 else "r"
        stance = "r" if swing == "l" else "l"
        # Root advances smoothly by one stride per step.
        root[t, 2] = (i + _smoothstep(np.array(u))[()]) * stride
        src = np.array([rig.hip_off[swing][0], foot_y, place[swing]])
        dst = src.copy()
        dst[2] = place[swing] + (2.0 if 0 < i < steps else 1.0) * stride
        if u >= 1.0 - 1.0 / per_step:
            place[swing] = dst[2]
        foot_sw = _swing_point(src, dst, u, lift=0.08)
        a = angles[t]
        rig.place_foot(a, swing, root[t], foot_sw)
        rig.place_foot(a, stance, root[t], np.array([rig.hip_off[stance][0], foot_y, place[stance]]))
        contacts[t, lf] = swing != "l" or u < 0.02
        contacts[t, rf] = swing != "r" or u < 0.02
    return _origin_normalized(MotionSequence("walk", fps, root, angles, contacts))


def stair_scenario(
    model: SkeletonModel,
    n_steps: int = 3,
    riser: float = 0.15,
    tread: float = 0.35,
    cycle_time: float = 2.4,
    crouch: float = 0.12,
    fps: float = FPS,
) -> MotionSequence:
    """Feet-together stair ascent with a light-placement phase.

    Each cycle: swing the right foot onto the next riser, hold it there
    lightly with the weight still on the left foot, shift the weight up and
    forward (with a small overshoot past the new support), then bring the
    left foot up alongside.  The root gains exactly ``riser`` of height per
    cycle.
    """
    rig = _HumanoidRig(model)
    lead = int(round(1.0 * fps))
    per = int(round(cycle_time * fps))
    tail = int(round(1.0 * fps))
    T = lead + per * n_steps + tail
    root = np.zeros((T, 3))
    angles = np.zeros((T, 3 * model.n_joints))
    contacts = np.zeros((T, len(model.tracked_endpoints)), dtype=bool)
    lf, rf = _endpoint_index(model, "lfoot"), _endpoint_index(model, "rfoot")
    foot_rest = rig.foot_rest_y

    def feet_targets(level_l: int, level_r: int, z_l: float, z_r: float):
        tl = np.array([rig.hip_off["l"][0], foot_rest + level_l * riser, z_l])
        tr = np.array([rig.hip_off["r"][0], foot_rest + level_r * riser, z_r])
        return tl, tr

    # The weight shift splits in two: while the rear foot can stay planted
    # (leg reach), then the rear foot releases and swings up while the root
    # completes its rise.
    shift_hold = 0.5  # fraction of the shift done with both feet planted

    for t in range(T):
        tt = (t - lead) / fps
        if tt < 0.0:
            cyc, u = 0, 0.0
            phase = "stand0"
        else:
            cyc = min(int(tt // cycle_time), n_steps - 1)
            u = (tt - cyc * cycle_time) / cycle_time
            if tt >= n_steps * cycle_time:
                cyc, u, phase = n_steps - 1, 1.0, "done"
            elif u < 0.10:
                phase = "stand"
            elif u < 0.32:
                phase = "swing_r"
            elif u < 0.47:
                phase = "light_hold"
            elif u < 0.72:
                phase = "shift"
            elif u < 0.92:
                phase = "swing_l"
            else:
                phase = "settle"

        base_y = -crouch + cyc * riser
        base_z = cyc * tread
        tl, tr = feet_targets(cyc, cyc, base_z, base_z)
        tr_next = feet_targets(cyc, cyc + 1, base_z, base_z + tread)[1]
        tl_next = feet_targets(cyc + 1, cyc + 1, base_z + tread, base_z + tread)[0]
        l_contact = r_contact = True
        lean = 0.0

        if phase in ("stand0", "stand"):
            root[t] = [0.0, base_y, base_z]
        elif phase == "swing_r":
            w = (u - 0.10) / 0.22
            root[t] = [0.0, base_y, base_z]
            tr = _swing_point(tr, tr_next, w, lift=0.10)
            r_contact = w < 0.02
        elif phase == "light_hold":
            root[t] = [0.0, base_y, base_z]
            tr = tr_next
        elif phase == "shift":
            w = shift_hold * _smoothstep(np.array((u - 0.47) / 0.25))[()]
            root[t] = [0.0, base_y + w * riser, base_z + w * tread]
            tr = tr_next
            lean = 0.35 * w / shift_hold  # lean into the step-up
        elif phase == "swing_l":
            w = (u - 0.72) / 0.20
            ws = shift_hold + (1.0 - shift_hold) * _smoothstep(np.array(w))[()]
            root[t] = [0.0, base_y + ws * riser, base_z + ws * tread]
            tr = tr_next
            tl = _swing_point(tl, tl_next, w, lift=0.10)
            l_contact = False
            lean = 0.35 * (1.0 - _smoothstep(np.array(w))[()])
        else:  # settle / done
            root[t] = [0.0, base_y + riser, base_z + tread]
            tr = tr_next
            tl = tl_next

        a = angles[t]
        a[3 * rig.spine1] = lean
        rig.place_foot(a, "l", root[t], tl)
        rig.place_foot(a, "r", root[t], tr)
        contacts[t, lf] = l_contact
        contacts[t, rf] = r_contact
    return _origin_normalized(MotionSequence("stairs", fps, root, angles, contacts))


def sit_scenario(
    model: SkeletonModel,
    box_height: float = 0.45,
    stand_time: float = 1.5,
    sit_time: float = 2.0,
    hold_time: float = 4.0,
    foot_forward: float = 0.48,
    hips_back: float = 0.26,
    fps: float = FPS,
) -> MotionSequence:
    """Sit down on a box behind the hips; the pelvis ends at box height.

    The stance starts crouched with the feet well ahead of the hips (torso
    pitched to keep the weight over them); sitting slides the hips back
    over the box and reclines slightly, so the far-forward feet cannot
    statically support the seated body on their own.
    """
    rig = _HumanoidRig(model)
    T = int(round((stand_time + sit_time + hold_time) * fps))
    root = np.zeros((T, 3))
    angles = np.zeros((T, 3 * model.n_joints))
    contacts = np.zeros((T, len(model.tracked_endpoints)), dtype=bool)
    lf, rf = _endpoint_index(model, "lfoot"), _endpoint_index(model, "rfoot")
    pv = _endpoint_index(model, "pelvis")
    ground = rig.foot_rest_y  # feet start exactly at ground level
    start_y = -0.14
    # Root height so the pelvis joint sits on the box surface.
    seated_y = ground + box_height
    for t in range(T):
        tt = t / fps
        if tt < stand_time:
            w = 0.0
        elif tt < stand_time + sit_time:
            w = _smoothstep(np.array((tt - stand_time) / sit_time))[()]
        else:
            w = 1.0
        root[t] = [0.0, start_y + w * (seated_y - start_y), w * -hips_back]
        a = angles[t]
        a[3 * rig.spine1] = 0.25 * (1.0 - w) - 0.35 * w  # pitch -> recline
        rig.place_foot(a, "l", root[t], np.array([rig.hip_off["l"][0], ground, foot_forward]))
        rig.place_foot(a, "r", root[t], np.array([rig.hip_off["r"][0], ground, foot_forward]))
        # Gentle arm sway keeps the hands non-stationary while seated.
        sway = 0.10 * np.sin(2.0 * np.pi * 0.8 * tt)
        a[3 * rig.lshoulder + 2] = sway
        a[3 * rig.rshoulder + 2] = -sway
        contacts[t, lf] = contacts[t, rf] = True
        contacts[t, pv] = w >= 0.97
    return _origin_normalized(MotionSequence("sit", fps, root, angles, contacts))


def weight_shift_scenario(
    model: SkeletonModel,
    block_height: float = 0.15,
    block_forward: float = 0.30,
    fps: float = FPS,
) -> MotionSequence:
    """Place the right foot lightly on a block, then shift the weight onto it.

    During the shift the torso leans toward the block and the rear foot
    finally releases (heel-off) as the weight commits to the raised foot.
    """
    rig = _HumanoidRig(model)
    stand, place, hold, shift, final = 1.0, 0.5, 2.0, 1.5, 2.0
    T = int(round((stand + place + hold + shift + final) * fps))
    root = np.zeros((T, 3))
    angles = np.zeros((T, 3 * model.n_joints))
    contacts = np.zeros((T, len(model.tracked_endpoints)), dtype=bool)
    lf, rf = _endpoint_index(model, "lfoot"), _endpoint_index(model, "rfoot")
    ground = rig.foot_rest_y
    crouch = 0.12
    release = 0.55  # rear foot lifts past this point of the shift
    tl_ground = np.array([rig.hip_off["l"][0], ground, 0.0])
    tl_up = np.array([rig.hip_off["l"][0], ground + block_height, block_forward - 0.15])
    tr_ground = np.array([rig.hip_off["r"][0], ground, 0.0])
    tr_block = np.array([rig.hip_off["r"][0], ground + block_height, block_forward])
    for t in range(T):
        tt = t / fps
        root[t] = [0.0, -crouch, 0.0]
        tl, tr = tl_ground, tr_ground
        l_contact = r_contact = True
        lean = 0.0
        if tt < stand:
            pass
        elif tt < stand + place:
            w = (tt - stand) / place
            tr = _swing_point(tr_ground, tr_block, w, lift=0.08)
            r_contact = False
        elif tt < stand + place + hold:
            tr = tr_block  # light placement, weight stays back
        else:
            tr = tr_block
            w = _smoothstep(np.array(min((tt - stand - place - hold) / shift, 1.0)))[()]
            lean = 0.30 * min(w / release, 1.0)
            if w <= release:
                root[t] = [0.0, -crouch + w * 0.06, w * block_forward]
            else:
                v = (w - release) / (1.0 - release)
                root[t] = [
                    0.0,
                    -crouch + release * 0.06 + v * (block_height - release * 0.06),
                    release * block_forward + v * (1.0 - release) * block_forward,
                ]
                tl = _swing_point(tl_ground, tl_up, v, lift=0.06)
                l_contact = False
                lean = 0.30 * (1.0 - v)
        a = angles[t]
        a[3 * rig.spine1] = lean
        rig.place_foot(a, "l", root[t], tl)
        rig.place_foot(a, "r", root[t], tr)
        contacts[t, lf] = l_contact
        contacts[t, rf] = r_contact
    return _origin_normalized(MotionSequence("weight_shift", fps, root, angles, contacts))


def make_scenarios(model: SkeletonModel) -> dict[str, Callable[[], MotionSequence]]:
    """Named scenario generators with their default parameters."""
    return {
        "stand": lambda: stand_scenario(model),
        "walk_in_place": lambda: walk_in_place_scenario(model),
        "walk": lambda: walk_scenario(model),
        "stairs": lambda: stair_scenario(model),
        "sit": lambda: sit_scenario(model),
        "weight_shift": lambda: weight_shift_scenario(model),
    }


# ---------------------------------------------------------------------------
# estimator-frame synthesis


def synthesize_estimator_frames(
    motion: MotionSequence,
    model: SkeletonModel,
    g_world: Optional[np.ndarray] = None,
    angle_noise_deg: float = 0.0,
    velocity_noise: float = 0.0,
    seed: int = 0,
    s_mode: str = "auto",
    smooth_window: int = 5,
) -> list[EstimatorFrame]:
    """Ideal or noised estimator frames from a motion sequence.

    ``angle_noise_deg`` / ``velocity_noise`` add white Gaussian noise to
    the reference angles [deg] and the root velocity [m/s].
    ``s_mode``: 'truth' copies ground-truth contacts into the stationary
    probabilities, 'displacement' labels endpoints moving less than 2 mm
    per frame (then smooths), 'auto' prefers ground truth when present.
    """
    if g_world is None:
        g_world = DEFAULT_GRAVITY
    g_hat = np.asarray(g_world, dtype=float)
    g_hat = g_hat / np.linalg.norm(g_hat)
    T = motion.n_frames
    dt = motion.dt
    rng = np.random.default_rng(seed)
    if s_mode == "auto":
        s_mode = "truth" if motion.contacts is not None else "displacement"

    if s_mode == "truth":
        if motion.contacts is None:
            raise ValueError("motion has no ground-truth contacts")
        s_all = motion.contacts.astype(float)
    else:
        ep = np.zeros((T, len(model.tracked_endpoints), 3))
        for t in range(T):
            pos = forward_kinematics(model, motion.q(t))
            ep[t] = pos[list(model.tracked_endpoints)]
        disp = np.zeros((T, ep.shape[1]))
        disp[1:] = np.linalg.norm(np.diff(ep, axis=0), axis=2)
        disp[0] = disp[1]
        s_all = (disp < STATIONARY_DISPLACEMENT).astype(float)
        if smooth_window > 1:
            kernel = np.ones(smooth_window) / smooth_window
            s_all = np.apply_along_axis(lambda c: np.convolve(c, kernel, mode="same"), 0, s_all)

    noise = np.radians(angle_noise_deg)
    frames = []
    from .rotations import euler_to_matrix

    for t in range(T):
        theta = motion.angles[t].copy()
        if noise > 0.0:
            theta = theta + rng.normal(0.0, noise, theta.shape)
        v = (motion.root[t] - motion.root[t - 1]) / dt if t > 0 else np.zeros(3)
        if velocity_noise > 0.0:
            v = v + rng.normal(0.0, velocity_noise, 3)
        v_par = float(np.dot(v, g_hat))
        v_perp = v - v_par * g_hat
        R_root = euler_to_matrix(motion.angles[t][0:3])
        frames.append(
            EstimatorFrame(
                t=t * dt,
                theta_ref=theta,
                v_par_mag=v_par,
                v_perp=v_perp,
                s=np.clip(s_all[t], 0.0, 1.0),
                g_root=R_root.T @ g_hat,
            )
        )
    return frames


# ---------------------------------------------------------------------------
# IMU synthesis


def synthesize_imu(
    model: SkeletonModel,
    motion: MotionSequence,
    attachments: Optional[Sequence[tuple[str, np.ndarray]]] = None,
    g_inertial: Optional[np.ndarray] = None,
) -> ImuLog:
    """Simulated IMU streams for sensors mounted on skeleton joints.

    ``attachments`` lists (joint name, mounting rotation bone->sensor); the
    default is the six-sensor wearing protocol with identity mountings.
    """
    if motion.n_frames < 3:
        raise ValueError("need at least 3 frames for second differences")
    if attachments is None:
        attachments = [(j, np.eye(3)) for j in SENSOR_JOINTS]
    if g_inertial is None:
        g_inertial = DEFAULT_GRAVITY
    g = np.asarray(g_inertial, dtype=float)
    T = motion.n_frames
    S = len(attachments)
    dt = motion.dt
    joints = [model.joint_index(name) for name, _ in attachments]
    mounts = [np.asarray(R, dtype=float) for _, R in attachments]

    pos = np.zeros((T, S, 3))
    R_is = np.zeros((T, S, 3, 3))
    for t in range(T):
        kin = kinematic_pass(model, motion.q(t))
        for i, (j, R_sb) in enumerate(zip(joints, mounts)):
            pos[t, i] = kin.p[j]
            R_is[t, i] = kin.R[j] @ R_sb.T

    acc_w = np.zeros_like(pos)
    acc_w[1:-1] = (pos[2:] - 2.0 * pos[1:-1] + pos[:-2]) / (dt * dt)
    acc_w[0] = acc_w[1]
    acc_w[-1] = acc_w[-2]

    omega_w = np.zeros((T, S, 3))
    for i in range(S):
        for t in range(1, T - 1):
            omega_w[t, i] = log_map(R_is[t + 1, i] @ R_is[t - 1, i].T) / (2.0 * dt)
    omega_w[0] = omega_w[1]
    omega_w[-1] = omega_w[-2]

    acc_s = np.einsum("tsji,tsj->tsi", R_is, acc_w - g)
    gyro_s = np.einsum("tsji,tsj->tsi", R_is, omega_w)
    t_axis = np.arange(T) * dt
    return ImuLog(t=t_axis, acc=acc_s, gyro=gyro_s, rot=R_is)


def make_calibration_log(
    step_length: float = 0.8,
    step_heading_deg: float = 0.0,
    stand_time: float = 1.0,
    step_time: float = 0.9,
    fps: float = FPS,
    yaw_drift_deg: Optional[Sequence[float]] = None,
    accel_noise: float = 0.0,
    accel_bias: Optional[np.ndarray] = None,
    mounting: Optional[Sequence[np.ndarray]] = None,
    g_inertial: Optional[np.ndarray] = None,
    seed: int = 0,
) -> tuple[ImuLog, dict]:
    """Synthetic stand-step-stand log for six sensors with known truth.

    Sensor trajectories share one smooth forward step plus per-sensor
    transients that start and end at rest; trajectories and their exact
    second derivatives are evaluated analytically.  Heading drift rotates
    a sensor's reported orientation about the gravity axis.  Returns the
    log and a dict of ground-truth calibration quantities.
    """
    if g_inertial is None:
        g_inertial = DEFAULT_GRAVITY
    g = np.asarray(g_inertial, dtype=float)
    up = -g / np.linalg.norm(g)
    heading = np.radians(step_heading_deg)
    fwd = rotation_about_axis(up, heading) @ np.array([0.0, 0.0, 1.0])

    S = 6
    if yaw_drift_deg is None:
        yaw_drift_deg = [0.0] * S
    if mounting is None:
        mounting = [np.eye(3)] * S
    rng = np.random.default_rng(seed)
    dt = 1.0 / fps
    T = int(round((2.0 * stand_time + step_time) * fps))
    t_axis = np.arange(T) * dt
    t0, t1 = stand_time, stand_time + step_time

    base = np.array(
        [
            [0.35, 1.0, 0.0],
            [-0.35, 1.0, 0.0],
            [0.12, 0.45, 0.0],
            [-0.12, 0.45, 0.0],
            [0.0, 1.65, 0.0],
            [0.0, 0.95, 0.0],
        ]
    )
    # Per-sensor transient amplitude (meters) along forward, and swing tilt.
    wiggle_amp = np.array([0.10, -0.10, 0.18, -0.18, 0.03, 0.0])
    swing_amp = np.radians([15.0, -15.0, 25.0, -25.0, 4.0, 3.0])
    lateral = np.cross(up, fwd)

    def step_profile(t: float) -> tuple[float, float]:
        """Quintic smoothstep value and second derivative over [t0, t1]."""
        if t <= t0 or t >= t1:
            return (0.0 if t <= t0 else 1.0), 0.0
        u = (t - t0) / (t1 - t0)
        s = u**3 * (10.0 - 15.0 * u + 6.0 * u * u)
        sdd = (60.0 * u - 180.0 * u**2 + 120.0 * u**3) / (t1 - t0) ** 2
        return s, sdd

    def bump(t: float) -> tuple[float, float]:
        """sin^2 bump over the step window, zero value/derivatives at ends."""
        if t <= t0 or t >= t1:
            return 0.0, 0.0
        w = np.pi / (t1 - t0)
        x = w * (t - t0)
        return float(np.sin(x) ** 2), float(2.0 * w * w * np.cos(2.0 * x))

    acc = np.zeros((T, S, 3))
    gyro = np.zeros((T, S, 3))
    rot = np.zeros((T, S, 3, 3))
    R_bone = np.zeros((T, S, 3, 3))

    for ti, t in enumerate(t_axis):
        s, sdd = step_profile(t)
        b, bdd = bump(t)
        for i in range(S):
            a_w = (step_length * sdd + wiggle_amp[i] * bdd) * fwd
            ang = swing_amp[i] * b
            R_b = rotation_about_axis(lateral, ang)
            R_bone[ti, i] = R_b
            R_true = R_b @ mounting[i].T
            drift = rotation_about_axis(up, np.radians(yaw_drift_deg[i]))
            rot[ti, i] = drift @ R_true
            a_meas = R_true.T @ (a_w - g)
            if accel_bias is not None:
                a_meas = a_meas + R_true.T @ np.asarray(accel_bias, dtype=float)
            if accel_noise > 0.0:
                a_meas = a_meas + rng.normal(0.0, accel_noise, 3)
            acc[ti, i] = a_meas
            gyro[ti, i] = R_true.T @ (swing_amp[i] * _bump_rate(t, t0, t1) * lateral)

    log = ImuLog(t=t_axis, acc=acc, gyro=gyro, rot=rot)
    truth = {
        "step_direction": fwd,
        "step_length": step_length,
        "yaw_drift_deg": np.asarray(yaw_drift_deg, dtype=float),
        "mounting": [np.asarray(m, dtype=float) for m in mounting],
        "base_positions": base,
    }
    return log, truth


def _bump_rate(t: float, t0: float, t1: float) -> float:
    if t <= t0 or t >= t1:
        return 0.0
    w = np.pi / (t1 - t0)
    x = w * (t - t0)
    return float(2.0 * w * np.sin(x) * np.cos(x))
