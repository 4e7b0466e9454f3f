import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from physmocap.metrics import (
    drift_curve_csv,
    evaluate,
    jitter,
    motion_jitter,
    pose_errors,
    translation_drift,
)
from physmocap.synth import MotionSequence, stand_scenario, walk_scenario

DT = 1.0 / 60.0


def perturbed(motion, rng, angle_sigma=0.05, root_sigma=0.02):
    return MotionSequence(
        name="pert",
        fps=motion.fps,
        root=motion.root + rng.normal(0, root_sigma, motion.root.shape),
        angles=motion.angles + rng.normal(0, angle_sigma, motion.angles.shape),
    )


def pose_error_oracle(pred, truth, model, alignment):
    """Independent per-frame recomputation with scipy rotations."""
    sip_names = ("lhip", "rhip", "lshoulder", "rshoulder")
    sip_idx = [model.joint_index(n) for n in sip_names]

    def fk(q):
        k = model.n_joints
        pos = np.zeros((k, 3))
        rots = [None] * k
        for j, joint in enumerate(model.joints):
            R_loc = Rotation.from_euler("XYZ", q[3 + 3 * j : 6 + 3 * j]).as_matrix()
            if j == 0:
                pos[0] = q[0:3] + joint.offset
                rots[0] = R_loc
            else:
                p = joint.parent
                pos[j] = pos[p] + rots[p] @ joint.offset
                rots[j] = rots[p] @ R_loc
        return pos, rots

    sip, ang, pos_e = [], [], []
    for t in range(pred.n_frames):
        pp, pr = fk(pred.q(t))
        tp, tr = fk(truth.q(t))
        if alignment == "local":
            R_align = tr[0] @ pr[0].T
        else:
            R_align = np.eye(3)
        pp = (pp - pp[0]) @ R_align.T + tp[0]
        pr = [R_align @ R for R in pr]
        angles = []
        for j in range(model.n_joints):
            d = Rotation.from_matrix(pr[j].T @ tr[j]).magnitude()
            angles.append(np.degrees(d))
        sip.append(np.mean([angles[j] for j in sip_idx]))
        ang.append(np.mean(angles))
        pos_e.append(np.mean(np.linalg.norm(pp - tp, axis=1)) * 100)
    return np.mean(sip), np.mean(ang), np.mean(pos_e)


class TestPoseErrors:
    def test_identical_zero(self, humanoid):
        model, _ = humanoid
        m = stand_scenario(model, seconds=0.3)
        sip, ang, pos = pose_errors(m, m, model, "local")
        assert sip[0] < 1e-4 and ang[0] < 1e-4 and pos[0] < 1e-9

    def test_yaw_alignment_semantics(self, humanoid, rng):
        model, _ = humanoid
        truth = stand_scenario(model, seconds=0.3)
        pred = MotionSequence("yawed", truth.fps, truth.root.copy(), truth.angles.copy())
        pred.angles[:, 1] = np.radians(30.0)  # root yaw (y is the second Euler axis)
        sip_l, ang_l, pos_l = pose_errors(pred, truth, model, "local")
        sip_g, ang_g, _ = pose_errors(pred, truth, model, "global")
        assert ang_l[0] < 1e-6 and sip_l[0] < 1e-6 and pos_l[0] < 1e-6
        assert ang_g[0] == pytest.approx(30.0, abs=1e-6)
        assert sip_g[0] == pytest.approx(30.0, abs=1e-6)

    def test_matches_independent_oracle(self, humanoid, rng):
        model, _ = humanoid
        truth = stand_scenario(model, seconds=0.1)
        pred = perturbed(truth, rng)
        for alignment in ("local", "global"):
            got = pose_errors(pred, truth, model, alignment)
            want = pose_error_oracle(pred, truth, model, alignment)
            assert got[0][0] == pytest.approx(want[0], rel=1e-9)
            assert got[1][0] == pytest.approx(want[1], rel=1e-9)
            assert got[2][0] == pytest.approx(want[2], rel=1e-9)

    def test_alignment_idempotence(self, humanoid, rng):
        # local-aligned error of an already root-aligned pair equals the
        # unaligned (global) error
        model, _ = humanoid
        truth = stand_scenario(model, seconds=0.1)
        pred = perturbed(truth, rng)
        pred.angles[:, 0:3] = truth.angles[:, 0:3]
        pred.root[:] = truth.root
        local = pose_errors(pred, truth, model, "local")
        globl = pose_errors(pred, truth, model, "global")
        for a, b in zip(local, globl):
            assert a[0] == pytest.approx(b[0], rel=1e-9)

    def test_length_mismatch(self, humanoid):
        model, _ = humanoid
        a = stand_scenario(model, seconds=0.2)
        b = stand_scenario(model, seconds=0.3)
        with pytest.raises(ValueError):
            pose_errors(a, b, model)


class TestJitter:
    def test_constant_velocity_zero(self):
        t = np.arange(100)[:, None] * DT
        pos = t * np.array([[1.0, 0.5, -0.2]])
        assert jitter(pos, DT) < 1e-10

    def test_quadratic_zero(self):
        t = np.arange(100) * DT
        pos = np.stack([0.5 * 9.8 * t**2, t, np.zeros_like(t)], axis=1)
        assert jitter(pos, DT) < 1e-9

    def test_sinusoid_analytic(self):
        A, omega = 0.05, 10.0
        t = np.arange(4000) * DT
        pos = np.stack([A * np.sin(omega * t), np.zeros_like(t), np.zeros_like(t)], axis=1)
        expect = omega**3 * A * (2.0 / np.pi) * 1e-3
        assert jitter(pos, DT) == pytest.approx(expect, rel=0.02)

    def test_rigid_transform_invariance(self, rng):
        pos = rng.normal(0, 1, (50, 3)).cumsum(axis=0) * 0.01
        R = Rotation.random(random_state=rng).as_matrix()
        t = rng.normal(0, 5, 3)
        a = jitter(pos, DT)
        b = jitter(pos @ R.T + t, DT)
        assert a == pytest.approx(b, rel=1e-9)

    def test_needs_four_frames(self):
        with pytest.raises(ValueError):
            jitter(np.zeros((3, 3)), DT)


class TestTranslationDrift:
    def test_identical_zero(self, rng):
        root = rng.normal(0, 1, (100, 3)).cumsum(axis=0) * 0.1
        _, err, pct = translation_drift(root, root, reference_distance=1.0)
        assert np.all(err == 0.0)
        assert pct == 0.0

    def test_constant_offset_arithmetic(self):
        T = 500
        truth = np.zeros((T, 3))
        truth[:, 2] = np.linspace(0.0, 8.0, T)  # 8 m walked
        pred = truth + np.array([0.07, 0.0, 0.0])
        dist, err, pct = translation_drift(pred, truth, reference_distance=7.0)
        assert pct == pytest.approx(1.0, rel=1e-3)

    def test_hand_computed_slip_curve(self):
        # 1 cm slip accumulated per 1 m step
        steps = 10
        truth = np.zeros((steps + 1, 3))
        truth[:, 2] = np.arange(steps + 1.0)
        pred = truth.copy()
        pred[:, 2] += 0.01 * np.arange(steps + 1.0)
        dist, err, pct = translation_drift(pred, truth, reference_distance=7.0)
        np.testing.assert_allclose(dist, np.arange(steps + 1.0), atol=1e-12)
        np.testing.assert_allclose(err, 0.01 * np.arange(steps + 1.0), atol=1e-12)
        assert pct == pytest.approx(1.0, rel=1e-9)

    def test_never_reaching_reference(self):
        truth = np.zeros((10, 3))
        _, _, pct = translation_drift(truth, truth, reference_distance=7.0)
        assert pct is None


class TestEvaluate:
    def test_report_fields(self, humanoid, rng):
        model, _ = humanoid
        truth = walk_scenario(model, steps=3, stride=0.5)
        pred = perturbed(truth, rng, angle_sigma=0.01, root_sigma=0.005)
        report = evaluate(pred, truth, model, alignment="local", drift_reference=1.0)
        assert report.pos_error_cm[0] > 0.0
        assert report.root_jitter >= 0.0
        assert report.drift_percent is not None
        text = report.summary()
        assert "SIP error" in text and "Trans drift" in text
        csv = drift_curve_csv(report.drift_distance, report.drift_error)
        assert csv.startswith("distance_m,error_m")

    def test_motion_jitter_smoke(self, humanoid):
        model, _ = humanoid
        m = stand_scenario(model, seconds=0.2)
        root_j, joint_j = motion_jitter(model, m)
        assert root_j < 1e-12 and joint_j < 1e-12
