import numpy as np
import pytest

from physmocap.skeleton import forward_kinematics
from physmocap.synth import (
    make_scenarios,
    sit_scenario,
    stair_scenario,
    stand_scenario,
    synthesize_estimator_frames,
    synthesize_imu,
    walk_scenario,
)
from physmocap.translation import assemble_velocity

G = np.array([0.0, -9.8, 0.0])
G_HAT = G / 9.8


def endpoint_tracks(model, motion):
    out = []
    for t in range(motion.n_frames):
        pos = forward_kinematics(model, motion.q(t))
        out.append(pos[list(model.tracked_endpoints)])
    return np.array(out)


class TestScenarios:
    def test_catalog_names(self, humanoid):
        model, _ = humanoid
        names = set(make_scenarios(model))
        assert {"stand", "walk", "stairs", "sit", "weight_shift", "walk_in_place"} <= names

    def test_stand_is_static(self, humanoid):
        model, _ = humanoid
        m = stand_scenario(model, seconds=2.0)
        assert np.all(m.root == 0.0)
        ep = endpoint_tracks(model, m)
        assert np.abs(np.diff(ep, axis=0)).max() == 0.0

    def test_walk_total_displacement_exact(self, humanoid):
        model, _ = humanoid
        m = walk_scenario(model, steps=6, stride=0.5)
        assert m.root[-1, 2] - m.root[0, 2] == pytest.approx(3.0, abs=1e-12)

    def test_stair_riser_gain_per_cycle(self, humanoid):
        model, _ = humanoid
        riser, cycle = 0.15, 2.4
        m = stair_scenario(model, n_steps=3, riser=riser, cycle_time=cycle)
        lead, per = 60, int(cycle * 60)
        for c in range(3):
            start = m.root[lead + per * c - 1 if c else 0, 1]
            end = m.root[lead + per * (c + 1) - 1, 1]
            assert end - start == pytest.approx(riser, abs=1e-9)

    def test_scenarios_start_at_origin(self, humanoid):
        model, _ = humanoid
        for name, gen in make_scenarios(model).items():
            m = gen()
            np.testing.assert_allclose(m.root[0], 0.0, atol=1e-12, err_msg=name)

    def test_planted_feet_pinned(self, humanoid):
        model, _ = humanoid
        for name, gen in make_scenarios(model).items():
            m = gen()
            ep = endpoint_tracks(model, m)
            disp = np.linalg.norm(np.diff(ep, axis=0), axis=2)
            planted = m.contacts[1:] & m.contacts[:-1]
            for e in (2, 3):  # feet
                if planted[:, e].any():
                    assert disp[planted[:, e], e].max() < 1e-4, name

    def test_sit_pelvis_height(self, humanoid):
        model, _ = humanoid
        m = sit_scenario(model, box_height=0.45)
        ep = endpoint_tracks(model, m)
        ground = forward_kinematics(model, m.q(0))[:, 1].min()
        pelvis_final = ep[-1, 4, 1]
        assert pelvis_final - ground == pytest.approx(0.45, abs=1e-6)


class TestSynthesizeImu:
    def test_static_pose_reads_gravity(self, humanoid):
        model, _ = humanoid
        m = stand_scenario(model, seconds=0.5)
        log = synthesize_imu(model, m)
        mags = np.linalg.norm(log.acc, axis=2)
        np.testing.assert_allclose(mags, 9.8, atol=1e-9)
        np.testing.assert_allclose(log.gyro, 0.0, atol=1e-9)
        # specific force points opposite gravity in the sensor frame
        for s in range(log.n_sensors):
            expect = -(log.rot[0, s].T @ G)
            np.testing.assert_allclose(log.acc[0, s], expect, atol=1e-9)

    def test_constant_velocity_reads_gravity_only(self, humanoid):
        model, _ = humanoid
        T = 60
        root = np.zeros((T, 3))
        root[:, 0] = np.arange(T) * 0.01
        from physmocap.synth import MotionSequence

        m = MotionSequence("cv", 60.0, root, np.zeros((T, 3 * model.n_joints)))
        log = synthesize_imu(model, m)
        np.testing.assert_allclose(np.linalg.norm(log.acc, axis=2), 9.8, atol=1e-6)

    def test_circular_motion_centripetal(self, humanoid):
        model, _ = humanoid
        fps, T = 60.0, 240
        rho, omega = 0.5, 2.0
        tt = np.arange(T) / fps
        root = np.stack([rho * np.cos(omega * tt), np.zeros(T), rho * np.sin(omega * tt)], axis=1)
        from physmocap.synth import MotionSequence

        m = MotionSequence("circle", fps, root, np.zeros((T, 3 * model.n_joints)))
        log = synthesize_imu(model, m, attachments=[("pelvis", np.eye(3))])
        a_world = np.einsum("tsij,tsj->tsi", log.rot, log.acc) + G
        mags = np.linalg.norm(a_world[5:-5, 0], axis=1)
        np.testing.assert_allclose(mags, omega**2 * rho, rtol=2e-3)

    def test_integration_round_trip(self, humanoid):
        # integrating the synthesized accelerations recovers the sensor path
        model, _ = humanoid
        m = walk_scenario(model, steps=4, stride=0.5)
        log = synthesize_imu(model, m, attachments=[("pelvis", np.eye(3))])
        a_world = np.einsum("tsij,tsj->tsi", log.rot, log.acc)[:, 0] + G
        dt = m.dt
        # trapezoid-free: mirror of the central-difference synthesis
        pos = np.zeros((m.n_frames, 3))
        vel = np.zeros(3)
        pos[0] = m.root[0]
        vel = (m.root[1] - m.root[0]) / dt
        for t in range(1, m.n_frames - 1):
            pos[t] = pos[t - 1] + vel * dt
            vel = vel + a_world[t] * dt
        pos[-1] = pos[-2] + vel * dt
        err = np.linalg.norm(pos - m.root, axis=1).max()
        assert err < 0.02  # O(dt^2) drift over ~4 s

    def test_too_short_rejected(self, humanoid):
        model, _ = humanoid
        from physmocap.synth import MotionSequence

        m = MotionSequence("x", 60.0, np.zeros((2, 3)), np.zeros((2, 3 * model.n_joints)))
        with pytest.raises(ValueError):
            synthesize_imu(model, m)


class TestEstimatorFrames:
    def test_zero_noise_angles_exact(self, humanoid):
        model, _ = humanoid
        m = stand_scenario(model, seconds=1.0)
        frames = synthesize_estimator_frames(m, model)
        for t, f in enumerate(frames):
            np.testing.assert_array_equal(f.theta_ref, m.angles[t])

    def test_standing_stationary_flags(self, humanoid):
        model, _ = humanoid
        m = stand_scenario(model, seconds=1.0)
        frames = synthesize_estimator_frames(m, model, s_mode="displacement")
        # everything is still: all five endpoints flagged stationary
        np.testing.assert_allclose(frames[30].s, 1.0, atol=1e-12)
        truth = synthesize_estimator_frames(m, model, s_mode="truth")
        np.testing.assert_allclose(truth[30].s, [0, 0, 1, 1, 0], atol=0)

    def test_noise_statistics(self, humanoid):
        model, _ = humanoid
        T = 2000
        from physmocap.synth import MotionSequence

        m = MotionSequence("x", 60.0, np.zeros((T, 3)), np.zeros((T, 3 * model.n_joints)))
        sigma = np.radians(1.0)
        frames = synthesize_estimator_frames(m, model, angle_noise_deg=1.0, seed=9, s_mode="displacement")
        err = np.array([f.theta_ref for f in frames])
        N = err.size
        assert abs(err.mean()) < 3.0 * sigma / np.sqrt(N)
        assert abs(err.std() - sigma) < 0.05 * sigma

    def test_velocity_decomposition_round_trip(self, humanoid):
        model, _ = humanoid
        m = walk_scenario(model, steps=4)
        frames = synthesize_estimator_frames(m, model)
        for t in range(1, m.n_frames):
            f = frames[t]
            v = assemble_velocity(f.v_par_mag, f.v_perp, G_HAT)
            fd = (m.root[t] - m.root[t - 1]) * m.fps
            np.testing.assert_allclose(v, fd, atol=1e-9)
