import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from physmocap.skeleton import (
    CharacterState,
    ConfigurationError,
    forward_kinematics,
    jdot_qdot,
    joint_jacobian,
    make_chain,
)

from conftest import random_state


def fk_oracle(model, q):
    """Independent FK by explicit rotation-matrix composition (scipy)."""
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
    return pos


def fd_jacobian(model, q, eps=1e-6):
    n = model.n_dof
    J = np.zeros((3 * model.n_joints, n))
    for d in range(n):
        dq = np.zeros(n)
        dq[d] = eps
        J[:, d] = (
            forward_kinematics(model, q + dq) - forward_kinematics(model, q - dq)
        ).reshape(-1) / (2.0 * eps)
    return J


class TestForwardKinematics:
    def test_identity_pose_cumulative_offsets(self, chain):
        model, _ = chain
        pos = forward_kinematics(model, np.zeros(model.n_dof))
        expected = np.zeros(3)
        for j, joint in enumerate(model.joints):
            expected = expected + joint.offset
            np.testing.assert_allclose(pos[j], expected, atol=1e-15)

    def test_rigid_translation(self, chain, rng):
        model, _ = chain
        q = np.zeros(model.n_dof)
        t = rng.normal(0, 1, 3)
        base = forward_kinematics(model, q)
        q2 = q.copy()
        q2[0:3] = t
        np.testing.assert_allclose(forward_kinematics(model, q2), base + t, atol=1e-14)

    def test_root_override(self, chain, rng):
        model, _ = chain
        q, _ = random_state(model, rng)
        override = rng.normal(0, 1, 3)
        pos = forward_kinematics(model, q, root_override=override)
        np.testing.assert_allclose(pos[0], override, atol=1e-14)
        inline = q.copy()
        inline[0:3] = override
        np.testing.assert_allclose(pos, forward_kinematics(model, inline), atol=1e-13)

    def test_random_pose_matches_composition_oracle(self, rng):
        model = make_chain([(0, 0, 0), (0.1, -0.3, 0.05), (0, -0.25, 0.1), (0.05, -0.2, 0)])
        for _ in range(20):
            q, _ = random_state(model, rng)
            np.testing.assert_allclose(
                forward_kinematics(model, q), fk_oracle(model, q), atol=1e-12
            )

    def test_dimension_mismatch_raises(self, chain):
        model, _ = chain
        with pytest.raises(ConfigurationError):
            forward_kinematics(model, np.zeros(model.n_dof + 1))
        with pytest.raises(ConfigurationError):
            forward_kinematics(model, np.full(model.n_dof, np.nan))


class TestJacobian:
    def test_translation_columns_are_identity_blocks(self, humanoid, rng):
        model, _ = humanoid
        q, _ = random_state(model, rng)
        J = joint_jacobian(model, q)
        for m in range(model.n_joints):
            np.testing.assert_allclose(J[3 * m : 3 * m + 3, 0:3], np.eye(3), atol=0)

    def test_matches_finite_differences(self, chain, rng):
        model, _ = chain
        for _ in range(10):
            q, qdot = random_state(model, rng)
            J = joint_jacobian(model, q)
            np.testing.assert_allclose(J @ qdot, fd_jacobian(model, q) @ qdot, atol=1e-5)

    def test_tree_sparsity_exact_zeros(self, humanoid, rng):
        model, _ = humanoid
        q, _ = random_state(model, rng)
        J = joint_jacobian(model, q)
        anc = model.ancestor_mask()
        for j in range(model.n_joints):
            for m in range(model.n_joints):
                if not anc[j, m]:
                    block = J[3 * m : 3 * m + 3, 3 + 3 * j : 6 + 3 * j]
                    assert np.all(block == 0.0)

    def test_distal_column_zero_in_proximal_rows(self, chain, rng):
        model, _ = chain
        q, _ = random_state(model, rng)
        J = joint_jacobian(model, q)
        # tip angles cannot move the base or link1
        tip_cols = J[0:6, model.n_dof - 3 :]
        assert np.all(tip_cols == 0.0)


class TestJdotQdot:
    def test_zero_velocity_gives_zero(self, chain, rng):
        model, _ = chain
        q, _ = random_state(model, rng)
        np.testing.assert_allclose(jdot_qdot(model, q, np.zeros(model.n_dof)), 0.0, atol=0)

    def test_pure_root_translation_gives_zero(self, chain, rng):
        model, _ = chain
        q, _ = random_state(model, rng)
        qdot = np.zeros(model.n_dof)
        qdot[0:3] = rng.normal(0, 1, 3)
        np.testing.assert_allclose(jdot_qdot(model, q, qdot), 0.0, atol=1e-14)

    def test_centripetal_magnitude(self):
        # Single link spinning about the root z axis: a point at radius rho
        # sees centripetal acceleration omega^2 * rho toward the axis.
        model = make_chain([(0, 0, 0), (0.4, 0.0, 0.0)])
        q = np.zeros(model.n_dof)
        qdot = np.zeros(model.n_dof)
        omega = 3.0
        qdot[5] = omega  # root Euler z rate
        term = jdot_qdot(model, q, qdot).reshape(-1, 3)
        np.testing.assert_allclose(term[1], [-(omega**2) * 0.4, 0.0, 0.0], atol=1e-12)

    def test_rddot_identity_vs_finite_differences(self, chain, rng):
        model, _ = chain
        for _ in range(5):
            q, qdot = random_state(model, rng)
            qddot = rng.normal(0, 1, model.n_dof)
            rdd = joint_jacobian(model, q) @ qddot + jdot_qdot(model, q, qdot)
            h = 1e-5

            def fk_at(t):
                return forward_kinematics(model, q + qdot * t + 0.5 * qddot * t * t).reshape(-1)

            rdd_fd = (fk_at(h) - 2.0 * fk_at(0.0) + fk_at(-h)) / h**2
            np.testing.assert_allclose(rdd, rdd_fd, atol=1e-4)


class TestCharacterState:
    def test_mismatched_lengths_rejected(self):
        with pytest.raises(ConfigurationError):
            CharacterState(np.zeros(5), np.zeros(4))

    def test_non_finite_rejected(self):
        with pytest.raises(ConfigurationError):
            CharacterState(np.array([np.inf]), np.array([0.0]))
