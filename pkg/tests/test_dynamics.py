import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from physmocap.dynamics import (
    DynamicsModel,
    bias_forces,
    box_inertia,
    inverse_dynamics,
    mass_matrix,
)
from physmocap.skeleton import make_chain

from conftest import random_state


def single_body(mass=2.5, gravity=None):
    model = make_chain([(0, 0, 0)])
    kwargs = {}
    if gravity is not None:
        kwargs["gravity"] = np.asarray(gravity, dtype=float)
    return model, DynamicsModel(
        model,
        np.array([mass]),
        np.zeros((1, 3)),
        box_inertia(mass, (0.2, 0.3, 0.1))[None],
        **kwargs,
    )


class TestMassMatrix:
    def test_free_body_translation_block(self, rng):
        model, dyn = single_body(mass=2.5)
        q, _ = random_state(model, rng)
        M = mass_matrix(dyn, q)
        np.testing.assert_allclose(M[0:3, 0:3], 2.5 * np.eye(3), atol=1e-12)

    def test_symmetry_random(self, humanoid, rng):
        _, dyn = humanoid
        for _ in range(10):
            q, _ = random_state(dyn.skeleton, rng)
            M = mass_matrix(dyn, q)
            assert np.abs(M - M.T).max() < 1e-9

    def test_planar_two_link_pendulum_closed_form(self, rng):
        # Two links hanging along -y, rotating about z; compare the 2x2
        # sub-inertia for the two z DOFs (base fixed) against the textbook
        # Lagrangian form.
        l1, l2 = 0.5, 0.4
        lc1, lc2 = 0.3, 0.25
        m1, m2 = 1.4, 0.9
        model = make_chain([(0, 0, 0), (0, -l1, 0)])
        I1 = box_inertia(m1, (0.05, l1, 0.05))
        I2 = box_inertia(m2, (0.04, l2, 0.04))
        dyn = DynamicsModel(
            model,
            np.array([m1, m2]),
            np.array([[0, -lc1, 0], [0, -lc2, 0]]),
            np.stack([I1, I2]),
        )
        for _ in range(10):
            t1, t2 = rng.uniform(-np.pi, np.pi, 2)
            q = np.zeros(model.n_dof)
            q[5] = t1  # root z rotation
            q[8] = t2  # link z rotation
            M = mass_matrix(dyn, q)
            sub = M[np.ix_([5, 8], [5, 8])]
            i1, i2 = I1[2, 2], I2[2, 2]
            m11 = m1 * lc1**2 + i1 + m2 * (l1**2 + lc2**2 + 2 * l1 * lc2 * np.cos(t2)) + i2
            m12 = m2 * (lc2**2 + l1 * lc2 * np.cos(t2)) + i2
            m22 = m2 * lc2**2 + i2
            np.testing.assert_allclose(sub, [[m11, m12], [m12, m22]], atol=1e-12)

    def test_positive_definite_many_samples(self, chain, humanoid, rng):
        for _, dyn in (chain, humanoid):
            for _ in range(200):
                q, _ = random_state(dyn.skeleton, rng)
                np.linalg.cholesky(mass_matrix(dyn, q))  # raises if not PD


def lagrangian_bias_oracle(dyn, q, qdot, eps=1e-6):
    """h_i = sum_j Mdot_ij qd_j - 1/2 qd' dM/dq_i qd + dV/dq_i by finite
    differences of the (separately validated) mass matrix and an
    independently computed potential energy."""
    model = dyn.skeleton
    n = model.n_dof

    def potential(qv):
        # independent FK via scipy rotations
        k = model.n_joints
        pos = np.zeros((k, 3))
        rots = [None] * k
        for j, joint in enumerate(model.joints):
            R_loc = Rotation.from_euler("XYZ", qv[3 + 3 * j : 6 + 3 * j]).as_matrix()
            if j == 0:
                pos[0] = qv[0:3] + joint.offset
                rots[0] = R_loc
            else:
                p = joint.parent
                pos[j] = pos[p] + rots[p] @ joint.offset
                rots[j] = rots[p] @ R_loc
        com_w = pos + np.einsum("kij,kj->ki", np.stack(rots), dyn.com)
        return -float(np.sum(dyn.mass[:, None] * dyn.gravity[None, :] * com_w))

    dM = np.zeros((n, n, n))
    dV = np.zeros(n)
    for i in range(n):
        dq = np.zeros(n)
        dq[i] = eps
        dM[i] = (mass_matrix(dyn, q + dq) - mass_matrix(dyn, q - dq)) / (2 * eps)
        dV[i] = (potential(q + dq) - potential(q - dq)) / (2 * eps)
    Mdot = np.einsum("kij,k->ij", dM, qdot)
    quad = np.einsum("i,kij,j->k", qdot, dM, qdot)
    return Mdot @ qdot - 0.5 * quad + dV


class TestBiasForces:
    def test_rest_without_gravity(self, rng):
        model, dyn = single_body(gravity=(0, 0, 0))
        q, _ = random_state(model, rng)
        np.testing.assert_allclose(bias_forces(dyn, q, np.zeros(model.n_dof)), 0.0, atol=1e-12)

    def test_free_fall_consistency(self, rng):
        model, dyn = single_body()
        q, _ = random_state(model, rng)
        h = bias_forces(dyn, q, np.zeros(model.n_dof))
        M = mass_matrix(dyn, q)
        qddot = np.linalg.solve(M, -h)
        np.testing.assert_allclose(qddot[0:3], dyn.gravity, atol=1e-10)

    def test_matches_lagrangian_oracle(self, chain, rng):
        _, dyn = chain
        for _ in range(3):
            q, qdot = random_state(dyn.skeleton, rng)
            h = bias_forces(dyn, q, qdot)
            np.testing.assert_allclose(h, lagrangian_bias_oracle(dyn, q, qdot), atol=1e-4)

    def test_matches_lagrangian_oracle_humanoid(self, humanoid, rng):
        # one full-scale spot check (the oracle is O(n) mass-matrix FDs)
        _, dyn = humanoid
        q, qdot = random_state(dyn.skeleton, rng, vel_scale=0.5)
        h = bias_forces(dyn, q, qdot)
        np.testing.assert_allclose(h, lagrangian_bias_oracle(dyn, q, qdot), atol=1e-3)


class TestInverseDynamics:
    def test_unforced_motion_zero_tau(self, chain, rng):
        _, dyn = chain
        q, qdot = random_state(dyn.skeleton, rng)
        M = mass_matrix(dyn, q)
        h = bias_forces(dyn, q, qdot)
        qddot = np.linalg.solve(M, -h)
        tau = inverse_dynamics(dyn, q, qdot, qddot)
        assert np.abs(tau).max() < 1e-9

    def test_assembly_identity(self, chain, humanoid, rng):
        for _, dyn in (chain, humanoid):
            for _ in range(20):
                q, qdot = random_state(dyn.skeleton, rng)
                qddot = rng.normal(0, 1, dyn.skeleton.n_dof)
                tau = inverse_dynamics(dyn, q, qdot, qddot)
                ref = mass_matrix(dyn, q) @ qddot + bias_forces(dyn, q, qdot)
                assert np.abs(tau - ref).max() <= 1e-8 * (1.0 + np.abs(tau).max())

    def test_standing_weight(self, humanoid):
        _, dyn = humanoid
        n = dyn.skeleton.n_dof
        tau = inverse_dynamics(dyn, np.zeros(n), np.zeros(n), np.zeros(n))
        weight = dyn.total_mass * 9.8
        assert abs(dyn.total_mass - 80.0) < 1e-6
        np.testing.assert_allclose(tau[1], weight, rtol=1e-12)
        np.testing.assert_allclose(tau[0], 0.0, atol=1e-9)
        np.testing.assert_allclose(tau[2], 0.0, atol=1e-9)

    def test_energy_drift_unforced(self, chain, rng):
        _, dyn = chain
        dyn0 = dyn.with_gravity((0.0, 0.0, 0.0))
        model = dyn0.skeleton
        q, qdot = random_state(model, rng, angle_scale=0.3, vel_scale=0.5)
        dt = 1.0 / 600.0

        def kinetic(qv, qd):
            return 0.5 * qd @ mass_matrix(dyn0, qv) @ qd

        e0 = kinetic(q, qdot)
        for _ in range(600):
            qddot = np.linalg.solve(mass_matrix(dyn0, q), -bias_forces(dyn0, q, qdot))
            q = q + qdot * dt
            qdot = qdot + qddot * dt
        assert abs(kinetic(q, qdot) - e0) / e0 <= 0.01


class TestModelValidation:
    def test_rejects_nonpositive_mass(self):
        model = make_chain([(0, 0, 0)])
        with pytest.raises(Exception):
            DynamicsModel(model, np.array([0.0]), np.zeros((1, 3)), np.eye(3)[None])

    def test_rejects_bad_inertia(self):
        model = make_chain([(0, 0, 0)])
        bad = -np.eye(3)
        with pytest.raises(Exception):
            DynamicsModel(model, np.array([1.0]), np.zeros((1, 3)), bad[None])
