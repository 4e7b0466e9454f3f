import numpy as np
import pytest

from physmocap.io import bundled_model


@pytest.fixture(scope="session")
def chain():
    return bundled_model("chain")


@pytest.fixture(scope="session")
def humanoid():
    return bundled_model("humanoid")


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)


def random_state(model, rng, angle_scale=0.6, vel_scale=1.0):
    n = model.n_dof
    q = rng.normal(0.0, angle_scale, n)
    q[0:3] = rng.normal(0.0, 0.5, 3)
    qdot = rng.normal(0.0, vel_scale, n)
    return q, qdot
