import numpy as np
import pytest

import fbmdrift as fd


@pytest.fixture(scope="session")
def lin_model():
    return fd.builtin_drift("linear", theta=1.0)


@pytest.fixture(scope="session")
def biweight():
    return fd.builtin_kernel("biweight")


@pytest.fixture(scope="session")
def small_path(lin_model):
    """One moderately long fOU path with the fine grid kept."""
    grid = fd.make_grid(256, 2.0, 1.0)
    return fd.simulate(lin_model, 0.5, 0.0, 0.7, grid, seed=7, refine=8)


@pytest.fixture(scope="session")
def fou_batch(lin_model):
    grid = fd.make_grid(512, 2.0, 1.0)
    return fd.simulate_batch(lin_model, 0.5, 0.0, 0.7, grid, [0, 1, 2, 3], refine=8)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
