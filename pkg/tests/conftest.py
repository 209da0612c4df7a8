import numpy as np
import pytest

from nlslab.numerics import make_grid


@pytest.fixture(scope="session")
def default_grid():
    return make_grid(40.0, 4096, "collocation")


@pytest.fixture(scope="session")
def fine_grid():
    # dx = 0.02 exactly
    return make_grid(40.96, 4097, "collocation")


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)
