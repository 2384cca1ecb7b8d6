import math

import numpy as np
import pytest

from galerkin_adversary import make_grid

TWO_PI = 2.0 * math.pi


@pytest.fixture(scope="session")
def grid_2pi():
    return make_grid(0.0, TWO_PI)


@pytest.fixture(scope="session")
def grid_unit():
    return make_grid(0.0, 1.0, 16, 8)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
