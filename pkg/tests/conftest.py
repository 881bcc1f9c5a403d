import numpy as np
import pytest

from delayfront.dispersion import Params
from delayfront.grid import Grid
from delayfront.profile import compute_profile, discrete_profile

P31 = Params(3.0, 1.0)


@pytest.fixture(scope="session")
def profile31():
    return compute_profile(P31)


@pytest.fixture(scope="session")
def long_profile31():
    # reaches past z = 30 so it can be sampled on the evolution test domains
    return compute_profile(P31, length=90.0)


@pytest.fixture(scope="session")
def front_grid():
    return Grid.snapped(-20.0, 20.0, 0.05, P31.ch)


@pytest.fixture(scope="session")
def front31(long_profile31, front_grid):
    """Discretely stationary (3, 1) front on [-20, 20], dz = 0.05."""
    return discrete_profile(long_profile31, front_grid)


def gaussian(z, amplitude, center, width):
    return amplitude * np.exp(-((z - center) ** 2) / (2 * width ** 2))
