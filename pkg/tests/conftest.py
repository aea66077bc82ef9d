import numpy as np
import pytest

from irrspec import build_mother, build_rescaled


@pytest.fixture(scope="session")
def mother():
    return build_mother()


@pytest.fixture(scope="session")
def resc15(mother):
    return build_rescaled(mother, 15.0)


@pytest.fixture(scope="session")
def resc8(mother):
    return build_rescaled(mother, 8.0)


def rng_of(seed):
    return np.random.default_rng(seed)
