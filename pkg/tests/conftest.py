import numpy as np
import pytest

from gasgiant.flow import IntegratorOptions
from gasgiant.metric import (euclidean_half_cylinder, perturbed_half_cylinder,
                             torus3d)


@pytest.fixture(scope="session")
def euclid():
    return euclidean_half_cylinder()


@pytest.fixture(scope="session")
def perturbed():
    return perturbed_half_cylinder()


@pytest.fixture(scope="session")
def torus():
    return torus3d()


@pytest.fixture(scope="session")
def opts():
    return IntegratorOptions()


@pytest.fixture(scope="session")
def rng():
    return np.random.Generator(np.random.Philox(key=20260824))
