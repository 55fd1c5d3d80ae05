import numpy as np
import pytest

from nlperim.groups import group_from_name, heisenberg
from nlperim.norms import HomogeneousNorm


@pytest.fixture(scope="session")
def r1():
    return group_from_name("r1")


@pytest.fixture(scope="session")
def r2():
    return group_from_name("r2")


@pytest.fixture(scope="session")
def h1():
    return heisenberg()


@pytest.fixture(scope="session")
def euclid1(r1):
    return HomogeneousNorm(group=r1, kind="euclidean")


@pytest.fixture(scope="session")
def euclid2(r2):
    return HomogeneousNorm(group=r2, kind="euclidean")


@pytest.fixture(scope="session")
def koranyi(h1):
    return HomogeneousNorm(group=h1, kind="koranyi")


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
