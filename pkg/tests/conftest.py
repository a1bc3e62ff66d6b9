import numpy as np
import pytest

from dickesim.ensemble import line, point_cluster, slab


@pytest.fixture(scope="session")
def dicke4():
    return point_cluster(4)


@pytest.fixture(scope="session")
def dicke2():
    return point_cluster(2)


@pytest.fixture(scope="session")
def line3():
    # spacing lambda/2 along the carrier axis
    return line(3, 0.5)


@pytest.fixture(scope="session")
def slab30():
    return slab(30, area=4.0, depth=2.0, seed=5)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(2024)
