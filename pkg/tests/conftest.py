import pytest

from otsuki.geodesic import GeodesicFamily, sample_trajectory, solve_parameter


@pytest.fixture(scope="session")
def fam23():
    return solve_parameter(2, 3)


@pytest.fixture(scope="session")
def traj23(fam23):
    return sample_trajectory(fam23, 1024)


@pytest.fixture(scope="session")
def fam58():
    return solve_parameter(5, 8)


@pytest.fixture(scope="session")
def traj58(fam58):
    return sample_trajectory(fam58, 1024)


@pytest.fixture(scope="session")
def clifford_traj():
    return sample_trajectory(GeodesicFamily.clifford(), 1024)
