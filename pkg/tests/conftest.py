import warnings

import pytest

from cnoidal_traffic.errors import PrecisionWarning
from cnoidal_traffic.ov_model import OVParams
from cnoidal_traffic.simulate import IntegratorConfig, initial_from_family, integrate_ring
from cnoidal_traffic.steady import solve_m


@pytest.fixture(scope="session")
def params35():
    return OVParams(h=3.5)


def _solve(a, n, h=3.5):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PrecisionWarning)
        return solve_m(a, n, 100, h, OVParams(h=h))


@pytest.fixture(scope="session")
def sol_159_1():
    return _solve(1.59, 1)


@pytest.fixture(scope="session")
def sol_159_2():
    return _solve(1.59, 2)


@pytest.fixture(scope="session")
def sol_159_3():
    return _solve(1.59, 3)


@pytest.fixture(scope="session")
def sol_165_1():
    return _solve(1.65, 1)


@pytest.fixture(scope="session")
def sol_165_2():
    return _solve(1.65, 2)


@pytest.fixture(scope="session")
def traj_159_1(sol_159_1):
    cfg = IntegratorConfig.grid(100.0, 0.1)
    return integrate_ring(initial_from_family(sol_159_1), sol_159_1.ov_params, cfg)


@pytest.fixture(scope="session")
def traj_165_1(sol_165_1):
    cfg = IntegratorConfig.grid(100.0, 0.1)
    return integrate_ring(initial_from_family(sol_165_1), sol_165_1.ov_params, cfg)
