import numpy as np
import pytest

from wptbeat import (
    PAPER_PARAMS,
    SimConfig,
    simulate,
    solve_steady_state,
)


@pytest.fixture(scope="session")
def params():
    return PAPER_PARAMS


@pytest.fixture(scope="session")
def grid(params):
    return params.grid()


@pytest.fixture(scope="session")
def solution(params, grid):
    return solve_steady_state(params, grid)


@pytest.fixture(scope="session")
def sim_config():
    return SimConfig()


@pytest.fixture(scope="session")
def trace(params, sim_config):
    return simulate(params, sim_config)


def mean_product(x, y):
    """Time average of the product of two real signals given as harmonic
    vectors on the same grid."""
    k = min(x.k_max, y.k_max)
    return float(np.real(sum(x[i] * np.conj(y[i]) for i in range(-k, k + 1))))
