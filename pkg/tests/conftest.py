"""Shared fixtures: grids, parameter sets and expensive solver products are
computed once per session and reused by unit and acceptance tests."""

import numpy as np
import pytest

from rotnls.functionals import PhysicsParams
from rotnls.grid import make_grid
from rotnls.qprofile import solve_q


@pytest.fixture(scope="session")
def grid2d():
    return make_grid(2, [8, 8], [64, 64])


@pytest.fixture(scope="session")
def grid2d_fine():
    return make_grid(2, [8, 8], [128, 128])


@pytest.fixture(scope="session")
def params_iso():
    return PhysicsParams(dim=2, p=3.0, gammas=(1.0, 1.0), omega_rot=0.0)


@pytest.fixture(scope="session")
def params_rot():
    return PhysicsParams(dim=2, p=3.0, gammas=(1.0, 1.0), omega_rot=0.3)


@pytest.fixture(scope="session")
def params_25():
    return PhysicsParams(dim=2, p=5.0, gammas=(1.0, 1.0), omega_rot=0.2)


@pytest.fixture(scope="session")
def q_townes():
    return solve_q(2, 3.0, 1e-10)


@pytest.fixture(scope="session")
def q_25():
    return solve_q(2, 5.0, 1e-10)


@pytest.fixture(scope="session")
def q_33():
    return solve_q(3, 3.0, 1e-10)


@pytest.fixture(scope="session")
def lambda0_iso_rot():
    """lambda0 for the (gamma=1, Omega=0.2) trap used by ground-state tests."""
    from rotnls.spectrum import lowest_eigenpair
    gr = make_grid(2, [8, 8], [128, 128])
    pp = PhysicsParams(dim=2, p=5.0, gammas=(1.0, 1.0), omega_rot=0.2)
    return lowest_eigenpair(gr, pp, tol=1e-10).lambda0


@pytest.fixture(scope="session")
def nehari_state_25(params_25, grid2d_fine):
    from rotnls.groundstate import minimize_nehari
    return minimize_nehari(-1.0, params_25, grid2d_fine, tol=1e-10)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
