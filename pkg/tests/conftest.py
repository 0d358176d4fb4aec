import numpy as np
import pytest

from sirmf.core import InitialCondition, ModelParams, uniform_grid
from sirmf.master import solve_master


@pytest.fixture(scope="session")
def fig1_params():
    return ModelParams(3.0, 0.25, 10), InitialCondition(0.9, 0.1)


@pytest.fixture(scope="session")
def master_n10(fig1_params):
    p, ic = fig1_params
    return solve_master(p, ic, uniform_grid(5.0, 0.01))


@pytest.fixture(scope="session")
def master_n5():
    return solve_master(ModelParams(3.0, 0.25, 5), InitialCondition(0.8, 0.2), np.array([0.0, 0.5, 1.0]))
