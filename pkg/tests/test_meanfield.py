import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sirmf.core import InitialCondition, ModelParams, uniform_grid
from sirmf.meanfield import meanfield_rhs, solve_meanfield


def test_rhs_figure_values():
    d = meanfield_rhs((0.9, 0.1), ModelParams(3.0, 0.25, 1))
    assert d[0] == pytest.approx(-0.27, abs=1e-15)
    assert d[1] == pytest.approx(0.245, abs=1e-15)


def test_rhs_disease_free():
    assert meanfield_rhs((0.7, 0.0), ModelParams(3.0, 0.25, 1)).tolist() == [0.0, 0.0]


def test_rhs_no_susceptibles():
    assert meanfield_rhs((0.0, 0.4), ModelParams(3.0, 0.25, 1)).tolist() == [0.0, -0.1]


def test_decoupled_linear_case():
    t = solve_meanfield(ModelParams(0.0, 1.0, 1), InitialCondition(0.9, 0.1), uniform_grid(1.0, 0.1))
    assert np.all(t["y1"] == 0.9)
    assert t["y2"][-1] == pytest.approx(0.1 * math.exp(-1), abs=1e-10)


def test_equilibrium_start():
    t = solve_meanfield(ModelParams(3.0, 0.25, 1), InitialCondition(0.6, 0.0), uniform_grid(5.0, 0.5))
    assert np.all(t["y1"] == 0.6) and np.all(t["y2"] == 0.0)


def test_accepts_non_integral_fractions():
    solve_meanfield(ModelParams(3.0, 0.25, 7), InitialCondition(0.33, 0.1), [0.0, 1.0])


def test_matches_tight_tolerance_reference():
    p, ic, grid = ModelParams(3.0, 0.25, 1), InitialCondition(0.9, 0.1), uniform_grid(5.0, 0.01)
    default = solve_meanfield(p, ic, grid)
    ref = solve_meanfield(p, ic, grid, atol=1e-14, rtol=1e-13)
    for k in ("y1", "y2"):
        assert np.max(np.abs(default[k] - ref[k])) <= 1e-8


def test_halving_tolerance():
    p, ic, grid = ModelParams(3.0, 0.25, 1), InitialCondition(0.9, 0.1), uniform_grid(5.0, 0.01)
    a = solve_meanfield(p, ic, grid, atol=1e-8, rtol=1e-6)
    b = solve_meanfield(p, ic, grid, atol=5e-9, rtol=5e-7)
    for k in ("y1", "y2"):
        assert np.all(np.abs(a[k] - b[k]) <= 1e-8 + 1e-6 * np.abs(b[k]))


@settings(max_examples=40, deadline=None)
@given(
    tau=st.floats(0, 10),
    gamma=st.floats(0, 2),
    s0=st.floats(0, 1),
    frac=st.floats(0, 1),
)
def test_invariant_region(tau, gamma, s0, frac):
    i0 = (1 - s0) * frac
    t = solve_meanfield(ModelParams(tau, gamma, 1), InitialCondition(s0, i0), uniform_grid(5.0, 0.05))
    y1, y2 = t["y1"], t["y2"]
    assert np.all(np.diff(y1) <= 1e-12)
    assert np.all(y2 >= -1e-12)
    assert np.all(y1 + y2 <= s0 + i0 + 1e-12)
    if s0 > 0:
        assert np.all(y1 > 0)
