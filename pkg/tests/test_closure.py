import numpy as np
import pytest

from sirmf.closure import (
    ClosedSystemSpec,
    ClosureFunctions,
    ClosureRangeError,
    g_rhs,
    solve_closed,
    total_variance_rhs_check,
)
from sirmf.core import ConfigError, InitialCondition, ModelParams, MomentVector, uniform_grid
from sirmf.master import extract_oracle_h, solve_master
from sirmf.meanfield import meanfield_rhs, solve_meanfield

LOWER = (0.5, 1.0, 0.5, 1.0)


def spec(tau=3.0, gamma=0.25, n=30, eps=0.0, h=LOWER, z0=(0.9, 0.1, 0.0)):
    closure = h if isinstance(h, ClosureFunctions) else ClosureFunctions.constant(*h)
    return ClosedSystemSpec(ModelParams(tau, gamma, n), eps, closure, MomentVector(*z0))


@pytest.mark.parametrize("h", [LOWER, (-1, -0.8, -0.4, 0.5), (0, 0, 0, 0)])
def test_rhs_reduces_to_meanfield(h):
    s = spec(h=h)
    g = g_rhs(0.0, (0.9, 0.1, 0.0), s)
    assert g[0] == pytest.approx(-0.27, abs=1e-15) and g[1] == pytest.approx(0.245, abs=1e-15) and g[2] == 0.0
    assert g[:2].tolist() == meanfield_rhs((0.9, 0.1), s.params).tolist()


def test_rhs_hand_arithmetic():
    g = g_rhs(0.0, (0.5, 0.2, 0.1), spec(tau=1.0, gamma=0.0, h=(1, 0, 0, 0)))
    assert g[0] == pytest.approx(-0.15, abs=1e-15)
    assert g[1] == pytest.approx(0.15, abs=1e-15)
    assert g[2] == pytest.approx(0.03, abs=1e-15)


def test_rhs_matches_master_derivative_with_oracle_closure():
    p, ic = ModelParams(3.0, 0.25, 30), InitialCondition(0.9, 0.1)
    errs = []
    for dt in (0.02, 0.01):
        t = solve_master(p, ic, uniform_grid(2.0, dt)).table
        s = spec(n=30, eps=1 / 30, h=extract_oracle_h(t))
        z = np.column_stack([t["mean_s"], t["mean_i"], t["total_var"]])
        fd = (z[2:] - z[:-2]) / (2 * dt)
        g = np.array([g_rhs(tk, zk, s) for tk, zk in zip(t.times[1:-1], z[1:-1])])
        errs.append(np.max(np.abs(fd - g)))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)


@pytest.mark.parametrize("tau", [3.0, 1.0])
def test_reduction_solution(tau):
    grid = uniform_grid(5.0, 0.01)
    z = solve_closed(spec(tau=tau), grid)
    mf = solve_meanfield(ModelParams(tau, 0.25, 30), InitialCondition(0.9, 0.1), grid)
    assert np.array_equal(z["z1"], mf["y1"]) and np.array_equal(z["z2"], mf["y2"])
    assert np.all(z["z3"] == 0)


def test_oracle_round_trip_small_n():
    n = 10
    p, ic = ModelParams(3.0, 0.25, n), InitialCondition(0.9, 0.1)
    grid = uniform_grid(5.0, 0.01)
    m = solve_master(p, ic, grid).table
    z = solve_closed(spec(n=n, eps=1 / n, h=extract_oracle_h(m)), grid)
    for zk, mk in (("z1", "mean_s"), ("z2", "mean_i"), ("z3", "total_var")):
        assert np.max(np.abs(z[zk] - m[mk])) <= 1e-4
    assert np.all(z["z3"] >= -1e-10)
    assert "domain_exit_time" not in z.metadata


@pytest.mark.parametrize("n", [10, 30, 100])
def test_lower_closure_stays_below_master(n):
    grid = uniform_grid(5.0, 0.01)
    m = solve_master(ModelParams(3.0, 0.25, n), InitialCondition(0.9, 0.1), grid).table
    z = solve_closed(spec(n=n, eps=1 / n), grid)
    assert np.all(z["z1"] <= m["mean_s"] + 1e-10)


@pytest.mark.parametrize("h", [(1.1, 0, 0, 0), (0, -1.2, 0, 0), (0, 0, 2, 0), (0, 0, 0, -0.1), (0, 0, 0, 1.5)])
def test_range_guard_at_construction(h):
    with pytest.raises(ClosureRangeError):
        ClosureFunctions.constant(*h)


def test_table_range_guard():
    with pytest.raises(ClosureRangeError):
        ClosureFunctions.from_columns([0.0, 1.0], [0, 1.5], [0, 0], [0, 0], [0, 0])


def test_table_interpolation_and_extent():
    h = ClosureFunctions.from_columns([0.0, 1.0, 2.0], [0, 1, 0], [0, 0, 0], [0, 0, 0], [0, 0.5, 1])
    assert h(0.25) == (0.25, 0.0, 0.0, 0.125)
    assert h(2.0) == (0.0, 0.0, 0.0, 1.0)
    with pytest.raises(ClosureRangeError):
        h(2.5)


@pytest.mark.parametrize("eps", [-0.1, 1.5])
def test_epsilon_domain(eps):
    with pytest.raises(ConfigError):
        spec(eps=eps)


def test_total_variance_no_infection():
    p = ModelParams(0.0, 0.25, 10)
    t = solve_master(p, InitialCondition(0.9, 0.1), uniform_grid(5.0, 1e-3)).table
    assert total_variance_rhs_check(t, p)["interior"] < 1e-8


def test_total_variance_second_order_and_boundary():
    p, ic = ModelParams(3.0, 0.25, 10), InitialCondition(0.9, 0.1)
    res = [total_variance_rhs_check(solve_master(p, ic, uniform_grid(5.0, dt)).table, p) for dt in (0.02, 0.01, 0.005)]
    for a, b in zip(res, res[1:]):
        assert a["interior"] / b["interior"] == pytest.approx(4.0, rel=0.1)
        # one-sided difference at the deterministic start is first order
        assert a["boundary"] / b["boundary"] == pytest.approx(2.0, rel=0.1)


def test_upper_closure_blowup_is_reported():
    grid = uniform_grid(5.0, 0.01)
    s = spec(n=10, eps=0.1, h=(-1, -1, -0.8, 1), z0=(0.5, 0.5, 0.0))
    with pytest.raises(Exception):
        solve_closed(s, grid)
    z = solve_closed(s, grid, truncate_blowup=True)
    t_blow = float(z.metadata["blowup_time"])
    t_exit = float(z.metadata["domain_exit_time"])
    assert t_exit <= t_blow < 5.0
    assert np.all(np.isnan(z["z1"][grid > t_blow]))
    assert not np.any(np.isnan(z["z1"][grid < t_exit]))
