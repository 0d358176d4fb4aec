"""Lipschitz/Gronwall error bound between the stochastic moments and the mean-field solution."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import InitialCondition, ModelParams, TrajectoryTable
from .master import solve_master
from .meanfield import solve_meanfield

INEQUALITY_TOL = 1e-12


class BoundViolation(AssertionError):
    """A computed error exceeded the bound that is supposed to dominate it."""


@dataclass(frozen=True)
class BoundParams:
    L: float
    M: float
    delta0: float
    T: float

    def __post_init__(self):
        if self.L < 0 or self.M < 0 or self.delta0 < 0 or self.T <= 0:
            raise ValueError(f"invalid bound parameters {self}")


def lipschitz_L(p: ModelParams) -> float:
    """Lipschitz constant 22 tau + 2 gamma of the closed system on its domain."""
    return 22 * p.tau + 2 * p.gamma


def perturbation_M(p: ModelParams, epsilon: float) -> float:
    """Sup-norm gap (4 tau + gamma) eps between the eps-system and the eps=0 system."""
    if not 0 <= epsilon <= 1:
        raise ValueError("epsilon must lie in [0, 1]")
    return (4 * p.tau + p.gamma) * epsilon


def gronwall_bound(b: BoundParams, t):
    """(delta0 + M/L) e^{Lt} - M/L, or delta0 + M t when L = 0.

    Evaluated as delta0 e^{x} + M t expm1(x)/x with x = Lt, which has no
    cancellation for small x and tends to the L = 0 form continuously.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t > b.T * (1 + 1e-12)):
        raise ValueError(f"t must lie in [0, {b.T}]")
    x = b.L * t
    with np.errstate(invalid="ignore", divide="ignore"):
        growth = np.where(x > 0, np.expm1(x) / np.where(x > 0, x, 1.0), 1.0)
    out = b.delta0 * np.exp(x) + b.M * t * growth
    return float(out) if out.ndim == 0 else out


def _z_from_master(table: TrajectoryTable) -> np.ndarray:
    return np.column_stack([table["mean_s"], table["mean_i"], table["total_var"]])


def mean_square_error(master: TrajectoryTable, meanfield: TrajectoryTable) -> TrajectoryTable:
    """Mean-square error of (s_n, i_n) about y(t), and the 1-norm distance of the moment vectors.

    mse = (E[s]-y1)^2 + (E[i]-y2)^2 + Var[s] + Var[i], which cannot exceed
    l1z = |E[s]-y1| + |E[i]-y2| + Var[s] + Var[i] because all means lie in
    [0, 1]. A violation raises :class:`BoundViolation`.
    """
    if master.times.shape != meanfield.times.shape or np.any(master.times != meanfield.times):
        raise ValueError("master and mean-field tables must share a time grid")
    ds = master["mean_s"] - meanfield["y1"]
    di = master["mean_i"] - meanfield["y2"]
    V = master["total_var"]
    mse = ds**2 + di**2 + V
    l1z = np.abs(ds) + np.abs(di) + np.abs(V)
    bad = np.flatnonzero(mse > l1z + INEQUALITY_TOL)
    if bad.size:
        k = bad[0]
        raise BoundViolation(f"mse={mse[k]!r} > l1z={l1z[k]!r} at t={master.times[k]}")
    return TrajectoryTable(master.times, {"mse": mse, "l1z": l1z})


@dataclass(frozen=True)
class BoundReport:
    table: TrajectoryTable  # t, measured_l1, gronwall, mse, ratio
    bound: BoundParams
    max_ratio: float
    holds: bool

    def violations(self) -> np.ndarray:
        return self.table.times[self.table["measured_l1"] > self.table["gronwall"]]


def verify_bound(p: ModelParams, ic: InitialCondition, grid, master=None, meanfield=None) -> BoundReport:
    """Measured ||z_n(t) - zbar(t)||_1 against the Gronwall bound on every grid point.

    ``master`` and ``meanfield`` may be passed to reuse solutions already
    computed on ``grid``. Never raises on a violation; check ``holds``.
    """
    grid = np.asarray(grid, dtype=float)
    if master is None:
        master = solve_master(p, ic, grid).table
    if meanfield is None:
        meanfield = solve_meanfield(p, ic, grid)
    z_n = _z_from_master(master)
    zbar = np.column_stack([meanfield["y1"], meanfield["y2"], np.zeros(grid.size)])
    measured = np.abs(z_n - zbar).sum(axis=1)
    delta0 = float(np.abs(z_n[0] - zbar[0]).sum())
    b = BoundParams(lipschitz_L(p), perturbation_M(p, 1 / p.n), delta0, float(grid[-1]))
    bound = gronwall_bound(b, grid)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(bound > 0, measured / bound, np.where(measured > 0, np.inf, 0.0))
    mse = mean_square_error(master, meanfield)["mse"]
    table = TrajectoryTable(grid, {"measured_l1": measured, "gronwall": bound, "mse": mse, "ratio": ratio})
    return BoundReport(table, b, float(np.max(ratio)), bool(np.all(measured <= bound)))


def bound_at(p: ModelParams, t: float, delta0: float = 0.0) -> float:
    """Gronwall bound with epsilon = 1/n at a single time (convenience for sweeps)."""
    b = BoundParams(lipschitz_L(p), perturbation_M(p, 1 / p.n), delta0, max(t, math.ulp(1.0)))
    return gronwall_bound(b, t)
