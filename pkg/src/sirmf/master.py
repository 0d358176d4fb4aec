"""Transient solution of the Kolmogorov forward equations on the (S, I) triangle."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .closure import ClosureFunctions
from .core import (
    MOMENT_COLUMNS,
    NORMALIZATION_TOL,
    InitialCondition,
    ModelParams,
    StateDistribution,
    TrajectoryTable,
    moment_arrays,
    n_states,
    validate_params,
)
from .integrate import ATOL, RTOL, IntegrationError, integrate
from .kernels import make_generator_action

H_FLOOR = 1e-12
NEGATIVE_MASS_TOL = 1e-12


def build_generator_action(p: ModelParams, use_numba: bool | None = None):
    """Time derivative of a distribution under the forward equations.

    The returned callable accepts a :class:`StateDistribution` or a flat mass
    vector and returns the derivative as a flat vector.
    """
    action = make_generator_action(p.n, p.tau, p.gamma, use_numba)

    def apply(d):
        mass = d.mass if isinstance(d, StateDistribution) else np.asarray(d, dtype=float)
        if mass.shape != (n_states(p.n),):
            raise ValueError(f"expected {n_states(p.n)} states for n={p.n}")
        return action(mass)

    return apply


@dataclass(frozen=True)
class MasterSolution:
    params: ModelParams
    table: TrajectoryTable
    masses: np.ndarray  # (len(grid), n_states)
    min_raw_mass: float  # most negative entry seen before clamping

    @property
    def times(self) -> np.ndarray:
        return self.table.times

    def distribution(self, k: int) -> StateDistribution:
        return StateDistribution(self.params.n, self.masses[k])

    def distributions(self):
        return [self.distribution(k) for k in range(len(self.times))]


def solve_master(
    p: ModelParams,
    ic: InitialCondition,
    grid,
    atol: float = ATOL,
    rtol: float = RTOL,
    use_numba: bool | None = None,
) -> MasterSolution:
    """Integrate the forward equations from the point mass at ``(n*s0, n*i0)``.

    Round-off negatives are clamped to zero and the vector renormalized at
    each output time, provided the total correction stays below 1e-9;
    anything larger is treated as an accuracy failure.
    """
    validate_params(p, ic, discrete=True)
    S0, I0 = ic.counts(p.n)
    grid = np.asarray(grid, dtype=float)
    action = make_generator_action(p.n, p.tau, p.gamma, use_numba)
    min_raw = [0.0]

    def rhs(t, y):
        return action(y)

    def clamp(k, t, y):
        low = float(y.min())
        min_raw[0] = min(min_raw[0], low)
        total = float(y.sum())
        if low >= 0 and total == 1.0:
            return None
        neg = float(-y[y < 0].sum())
        if neg > NORMALIZATION_TOL or abs(total - 1.0) > NORMALIZATION_TOL:
            raise IntegrationError(
                f"probability drift too large (negative mass {neg:.3g}, total {total!r})", t
            )
        y = np.maximum(y, 0.0)
        return y / y.sum()

    y0 = StateDistribution.point_mass(p.n, S0, I0).mass
    masses = integrate(rhs, y0, grid, atol=atol, rtol=rtol, on_output=clamp)
    m = moment_arrays(masses, p.n)
    table = TrajectoryTable(grid, {k: m[k] for k in MOMENT_COLUMNS})
    return MasterSolution(p, table, masses, min_raw[0])


def _central_diff(y: np.ndarray, dt: float) -> np.ndarray:
    return (y[2:] - y[:-2]) / (2 * dt)


def _uniform_step(times: np.ndarray) -> float:
    steps = np.diff(times)
    dt = float(steps.mean())
    if np.max(np.abs(steps - dt)) > 1e-9 * dt:
        raise ValueError("trajectory grid must be uniform")
    return dt


def check_moment_odes(sol: MasterSolution) -> dict[str, float]:
    """Max residual of the four count-moment ODEs, evaluated in fraction units.

    With s = S/n and i = I/n the equations read
    E[s]' = -tau E[si], E[i]' = tau E[si] - gamma E[i],
    E[s^2]' = -tau (2E[s^2 i] - E[si]/n),
    E[i^2]' = tau (2E[s i^2] + E[si]/n) - gamma (2E[i^2] - E[i]/n).
    The left-hand sides are centered differences on the (uniform) output
    grid, so residuals are O(dt^2) plus integration error.
    """
    p = sol.params
    tau, gamma, n = p.tau, p.gamma, p.n
    dt = _uniform_step(sol.times)
    m = moment_arrays(sol.masses, n)
    lhs = {
        "s": _central_diff(m["mean_s"], dt),
        "i": _central_diff(m["mean_i"], dt),
        "s2": _central_diff(m["e_s2"], dt),
        "i2": _central_diff(m["e_i2"], dt),
    }
    mid = slice(1, -1)
    e_si, e_s2i, e_si2 = m["e_si"][mid], m["e_s2i"][mid], m["e_si2"][mid]
    e_i, e_i2 = m["mean_i"][mid], m["e_i2"][mid]
    rhs = {
        "s": -tau * e_si,
        "i": tau * e_si - gamma * e_i,
        "s2": -tau * (2 * e_s2i - e_si / n),
        "i2": tau * (2 * e_si2 + e_si / n) - gamma * (2 * e_i2 - e_i / n),
    }
    names = {"s": "E[S]", "i": "E[I]", "s2": "E[S^2]", "i2": "E[I^2]"}
    return {names[k]: float(np.max(np.abs(lhs[k] - rhs[k]))) for k in lhs}


def extract_oracle_h(table: TrajectoryTable) -> ClosureFunctions:
    """Closure values that make the closed moment system exact along ``table``.

    Where the total variance is below 1e-12 the closure is undetermined and
    every h is reported as 0.
    """
    ms, mi = table["mean_s"], table["mean_i"]
    var_s, var_i = table["var_s"], table["var_i"]
    V = var_s + var_i
    ok = V >= H_FLOOR
    safe = np.where(ok, V, 1.0)
    h1 = (table["e_si"] - ms * mi) / (safe / 2)
    h2 = (table["e_s2i"] - ms**2 * mi) / (2 * safe)
    h3 = (table["e_si2"] - ms * mi**2) / (2 * safe)
    h4 = var_i / safe
    return ClosureFunctions.from_columns(table.times, *(np.where(ok, h, 0.0) for h in (h1, h2, h3, h4)))


def master_table_with_h(sol: MasterSolution) -> TrajectoryTable:
    return sol.table.with_columns(extract_oracle_h(sol.table).columns())
