"""Closed three-equation moment system with pluggable closure functions.

State is ``z = (E[s], E[i], Var[s] + Var[i])``. The closure functions
h1..h4 stand in for the product moments the moment equations cannot express:

    E[si]   = E[s]E[i]   + h1 (Var[s]+Var[i]) / 2
    E[s^2i] = E[s]^2E[i] + 2 h2 (Var[s]+Var[i])
    E[si^2] = E[s]E[i]^2 + 2 h3 (Var[s]+Var[i])
    Var[i]  = h4 (Var[s]+Var[i])

with h1..h3 in [-1, 1] and h4 in [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ConfigError, ModelParams, MomentVector, TrajectoryTable
from .integrate import ATOL, RTOL, IntegrationError, integrate

H_RANGES = ((-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0), (0.0, 1.0))
RANGE_TOL = 1e-9


class ClosureRangeError(ConfigError):
    pass


def _check_range(values, t=None):
    for k, (v, (lo, hi)) in enumerate(zip(values, H_RANGES)):
        if not lo - RANGE_TOL <= v <= hi + RANGE_TOL:
            where = "" if t is None else f" at t={t:.6g}"
            raise ClosureRangeError(f"h{k + 1}={v!r} outside [{lo}, {hi}]{where}")


class ClosureFunctions:
    """h1..h4 as constants or as a piecewise-linear table in time."""

    def __init__(self, constants=None, times=None, table=None):
        if (constants is None) == (table is None):
            raise ValueError("give either constants or (times, table)")
        if constants is not None:
            constants = tuple(float(c) for c in constants)
            if len(constants) != 4:
                raise ValueError("need four closure constants")
            _check_range(constants)
            self.constants = constants
            self.times = None
            self.table = None
        else:
            times = np.asarray(times, dtype=float)
            table = np.asarray(table, dtype=float)
            if table.shape != (times.size, 4):
                raise ValueError("table must have shape (len(times), 4)")
            for row, t in zip(table, times):
                _check_range(row, t)
            lo = np.array([r[0] for r in H_RANGES])
            hi = np.array([r[1] for r in H_RANGES])
            self.constants = None
            self.times = times
            self.table = np.clip(table, lo, hi)

    @classmethod
    def constant(cls, h1, h2, h3, h4) -> "ClosureFunctions":
        return cls(constants=(h1, h2, h3, h4))

    @classmethod
    def from_columns(cls, times, h1, h2, h3, h4) -> "ClosureFunctions":
        return cls(times=times, table=np.column_stack([h1, h2, h3, h4]))

    def __call__(self, t: float) -> tuple[float, float, float, float]:
        if self.constants is not None:
            return self.constants
        if t < self.times[0] - 1e-12 or t > self.times[-1] + 1e-12:
            raise ClosureRangeError(f"t={t} outside the closure table [{self.times[0]}, {self.times[-1]}]")
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        k = min(max(k, 0), self.times.size - 2)
        t0, t1 = self.times[k], self.times[k + 1]
        w = (t - t0) / (t1 - t0)
        row = (1 - w) * self.table[k] + w * self.table[k + 1]
        return tuple(float(x) for x in row)

    def columns(self) -> dict[str, np.ndarray]:
        if self.table is None:
            raise ValueError("constant closure has no time series")
        return {f"h{k + 1}": self.table[:, k] for k in range(4)}


@dataclass(frozen=True)
class ClosedSystemSpec:
    params: ModelParams
    epsilon: float
    closure: ClosureFunctions
    z0: MomentVector

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError(f"epsilon must lie in [0, 1], got {self.epsilon}")


def g_rhs(t: float, z, spec: ClosedSystemSpec) -> np.ndarray:
    """Right-hand side of the closed system at time ``t``."""
    tau, gamma, eps = spec.params.tau, spec.params.gamma, spec.epsilon
    h1, h2, h3, h4 = spec.closure(t)
    z1, z2, z3 = z
    # same association as meanfield_rhs so that z3 = eps = 0 reproduces it exactly
    flux = tau * (z1 * z2 + h1 * z3 / 2)
    g1 = -flux
    g2 = flux - gamma * z2
    g3 = (4 * tau * (h3 - h2) + tau * h1 * (z1 - z2 + eps) - 2 * gamma * h4) * z3 + (
        2 * tau * z1 * z2 + gamma * z2
    ) * eps
    return np.array([g1, g2, g3])


def _domain_exit(z: np.ndarray, times: np.ndarray):
    inside = (
        (z[:, 0] >= 0) & (z[:, 0] <= 1) & (z[:, 1] >= 0) & (z[:, 1] <= 1) & (z[:, 2] >= 0) & (z[:, 2] <= 2)
    )
    bad = np.flatnonzero(~inside)
    return None if bad.size == 0 else float(times[bad[0]])


def solve_closed(
    spec: ClosedSystemSpec,
    grid,
    atol: float = ATOL,
    rtol: float = RTOL,
    truncate_blowup: bool = False,
) -> TrajectoryTable:
    """Integrate the closed system on ``grid``.

    ``z`` is never projected back into the domain. The first grid time at
    which it is outside ``[0,1]^2 x [0,2]`` is stored as the
    ``domain_exit_time`` metadata entry.

    Constant closures can drive the solution to infinity in finite time. By
    default the resulting :class:`IntegrationError` propagates; with
    ``truncate_blowup=True`` the remaining grid rows are NaN and the failure
    time is stored as ``blowup_time``.
    """
    grid = np.asarray(grid, dtype=float)
    meta = {}
    try:
        z = integrate(lambda t, y: g_rhs(t, y, spec), spec.z0.as_array(), grid, atol=atol, rtol=rtol)
    except IntegrationError as exc:
        if not truncate_blowup or exc.partial is None:
            raise
        z = np.full((grid.size, 3), np.nan)
        z[: len(exc.partial)] = exc.partial
        meta["blowup_time"] = repr(float(exc.t))
    exit_time = _domain_exit(z, grid)
    if exit_time is not None:
        meta["domain_exit_time"] = repr(float(exit_time))
    return TrajectoryTable(grid, {"z1": z[:, 0], "z2": z[:, 1], "z3": z[:, 2]}, meta)


def total_variance_rhs_check(table: TrajectoryTable, p: ModelParams) -> dict[str, float]:
    """Compare the numerical derivative of Var[s]+Var[i] against its exact expression.

    Interior points use centered differences; the first point uses a
    one-sided difference (first order). Returns max residuals of each.
    """
    tau, gamma, n = p.tau, p.gamma, p.n
    times = table.times
    dt = float(np.mean(np.diff(times)))
    V = table["total_var"]
    rhs = (
        2 * tau * (table["e_si2"] - table["e_s2i"])
        + 2 * tau * table["e_si"] * (table["mean_s"] - table["mean_i"] + 1 / n)
        - 2 * gamma * table["var_i"]
        + gamma * table["mean_i"] / n
    )
    central = (V[2:] - V[:-2]) / (2 * dt)
    forward = (V[1] - V[0]) / dt
    return {
        "interior": float(np.max(np.abs(central - rhs[1:-1]))),
        "boundary": float(abs(forward - rhs[0])),
    }
