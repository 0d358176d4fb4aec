"""Mean-field SIR equations y1' = -tau y1 y2, y2' = tau y1 y2 - gamma y2."""

from __future__ import annotations

import numpy as np

from .core import InitialCondition, ModelParams, TrajectoryTable, validate_params
from .integrate import ATOL, RTOL, integrate


def meanfield_rhs(y, p: ModelParams) -> np.ndarray:
    y1, y2 = y
    flux = p.tau * (y1 * y2)
    return np.array([-flux, flux - p.gamma * y2])


def solve_meanfield(
    p: ModelParams, ic: InitialCondition, grid, atol: float = ATOL, rtol: float = RTOL
) -> TrajectoryTable:
    validate_params(p, ic, discrete=False)
    grid = np.asarray(grid, dtype=float)
    y = integrate(lambda t, y: meanfield_rhs(y, p), [ic.s0, ic.i0], grid, atol=atol, rtol=rtol)
    return TrajectoryTable(grid, {"y1": y[:, 0], "y2": y[:, 1]})
