"""Explicit adaptive Runge-Kutta integration (Dormand-Prince 5(4)).

All solvers in the package go through :func:`integrate` so that trajectories
computed on a shared grid are directly comparable. Steps never cross an
output time, so every output value is a genuine step endpoint (no dense-output
interpolation), and the error norm is the scaled max norm, which makes the
step sequence insensitive to components that stay identically zero.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

ATOL = 1e-10
RTOL = 1e-8

# Dormand & Prince (1980), 5th order solution propagated.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_A = [np.array(row) for row in _A]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B - _B4

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0
_ORDER = 5


class IntegrationError(RuntimeError):
    """The integrator could not meet its tolerance; ``t`` is where it gave up.

    ``partial`` holds the output rows completed before the failure, when known.
    """

    def __init__(self, message: str, t: float, partial: np.ndarray | None = None):
        super().__init__(f"{message} at t={t:.6g}")
        self.t = t
        self.partial = partial


def integrate(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0,
    grid,
    atol: float = ATOL,
    rtol: float = RTOL,
    first_step: float | None = None,
    max_steps: int = 10_000_000,
    on_output: Callable[[int, float, np.ndarray], np.ndarray | None] | None = None,
) -> np.ndarray:
    """Solve ``y' = rhs(t, y)`` from ``y(grid[0]) = y0`` and return ``y`` at every grid time.

    ``on_output(k, t, y)`` is called at each output time and may return a
    replacement state (used by the master solver to clamp round-off negatives).
    """
    grid = np.asarray(grid, dtype=float)
    y = np.array(y0, dtype=float)
    out = np.empty((grid.size, y.size))
    if on_output is not None:
        y = _replace(y, on_output(0, grid[0], y))
    out[0] = y
    if grid.size == 1:
        return out

    t = grid[0]
    f = np.asarray(rhs(t, y), dtype=float)
    h = first_step if first_step is not None else _initial_step(rhs, t, y, f, atol, rtol)
    K = np.empty((7, y.size))
    steps = 0
    for k in range(1, grid.size):
        t_target = grid[k]
        while t < t_target:
            steps += 1
            if steps > max_steps:
                raise IntegrationError("step budget exhausted", t, out[:k].copy())
            remaining = t_target - t
            last = h >= remaining * (1 - 1e-12)
            h_try = remaining if last else h
            if h_try <= 1e-14 * max(1.0, abs(t)):
                raise IntegrationError("step size underflow", t, out[:k].copy())
            K[0] = f
            for s in range(1, 7):
                ys = y + h_try * (_A[s] @ K[:s])
                K[s] = rhs(t + _C[s] * h_try, ys)
            y_new = ys  # stage 7 is evaluated at the 5th-order solution (FSAL)
            err_vec = h_try * (_E @ K)
            scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
            with np.errstate(invalid="ignore", over="ignore"):
                err = float(np.max(np.abs(err_vec) / scale)) if y.size else 0.0
            if not np.isfinite(err) or not np.all(np.isfinite(y_new)):
                h = 0.25 * h_try
                continue
            if err <= 1.0:
                t = t_target if last else t + h_try
                y = y_new
                f = K[6]
                factor = _MAX_FACTOR if err == 0 else min(_MAX_FACTOR, _SAFETY * err ** (-1 / _ORDER))
                # a short final step to hit the grid must not shrink the next one
                h = max(h, h_try * factor) if last else h_try * factor
            else:
                h = h_try * max(_MIN_FACTOR, _SAFETY * err ** (-1 / _ORDER))
        if on_output is not None:
            replaced = on_output(k, t, y)
            if replaced is not None:
                y = _replace(y, replaced)
                f = np.asarray(rhs(t, y), dtype=float)
        out[k] = y
    return out


def _replace(y, new):
    return y if new is None else np.array(new, dtype=float)


def _initial_step(rhs, t, y, f, atol, rtol):
    # Hairer, Norsett & Wanner, Solving ODEs I, II.4
    scale = atol + rtol * np.abs(y)
    d0 = np.max(np.abs(y) / scale) if y.size else 0.0
    d1 = np.max(np.abs(f) / scale) if y.size else 0.0
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    f1 = rhs(t + h0, y + h0 * f)
    d2 = np.max(np.abs(f1 - f) / scale) / h0 if y.size else 0.0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / _ORDER)
    return min(100 * h0, h1)
