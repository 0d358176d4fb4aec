"""Hot inner loops, each in a numba flavour and a vectorized numpy flavour.

``generator_action`` and ``gillespie_paths`` dispatch on ``_jit.USE_NUMBA``;
both flavours stay importable for benchmarking and cross-checking.
"""

from __future__ import annotations

import numpy as np

from . import _jit
from .core import n_states, state_grid, state_index

# --------------------------------------------------------------------------
# master equation right-hand side


@_jit.njit
def _generator_action_numba(p, n, tau, gamma, out):
    beta = tau / n
    k = 0
    for i in range(n + 1):
        row_next = k + (n + 1 - i)  # index of (i+1, 0)
        for j in range(n + 1 - i):
            d = -(beta * i * j + gamma * j) * p[k]
            if j >= 1 and i < n:
                # (i+1, j-1) lives in the next row at offset j-1
                d += beta * (i + 1) * (j - 1) * p[row_next + j - 1]
            if i + j < n:
                d += gamma * (j + 1) * p[k + 1]
            out[k] = d
            k += 1
    return out


class GeneratorTables:
    """Precomputed rates and source indices for the numpy flavour."""

    def __init__(self, n: int, tau: float, gamma: float):
        S, I = state_grid(n)
        beta = tau / n
        self.n = n
        self.out_rate = beta * S * I + gamma * I
        has_inf = (I >= 1) & (S < n)
        self.inf_src = np.where(has_inf, state_index(np.minimum(S + 1, n), np.maximum(I - 1, 0), n), 0)
        self.inf_rate = np.where(has_inf, beta * (S + 1) * (I - 1), 0.0)
        has_rec = S + I < n
        self.rec_src = np.where(has_rec, np.arange(n_states(n)) + 1, 0)
        self.rec_rate = np.where(has_rec, gamma * (I + 1), 0.0)

    def apply(self, p: np.ndarray) -> np.ndarray:
        return -self.out_rate * p + self.inf_rate * p[self.inf_src] + self.rec_rate * p[self.rec_src]


def generator_action_numba(p: np.ndarray, n: int, tau: float, gamma: float) -> np.ndarray:
    p = np.ascontiguousarray(p, dtype=np.float64)
    return _generator_action_numba(p, n, float(tau), float(gamma), np.empty_like(p))


def generator_action_numpy(p: np.ndarray, n: int, tau: float, gamma: float) -> np.ndarray:
    return GeneratorTables(n, tau, gamma).apply(np.asarray(p, dtype=float))


def make_generator_action(n: int, tau: float, gamma: float, use_numba: bool | None = None):
    """Return ``f(p) -> dp/dt`` for the flat triangular probability vector."""
    if use_numba is None:
        use_numba = _jit.USE_NUMBA
    if use_numba and _jit.HAVE_NUMBA:
        tau, gamma = float(tau), float(gamma)
        buf = np.empty(n_states(n))

        def action(p):
            p = np.ascontiguousarray(p, dtype=np.float64)
            return _generator_action_numba(p, n, tau, gamma, buf).copy()

        return action
    return GeneratorTables(n, tau, gamma).apply


# --------------------------------------------------------------------------
# Gillespie paths
#
# Each replication consumes a pre-drawn row of uniforms: two per event
# (waiting time, event choice). A path has at most 2*S0 + I0 events, so rows
# of that length always suffice.


@_jit.njit
def _gillespie_numba(uniforms, S0, I0, n, tau, gamma, grid, S_out, I_out):
    beta = tau / n
    reps = uniforms.shape[0]
    G = grid.shape[0]
    for r in range(reps):
        S = S0
        I = I0
        t = 0.0
        g = 0
        e = 0
        while True:
            rate_inf = beta * S * I
            rate_rec = gamma * I
            total = rate_inf + rate_rec
            if total > 0.0:
                t_next = t - np.log(uniforms[r, 2 * e]) / total
            else:
                t_next = np.inf
            while g < G and grid[g] < t_next:
                S_out[r, g] = S
                I_out[r, g] = I
                g += 1
            if g == G:
                break
            if uniforms[r, 2 * e + 1] * total < rate_inf:
                S -= 1
                I += 1
            else:
                I -= 1
            t = t_next
            e += 1
    return S_out, I_out


def gillespie_paths_numba(uniforms, S0, I0, n, tau, gamma, grid):
    reps = uniforms.shape[0]
    grid = np.ascontiguousarray(grid, dtype=np.float64)
    S_out = np.empty((reps, grid.size), dtype=np.int64)
    I_out = np.empty((reps, grid.size), dtype=np.int64)
    return _gillespie_numba(
        np.ascontiguousarray(uniforms, dtype=np.float64),
        int(S0), int(I0), int(n), float(tau), float(gamma), grid, S_out, I_out,
    )


def gillespie_paths_numpy(uniforms, S0, I0, n, tau, gamma, grid):
    """All replications advance one event per iteration, in lockstep."""
    uniforms = np.asarray(uniforms, dtype=float)
    grid = np.asarray(grid, dtype=float)
    reps = uniforms.shape[0]
    max_events = 2 * S0 + I0
    beta = tau / n
    S = np.full(reps, S0, dtype=np.int64)
    I = np.full(reps, I0, dtype=np.int64)
    t = np.zeros(reps)
    # jump_times[:, e] is the time of event e (inf once absorbed); states[:, e] the state before it
    jump_times = np.full((reps, max_events + 1), np.inf)
    S_hist = np.empty((reps, max_events + 1), dtype=np.int64)
    I_hist = np.empty((reps, max_events + 1), dtype=np.int64)
    for e in range(max_events + 1):
        S_hist[:, e] = S
        I_hist[:, e] = I
        rate_inf = beta * S * I
        total = rate_inf + gamma * I
        alive = total > 0.0
        if not alive.any():
            break
        with np.errstate(divide="ignore", invalid="ignore"):
            t_next = np.where(alive, t - np.log(uniforms[:, 2 * e]) / total, np.inf)
        jump_times[:, e] = t_next
        infect = alive & (uniforms[:, 2 * e + 1] * total < rate_inf)
        recover = alive & ~infect
        S = S - infect
        I = I + infect - recover
        t = np.where(alive, t_next, t)
    # number of events at or before each grid time, per replication
    counts = np.empty((reps, grid.size), dtype=np.int64)
    for r in range(reps):
        counts[r] = np.searchsorted(jump_times[r], grid, side="right")
    rows = np.arange(reps)[:, None]
    return S_hist[rows, counts], I_hist[rows, counts]


def gillespie_paths(uniforms, S0, I0, n, tau, gamma, grid, use_numba: bool | None = None):
    """Counts (S, I) of each replication sampled on ``grid`` by carry-forward."""
    if use_numba is None:
        use_numba = _jit.USE_NUMBA
    fn = gillespie_paths_numba if use_numba and _jit.HAVE_NUMBA else gillespie_paths_numpy
    return fn(uniforms, S0, I0, n, tau, gamma, grid)
