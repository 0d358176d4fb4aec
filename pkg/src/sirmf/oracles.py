"""Reference solutions that do not share code with the solvers they check."""

from __future__ import annotations

import numpy as np
from scipy.linalg import expm

from .core import InitialCondition, ModelParams


def dense_generator(p: ModelParams) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """Transition-rate matrix Q (rows sum to zero) over the feasible (S, I) states.

    States are enumerated independently of the solver's triangular index;
    the returned list gives the (S, I) pair of each row.
    """
    n = p.n
    states = [(S, I) for S in range(n + 1) for I in range(n + 1) if S + I <= n]
    where = {x: k for k, x in enumerate(states)}
    Q = np.zeros((len(states), len(states)))
    for k, (S, I) in enumerate(states):
        if S > 0 and I > 0:
            Q[k, where[(S - 1, I + 1)]] += p.tau / n * S * I
        if I > 0:
            Q[k, where[(S, I - 1)]] += p.gamma * I
        Q[k, k] = -Q[k].sum()
    return Q, states


def expm_distributions(p: ModelParams, ic: InitialCondition, times) -> dict[tuple[int, int], np.ndarray]:
    """P[S=i, I=j] at each time, as {(i, j): array over times}, via expm(Q t)."""
    Q, states = dense_generator(p)
    S0, I0 = ic.counts(p.n)
    p0 = np.zeros(len(states))
    p0[states.index((S0, I0))] = 1.0
    rows = np.array([p0 @ expm(Q * t) for t in times])
    return {x: rows[:, k] for k, x in enumerate(states)}
