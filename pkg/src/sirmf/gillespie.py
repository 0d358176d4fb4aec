"""Event-driven simulation of the complete-graph SIR chain.

Random streams: replication ``r`` of a run with seed ``seed`` draws from
``PCG64(SeedSequence([seed, r]))``. Its uniforms are drawn up front (two per
event, at most ``2*S0 + I0`` events), so a replication's path depends only
on ``(seed, r)`` and never on how replications are batched or scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import InitialCondition, ModelParams, TrajectoryTable, validate_params
from .kernels import gillespie_paths


@dataclass(frozen=True)
class SimConfig:
    params: ModelParams
    ic: InitialCondition
    t_end: float
    replications: int
    seed: int

    def __post_init__(self):
        validate_params(self.params, self.ic, discrete=True)
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.t_end <= 0:
            raise ValueError("t_end must be positive")


@dataclass(frozen=True)
class EventPath:
    times: np.ndarray  # 0 followed by the jump times
    S: np.ndarray
    I: np.ndarray
    n: int

    @property
    def R(self) -> np.ndarray:
        return self.n - self.S - self.I


def replication_uniforms(seed: int, rep: int, n_events: int) -> np.ndarray:
    """Uniforms in (0, 1] for one replication; two per event."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, rep])))
    return 1.0 - rng.random(2 * max(n_events, 1))


def _max_events(cfg: SimConfig) -> int:
    S0, I0 = cfg.ic.counts(cfg.params.n)
    return 2 * S0 + I0


def simulate_one(cfg: SimConfig, rep_index: int) -> EventPath:
    """Full event path of one replication up to ``t_end`` (or absorption)."""
    p = cfg.params
    S, I = cfg.ic.counts(p.n)
    u = replication_uniforms(cfg.seed, rep_index, _max_events(cfg))
    beta = p.tau / p.n
    times, Ss, Is = [0.0], [S], [I]
    t, e = 0.0, 0
    while I > 0:
        rate_inf = beta * S * I
        total = rate_inf + p.gamma * I
        if total <= 0:
            break
        t = t - np.log(u[2 * e]) / total
        if t > cfg.t_end:
            break
        if u[2 * e + 1] * total < rate_inf:
            S, I = S - 1, I + 1
        else:
            I -= 1
        times.append(t)
        Ss.append(S)
        Is.append(I)
        e += 1
    return EventPath(np.array(times), np.array(Ss), np.array(Is), p.n)


def sample_paths(cfg: SimConfig, grid, reps=None, use_numba: bool | None = None):
    """(S, I) counts of replications ``reps`` (default: all) on ``grid``."""
    if reps is None:
        reps = range(cfg.replications)
    reps = list(reps)
    S0, I0 = cfg.ic.counts(cfg.params.n)
    m = _max_events(cfg)
    uniforms = np.empty((len(reps), 2 * max(m, 1)))
    for k, r in enumerate(reps):
        uniforms[k] = replication_uniforms(cfg.seed, r, m)
    p = cfg.params
    return gillespie_paths(uniforms, S0, I0, p.n, p.tau, p.gamma, np.asarray(grid, dtype=float), use_numba)


def run_ensemble(cfg: SimConfig, grid, use_numba: bool | None = None) -> TrajectoryTable:
    """Per-grid-time sample mean, variance and standard error of s and i.

    Sums are taken over integer counts, so they are exact and independent of
    replication order; scaling to fractions happens last.
    """
    grid = np.asarray(grid, dtype=float)
    if grid[-1] > cfg.t_end + 1e-12:
        raise ValueError("grid extends beyond t_end")
    S, I = sample_paths(cfg, grid, use_numba=use_numba)
    n, reps = cfg.params.n, cfg.replications

    def stats(X):
        total = X.sum(axis=0)
        sq = (X * X).sum(axis=0)
        mean = total / reps / n
        if reps == 1:
            return mean, np.zeros(grid.size)
        # exact integer numerator of the unbiased sample variance
        num = reps * sq - total * total
        return mean, num / (reps * (reps - 1)) / (n * n)

    mean_s, var_s = stats(S)
    mean_i, var_i = stats(I)
    return TrajectoryTable(
        grid,
        {
            "sim_mean_s": mean_s,
            "sim_mean_i": mean_i,
            "sim_var_s": var_s,
            "sim_var_i": var_i,
            "se_s": np.sqrt(var_s / reps),
            "se_i": np.sqrt(var_i / reps),
            "reps": np.full(grid.size, float(reps)),
        },
        {"seed": str(cfg.seed)},
    )
