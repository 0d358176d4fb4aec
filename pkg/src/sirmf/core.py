"""Shared domain types, validation and moment arithmetic."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

NORMALIZATION_TOL = 1e-9


class ConfigError(ValueError):
    """Invalid parameters or initial conditions."""


@dataclass(frozen=True)
class ModelParams:
    """Complete-graph SIR rates. Each infected node infects each susceptible at ``tau / n``."""

    tau: float
    gamma: float
    n: int

    def __post_init__(self):
        if not np.isfinite(self.tau) or self.tau < 0:
            raise ConfigError(f"tau must be finite and >= 0, got {self.tau}")
        if not np.isfinite(self.gamma) or self.gamma < 0:
            raise ConfigError(f"gamma must be finite and >= 0, got {self.gamma}")
        if int(self.n) != self.n or self.n < 1:
            raise ConfigError(f"n must be a positive integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))


@dataclass(frozen=True)
class InitialCondition:
    s0: float
    i0: float

    def __post_init__(self):
        for name, v in (("s0", self.s0), ("i0", self.i0)):
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")
        if self.s0 + self.i0 > 1.0 + 1e-12:
            raise ConfigError(f"s0 + i0 must be <= 1, got {self.s0 + self.i0}")

    def counts(self, n: int) -> tuple[int, int]:
        """Integer (S, I) at time 0; raises if ``s0*n`` or ``i0*n`` is not integral."""
        S, I = self.s0 * n, self.i0 * n
        rS, rI = round(S), round(I)
        if abs(S - rS) > 1e-9 or abs(I - rI) > 1e-9:
            raise ConfigError(f"s0*n={S} and i0*n={I} must be integers for n={n}")
        return int(rS), int(rI)


@dataclass(frozen=True)
class CheckedParams:
    params: ModelParams
    ic: InitialCondition
    discrete: bool


def validate_params(p: ModelParams, ic: InitialCondition, discrete: bool = True) -> CheckedParams:
    """Bundle ``p`` and ``ic`` after checking the cross-constraints.

    The dataclasses already validate themselves; this adds the integrality
    requirement that the discrete solvers (master equation, Gillespie) need.
    """
    if not isinstance(p, ModelParams) or not isinstance(ic, InitialCondition):
        raise ConfigError("expected ModelParams and InitialCondition")
    if discrete:
        ic.counts(p.n)
    return CheckedParams(p, ic, discrete)


# --------------------------------------------------------------------------
# triangular state space


def n_states(n: int) -> int:
    return (n + 1) * (n + 2) // 2


def state_index(i, j, n: int):
    """Row-major index of (S=i, I=j) in the triangle i + j <= n."""
    return i * (n + 1) - i * (i - 1) // 2 + j


def state_grid(n: int) -> tuple[np.ndarray, np.ndarray]:
    """S and I count of every triangular index, in index order."""
    S = np.repeat(np.arange(n + 1), np.arange(n + 1, 0, -1))
    offsets = state_index(S, 0, n)
    I = np.arange(n_states(n)) - offsets
    return S, I


@dataclass(frozen=True)
class StateDistribution:
    """P[S_n = i, I_n = j] over the feasible triangle, stored flat."""

    n: int
    mass: np.ndarray

    def __post_init__(self):
        mass = np.asarray(self.mass, dtype=float)
        if mass.shape != (n_states(self.n),):
            raise ValueError(f"mass must have {n_states(self.n)} entries for n={self.n}")
        mass = mass.copy()
        mass.flags.writeable = False
        object.__setattr__(self, "mass", mass)

    @classmethod
    def point_mass(cls, n: int, S: int, I: int) -> "StateDistribution":
        if S < 0 or I < 0 or S + I > n:
            raise ValueError(f"state ({S}, {I}) is outside the triangle for n={n}")
        mass = np.zeros(n_states(n))
        mass[state_index(S, I, n)] = 1.0
        return cls(n, mass)

    @classmethod
    def from_dict(cls, n: int, probs: Mapping[tuple[int, int], float]) -> "StateDistribution":
        mass = np.zeros(n_states(n))
        for (S, I), p in probs.items():
            if S < 0 or I < 0 or S + I > n:
                raise ValueError(f"state ({S}, {I}) is outside the triangle for n={n}")
            mass[state_index(S, I, n)] += p
        return cls(n, mass)

    def prob(self, S: int, I: int) -> float:
        if S < 0 or I < 0 or S + I > self.n:
            return 0.0
        return float(self.mass[state_index(S, I, self.n)])

    def as_matrix(self) -> np.ndarray:
        """(n+1, n+1) array with P[S=i, I=j] at [i, j]; zero outside the triangle."""
        out = np.zeros((self.n + 1, self.n + 1))
        S, I = state_grid(self.n)
        out[S, I] = self.mass
        return out


# --------------------------------------------------------------------------
# moments


@dataclass(frozen=True)
class MomentSet:
    mean_s: float
    mean_i: float
    var_s: float
    var_i: float
    e_si: float
    e_s2i: float
    e_si2: float
    e_s2: float
    e_i2: float
    mean_r: float

    @property
    def total_var(self) -> float:
        return self.var_s + self.var_i


@dataclass(frozen=True)
class MomentVector:
    """(E[s], E[i], Var[s] + Var[i])."""

    z1: float
    z2: float
    z3: float

    @classmethod
    def from_moments(cls, m: MomentSet) -> "MomentVector":
        return cls(m.mean_s, m.mean_i, m.total_var)

    def as_array(self) -> np.ndarray:
        return np.array([self.z1, self.z2, self.z3])

    def in_domain(self) -> bool:
        return 0 <= self.z1 <= 1 and 0 <= self.z2 <= 1 and 0 <= self.z3 <= 2


MOMENT_COLUMNS = ("mean_s", "mean_i", "var_s", "var_i", "e_si", "e_s2i", "e_si2", "total_var")


def moment_arrays(masses: np.ndarray, n: int) -> dict[str, np.ndarray]:
    """Moments of each row of ``masses`` (shape (..., n_states)) as fractions s=S/n, i=I/n.

    Variances are computed as central moments rather than E[x^2] - E[x]^2 to
    keep them accurate when they are small.
    """
    masses = np.asarray(masses, dtype=float)
    S, I = state_grid(n)
    s, i = S / n, I / n
    mean_s = masses @ s
    mean_i = masses @ i
    ds = s - mean_s[..., None]
    di = i - mean_i[..., None]
    var_s = np.einsum("...k,...k->...", masses, ds * ds)
    var_i = np.einsum("...k,...k->...", masses, di * di)
    return {
        "mean_s": mean_s,
        "mean_i": mean_i,
        "var_s": var_s,
        "var_i": var_i,
        "e_si": masses @ (s * i),
        "e_s2i": masses @ (s * s * i),
        "e_si2": masses @ (s * i * i),
        "e_s2": masses @ (s * s),
        "e_i2": masses @ (i * i),
        "mean_r": masses @ ((n - S - I) / n),
        "total_var": var_s + var_i,
    }


def moments_from_distribution(d: StateDistribution, tol: float = NORMALIZATION_TOL) -> MomentSet:
    """Exact expectations of s, i and their products under ``d``."""
    total = float(np.sum(d.mass))
    if abs(total - 1.0) > tol:
        raise ValueError(f"distribution is not normalized: total mass {total!r}")
    m = moment_arrays(d.mass, d.n)
    return MomentSet(**{k: float(m[k]) for k in MomentSet.__dataclass_fields__})


# --------------------------------------------------------------------------
# trajectory table


@dataclass(frozen=True)
class TrajectoryTable:
    """Time grid plus named columns; the exchange format between solvers and CSV."""

    times: np.ndarray
    columns: dict[str, np.ndarray]
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        times = np.array(self.times, dtype=float)
        if times.ndim != 1 or times.size == 0:
            raise ValueError("times must be a non-empty 1-d array")
        if times[0] != 0.0:
            raise ValueError("times[0] must be 0")
        if np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        times.flags.writeable = False
        cols = {}
        for name, v in self.columns.items():
            arr = np.array(v, dtype=float)
            if arr.shape != times.shape:
                raise ValueError(f"column {name!r} has {arr.size} entries, expected {times.size}")
            arr.flags.writeable = False
            cols[name] = arr
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "metadata", {str(k): str(v) for k, v in self.metadata.items()})

    def __getitem__(self, name: str) -> np.ndarray:
        if name == "t":
            return self.times
        return self.columns[name]

    def __len__(self) -> int:
        return self.times.size

    @property
    def names(self) -> list[str]:
        return list(self.columns)

    def with_columns(self, extra: Mapping[str, np.ndarray], **metadata) -> "TrajectoryTable":
        return TrajectoryTable(self.times, {**self.columns, **extra}, {**self.metadata, **metadata})

    def select(self, names) -> "TrajectoryTable":
        return TrajectoryTable(self.times, {k: self.columns[k] for k in names}, self.metadata)

    def to_csv(self, path=None) -> str:
        """Comma-separated text with a ``t`` column first; metadata as ``# key=value`` lines.

        Floats use ``repr`` so that :meth:`from_csv` round-trips exactly.
        """
        buf = io.StringIO()
        for k, v in self.metadata.items():
            buf.write(f"# {k}={v}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", *self.columns])
        cols = [self.times, *self.columns.values()]
        for row in zip(*cols):
            w.writerow([repr(float(x)) for x in row])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, source) -> "TrajectoryTable":
        if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
            source = Path(source).read_text()
        metadata = {}
        body = []
        for line in source.splitlines():
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                metadata[key] = value
            elif line:
                body.append(line)
        rows = list(csv.reader(body))
        header, data = rows[0], np.array([[float(x) for x in r] for r in rows[1:]])
        if header[0] != "t":
            raise ValueError("first CSV column must be 't'")
        data = data.reshape(-1, len(header))
        return cls(data[:, 0], {h: data[:, k] for k, h in enumerate(header) if k}, metadata)


def uniform_grid(t_end: float, dt: float) -> np.ndarray:
    """0, dt, 2dt, ..., t_end (t_end must be a multiple of dt up to rounding)."""
    if dt <= 0 or t_end <= 0:
        raise ConfigError("t_end and dt must be positive")
    steps = t_end / dt
    k = int(round(steps))
    if abs(steps - k) > 1e-9 * max(1.0, steps):
        raise ConfigError(f"t_end={t_end} is not a multiple of dt={dt}")
    return np.linspace(0.0, t_end, k + 1)
