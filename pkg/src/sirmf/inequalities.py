"""Variance and covariance inequalities checked by exact enumeration over finite supports.

Every check returns slacks (right side minus left side). Floating-point mode
uses ``math.fsum``; ``exact=True`` converts the (binary) inputs to
``Fraction`` and evaluates everything in rational arithmetic, apart from the
square roots in the geometric-mean forms, which are then compared squared.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

SLACK_TOL = -1e-12


@dataclass(frozen=True)
class DiscreteRV:
    values: tuple
    probs: tuple

    def __post_init__(self):
        if len(self.values) != len(self.probs) or not self.values:
            raise ValueError("values and probs must be non-empty and of equal length")
        if any(p < 0 for p in self.probs):
            raise ValueError("probabilities must be non-negative")
        if abs(math.fsum(float(p) for p in self.probs) - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1")

    def in_unit_interval(self) -> bool:
        return all(0 <= v <= 1 for v in self.values)


@dataclass(frozen=True)
class JointRV:
    ys: tuple
    zs: tuple
    probs: tuple

    def __post_init__(self):
        if not (len(self.ys) == len(self.zs) == len(self.probs)) or not self.ys:
            raise ValueError("ys, zs and probs must be non-empty and of equal length")
        if any(p < 0 for p in self.probs):
            raise ValueError("probabilities must be non-negative")
        if abs(math.fsum(float(p) for p in self.probs) - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1")

    def in_unit_square(self) -> bool:
        return all(0 <= y <= 1 for y in self.ys) and all(0 <= z <= 1 for z in self.zs)


def _arith(exact: bool):
    if exact:
        def conv(xs):
            return [Fraction(x) for x in xs]

        def total(xs):
            return sum(xs, Fraction(0))
    else:
        def conv(xs):
            return [float(x) for x in xs]

        total = math.fsum
    return conv, total


def _normalized(probs, conv, total, exact):
    p = conv(probs)
    if exact:
        s = total(p)
        p = [q / s for q in p]
    return p


def _moments(values, p, total):
    mean = total([pi * v for pi, v in zip(p, values)])
    var = total([pi * (v - mean) ** 2 for pi, v in zip(p, values)])
    return mean, var


def _sqrt_product_slack(lhs_abs, scale, va, vb, exact):
    """Slack of ``|lhs| <= scale * sqrt(va vb)``, squared in exact mode."""
    if exact:
        rhs2 = scale * scale * va * vb
        diff = rhs2 - lhs_abs * lhs_abs
        # report on the unsquared scale; the sign is what is exact
        return float(diff) / max(float(scale) * math.sqrt(float(va * vb)) + float(lhs_abs), 1e-300)
    return scale * math.sqrt(va * vb) - lhs_abs


def check_lemma3(joint: JointRV, exact: bool = False) -> float:
    """Slack of Var[Y+Z] <= 2(Var[Y] + Var[Z]); any bounded support."""
    conv, total = _arith(exact)
    p = _normalized(joint.probs, conv, total, exact)
    ys, zs = conv(joint.ys), conv(joint.zs)
    _, vy = _moments(ys, p, total)
    _, vz = _moments(zs, p, total)
    _, vsum = _moments([y + z for y, z in zip(ys, zs)], p, total)
    return 2 * (vy + vz) - vsum


def check_lemma4(rv: DiscreteRV, exact: bool = False) -> float:
    """Slack of Var[Y^2] <= 4 Var[Y] for Y supported in [0, 1]."""
    if not rv.in_unit_interval():
        raise ValueError("support must lie in [0, 1]")
    conv, total = _arith(exact)
    p = _normalized(rv.probs, conv, total, exact)
    ys = conv(rv.values)
    _, vy = _moments(ys, p, total)
    _, vy2 = _moments([y * y for y in ys], p, total)
    return 4 * vy - vy2


@dataclass(frozen=True)
class Lemma5Slacks:
    cov_half_var: float  # (Var Y + Var Z)/2 - |E[YZ] - E[Y]E[Z]|
    skew_two_var: float  # 2(Var Y + Var Z) - |E[Y^2 Z] - E[Y]^2 E[Z]|
    cov_geometric: float  # sqrt(Var Y Var Z) - |E[YZ] - E[Y]E[Z]|
    sq_cov_geometric: float  # 2 sqrt(Var Y Var Z) - |E[Y^2 Z] - E[Y^2]E[Z]|

    def min(self) -> float:
        return min(self.cov_half_var, self.skew_two_var, self.cov_geometric, self.sq_cov_geometric)


def check_lemma5(joint: JointRV, exact: bool = False) -> Lemma5Slacks:
    if not joint.in_unit_square():
        raise ValueError("support must lie in the unit square")
    conv, total = _arith(exact)
    p = _normalized(joint.probs, conv, total, exact)
    ys, zs = conv(joint.ys), conv(joint.zs)
    ey, vy = _moments(ys, p, total)
    ez, vz = _moments(zs, p, total)
    ey2 = total([pi * y * y for pi, y in zip(p, ys)])
    # covariances as centred sums; E[YZ]-E[Y]E[Z] has the same value exactly
    cov = total([pi * (y - ey) * (z - ez) for pi, y, z in zip(p, ys, zs)])
    cov_y2z = total([pi * (y * y - ey2) * (z - ez) for pi, y, z in zip(p, ys, zs)])
    e_y2z = total([pi * y * y * z for pi, y, z in zip(p, ys, zs)])
    gap_4b = abs(e_y2z - ey * ey * ez)
    two = 2 if exact else 2.0
    return Lemma5Slacks(
        cov_half_var=float((vy + vz) / 2 - abs(cov)),
        skew_two_var=float(two * (vy + vz) - gap_4b),
        cov_geometric=float(_sqrt_product_slack(abs(cov), 1, vy, vz, exact)),
        sq_cov_geometric=float(_sqrt_product_slack(abs(cov_y2z), two, vy, vz, exact)),
    )


def lemma4_tightness_ratio(delta: float) -> float:
    """Var[Y^2] / Var[Y] for P[Y=1] = P[Y=1-2 delta] = 1/2, by exact enumeration."""
    if not 0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 1/2)")
    rv = DiscreteRV((1.0, 1.0 - 2.0 * delta), (0.5, 0.5))
    conv, total = _arith(True)
    p = conv(rv.probs)
    ys = conv(rv.values)
    _, vy = _moments(ys, p, total)
    _, vy2 = _moments([y * y for y in ys], p, total)
    return float(vy2 / vy)


def tightness_formula(delta: float) -> float:
    return 4 * (1 - 2 * delta + delta**2)


# --------------------------------------------------------------------------
# random instances


def instance_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, index])))


def random_rv(rng: np.random.Generator) -> DiscreteRV:
    k = int(rng.integers(2, 11))
    return DiscreteRV(tuple(rng.random(k)), tuple(_simplex(rng, k)))


def random_joint(rng: np.random.Generator) -> JointRV:
    k = int(rng.integers(2, 11))
    pts = rng.random((k, 2))
    return JointRV(tuple(pts[:, 0]), tuple(pts[:, 1]), tuple(_simplex(rng, k)))


def _simplex(rng, k):
    w = rng.dirichlet(np.ones(k))
    # force an exact float sum of 1 so the instance is a genuine distribution
    w[-1] = 1.0 - math.fsum(w[:-1])
    if w[-1] < 0:
        w = np.abs(w) / math.fsum(np.abs(w))
    return w


@dataclass
class LemmaSuiteResult:
    rows: list  # dicts: lemma, seed, index, support, slack
    violations: dict

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, ["lemma", "seed", "index", "support", "slack"], lineterminator="\n")
        w.writeheader()
        w.writerows(self.rows)
        return buf.getvalue()

    @property
    def ok(self) -> bool:
        return not any(self.violations.values())


def run_lemma_suite(count: int = 10_000, seed: int = 0, tol: float = SLACK_TOL) -> LemmaSuiteResult:
    """``count`` random instances for each check.

    Instance ``k`` of ``check_lemma3``, ``check_lemma4`` and ``check_lemma5``
    is rebuilt from ``instance_rng(seed, k)``, ``instance_rng(seed + 1, k)``
    and ``instance_rng(seed + 2, k)`` respectively.
    """
    rows = []
    names5 = ("cov_half_var", "skew_two_var", "cov_geometric", "sq_cov_geometric")
    violations = dict.fromkeys(("lemma3", "lemma4", *names5), 0)
    for k in range(count):
        joint = random_joint(instance_rng(seed, k))
        # no unit-interval restriction here: map [0,1] to [-3, 3]
        shifted = JointRV(tuple(6 * y - 3 for y in joint.ys), tuple(6 * z - 3 for z in joint.zs), joint.probs)
        slack = check_lemma3(shifted)
        violations["lemma3"] += slack < tol
        rows.append({"lemma": "lemma3", "seed": seed, "index": k, "support": len(joint.ys), "slack": slack})
    for k in range(count):
        rv = random_rv(instance_rng(seed + 1, k))
        slack = check_lemma4(rv)
        violations["lemma4"] += slack < tol
        rows.append({"lemma": "lemma4", "seed": seed + 1, "index": k, "support": len(rv.values), "slack": slack})
    for k in range(count):
        joint = random_joint(instance_rng(seed + 2, k))
        s = check_lemma5(joint)
        for name in names5:
            v = getattr(s, name)
            violations[name] += v < tol
            rows.append({"lemma": name, "seed": seed + 2, "index": k, "support": len(joint.ys), "slack": v})
    return LemmaSuiteResult(rows, violations)


def lemma5_on_distribution(values_y: Sequence[float], values_z: Sequence[float], probs) -> Lemma5Slacks:
    """Apply :func:`check_lemma5` to an arbitrary finite joint law (e.g. a solver distribution)."""
    mask = np.asarray(probs) > 0
    return check_lemma5(
        JointRV(
            tuple(np.asarray(values_y)[mask]),
            tuple(np.asarray(values_z)[mask]),
            tuple(_renormalize(np.asarray(probs)[mask])),
        )
    )


def _renormalize(p):
    p = np.asarray(p, dtype=float)
    p = p / math.fsum(p)
    p[-1] = 1.0 - math.fsum(p[:-1])
    return p
