"""Experiment recipes: figure reproductions, convergence sweeps, CSV output."""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .bounds import bound_at, mean_square_error, verify_bound
from .closure import ClosedSystemSpec, ClosureFunctions, solve_closed
from .core import ConfigError, InitialCondition, ModelParams, MomentVector, TrajectoryTable, uniform_grid
from .integrate import ATOL, RTOL
from .master import solve_master
from .meanfield import solve_meanfield

LOWER_H = (0.5, 1.0, 0.5, 1.0)
UPPER_H_ABC = (-1.0, -0.8, -0.4, 0.5)
UPPER_H_DEF = (-1.0, -1.0, -0.8, 1.0)
# comparisons of two integrated curves allow for the integrator's absolute tolerance
ORDER_SLACK = ATOL


class ExperimentError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "default"
    tau: float = 3.0
    gamma: float = 0.25
    n: int = 30
    s0: float = 0.9
    i0: float = 0.1
    t_end: float = 5.0
    dt: float = 0.01
    atol: float = ATOL
    rtol: float = RTOL
    n_values: tuple = (10, 30, 100)
    tau_values: tuple = (1.0, 3.0)
    lower_h: tuple = LOWER_H
    upper_h: tuple = UPPER_H_ABC
    upper_h_alt: tuple = UPPER_H_DEF
    # the figure-2 initial condition is not published; see README
    fig2_s0: float = 0.5
    fig2_i0: float = 0.5
    reps: int = 20_000
    seed: int = 0
    out: str = "results"
    jobs: int = 1

    def __post_init__(self):
        for name in ("n_values", "tau_values", "lower_h", "upper_h", "upper_h_alt"):
            value = getattr(self, name)
            object.__setattr__(self, name, tuple(value))
            if not value:
                raise ConfigError(f"{name} must be non-empty")
        for h in (self.lower_h, self.upper_h, self.upper_h_alt):
            ClosureFunctions.constant(*h)  # range check
        self.params()
        InitialCondition(self.s0, self.i0)
        InitialCondition(self.fig2_s0, self.fig2_i0)
        for n in self.n_values:
            ModelParams(self.tau, self.gamma, n)
        self.grid()
        if self.reps < 1:
            raise ConfigError("reps must be >= 1")

    def params(self, n=None, tau=None) -> ModelParams:
        return ModelParams(self.tau if tau is None else tau, self.gamma, self.n if n is None else n)

    def ic(self) -> InitialCondition:
        return InitialCondition(self.s0, self.i0)

    def grid(self) -> np.ndarray:
        return uniform_grid(self.t_end, self.dt)

    @classmethod
    def load(cls, path, **overrides) -> "ExperimentConfig":
        """Read a JSON object of field values, then apply non-None ``overrides``."""
        data = {}
        if path is not None:
            try:
                data = json.loads(Path(path).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from exc
            if not isinstance(data, dict):
                raise ConfigError("config file must contain a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def _map(fn, items, jobs: int):
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _write(table: TrajectoryTable, out: Path | None, name: str):
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        table.to_csv(out / name)


def _write_rows(rows: list[dict], out: Path | None, name: str):
    if out is None or not rows:
        return
    out.mkdir(parents=True, exist_ok=True)
    header = list(rows[0])
    lines = [",".join(header)] + [",".join(_fmt(r[h]) for h in header) for r in rows]
    (out / name).write_text("\n".join(lines) + "\n")


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (tuple, list)):
        return " ".join(_fmt(x) for x in v)
    return str(v)


def strictly_decreasing(xs) -> bool:
    return all(b < a for a, b in zip(xs, xs[1:]))


# --------------------------------------------------------------------------
# figure 1


@dataclass
class Figure1Result:
    tables: dict  # n -> TrajectoryTable(t, y1, mean_s)
    sup_error: dict  # n -> sup_t |E[s_n] - y1|
    decreasing: bool | None  # None when only one n

    @property
    def ok(self) -> bool:
        return self.decreasing is not False


def _figure1_point(args):
    cfg, n = args
    grid = cfg.grid()
    p = cfg.params(n=n)
    master = solve_master(p, cfg.ic(), grid, cfg.atol, cfg.rtol).table
    mf = solve_meanfield(p, cfg.ic(), grid, cfg.atol, cfg.rtol)
    return n, TrajectoryTable(grid, {"y1": mf["y1"], "mean_s": master["mean_s"]})


def run_figure1(cfg: ExperimentConfig, out: Path | None = None) -> Figure1Result:
    """Mean-field y1 against the exact E[s_n] for each n in the sweep."""
    tables = dict(_map(_figure1_point, [(cfg, n) for n in cfg.n_values], cfg.jobs))
    sup = {n: float(np.max(np.abs(t["mean_s"] - t["y1"]))) for n, t in tables.items()}
    ns = sorted(sup)
    decreasing = strictly_decreasing([sup[n] for n in ns]) if len(ns) > 1 else None
    for n, t in tables.items():
        _write(t, out, f"figure1_n{n}.csv")
    _write_rows([{"n": n, "sup_error": sup[n]} for n in ns], out, "figure1_summary.csv")
    return Figure1Result(tables, sup, decreasing)


# --------------------------------------------------------------------------
# figure 2


def ordering_endpoint(lower, upper, times, slack: float = ORDER_SLACK) -> float | None:
    """Largest grid time T* with lower <= upper on all of [0, T*]; None if it fails at t=0.

    NaN (a curve that has blown up) counts as a failure of the ordering.
    """
    ok = lower <= upper + slack
    if ok.all():
        return float(times[-1])
    first_bad = int(np.argmin(ok))
    return None if first_bad == 0 else float(times[first_bad - 1])


@dataclass
class Figure2Panel:
    tau: float
    n: int
    upper_h: tuple
    table: TrajectoryTable  # t, lower_z1, mean_s, y1, upper_z1
    lower_until: float | None
    upper_until: float | None
    divergence_onset: float | None  # first time the upper curve leaves the domain or blows up

    @property
    def label(self) -> str:
        h = "_".join(f"{x:g}" for x in self.upper_h)
        return f"tau{self.tau:g}_n{self.n}_upper{h}"

    def summary(self) -> dict:
        return {
            "tau": self.tau,
            "n": self.n,
            "upper_h": self.upper_h,
            "lower_until": self.lower_until,
            "upper_until": self.upper_until,
            "divergence_onset": self.divergence_onset,
        }


def _figure2_point(args):
    cfg, tau, n = args
    grid = cfg.grid()
    p = cfg.params(n=n, tau=tau)
    ic = InitialCondition(cfg.fig2_s0, cfg.fig2_i0)
    z0 = MomentVector(ic.s0, ic.i0, 0.0)
    master = solve_master(p, ic, grid, cfg.atol, cfg.rtol).table["mean_s"]
    y1 = solve_meanfield(p, ic, grid, cfg.atol, cfg.rtol)["y1"]
    lower = solve_closed(ClosedSystemSpec(p, 1 / n, ClosureFunctions.constant(*cfg.lower_h), z0), grid, cfg.atol, cfg.rtol)
    panels = []
    for upper_h in (cfg.upper_h, cfg.upper_h_alt):
        upper = solve_closed(
            ClosedSystemSpec(p, 1 / n, ClosureFunctions.constant(*upper_h), z0),
            grid,
            cfg.atol,
            cfg.rtol,
            truncate_blowup=True,
        )
        onsets = [float(upper.metadata[k]) for k in ("domain_exit_time", "blowup_time") if k in upper.metadata]
        table = TrajectoryTable(
            grid,
            {"lower_z1": lower["z1"], "mean_s": master, "y1": y1, "upper_z1": upper["z1"]},
            upper.metadata,
        )
        panels.append(
            Figure2Panel(
                tau,
                n,
                tuple(upper_h),
                table,
                ordering_endpoint(lower["z1"], master, grid),
                ordering_endpoint(master, upper["z1"], grid),
                min(onsets) if onsets else None,
            )
        )
    return panels


@dataclass
class Figure2Result:
    panels: list

    def select(self, upper_h) -> list:
        return [p for p in self.panels if p.upper_h == tuple(upper_h)]


def run_figure2(cfg: ExperimentConfig, out: Path | None = None) -> Figure2Result:
    """Constant-closure bound curves against E[s_n] for every (tau, n) and both upper closures."""
    points = [(cfg, tau, n) for tau in cfg.tau_values for n in cfg.n_values]
    panels = [panel for group in _map(_figure2_point, points, cfg.jobs) for panel in group]
    for panel in panels:
        _write(panel.table, out, f"figure2_{panel.label}.csv")
    _write_rows([panel.summary() for panel in panels], out, "figure2_summary.csv")
    return Figure2Result(panels)


# --------------------------------------------------------------------------
# convergence study

CHECK_TIMES = (0.05, 0.1, 0.5)


@dataclass
class ConvergenceResult:
    rows: list  # per n: sup_mse, sup_l1z, bound/measured at CHECK_TIMES
    mse_decreasing: bool | None
    l1z_decreasing: bool | None
    loglog_slope: float | None

    @property
    def ok(self) -> bool:
        return self.mse_decreasing is not False and self.l1z_decreasing is not False


def _convergence_point(args):
    cfg, n = args
    grid = cfg.grid()
    p = cfg.params(n=n)
    master = solve_master(p, cfg.ic(), grid, cfg.atol, cfg.rtol).table
    mf = solve_meanfield(p, cfg.ic(), grid, cfg.atol, cfg.rtol)
    err = mean_square_error(master, mf)  # raises if mse > l1z anywhere
    row = {"n": n, "sup_mse": float(err["mse"].max()), "sup_l1z": float(err["l1z"].max())}
    for t in CHECK_TIMES:
        k = int(np.argmin(np.abs(grid - t)))
        row[f"l1z_t{t:g}"] = float(err["l1z"][k])
        row[f"bound_t{t:g}"] = bound_at(p, float(grid[k]))
    return row


def run_convergence_study(cfg: ExperimentConfig, out: Path | None = None) -> ConvergenceResult:
    rows = sorted(_map(_convergence_point, [(cfg, n) for n in cfg.n_values], cfg.jobs), key=lambda r: r["n"])
    multi = len(rows) > 1
    mse_dec = strictly_decreasing([r["sup_mse"] for r in rows]) if multi else None
    l1z_dec = strictly_decreasing([r["sup_l1z"] for r in rows]) if multi else None
    slope = None
    if multi:
        ns = np.log([r["n"] for r in rows])
        slope = float(np.polyfit(ns, np.log([r["sup_l1z"] for r in rows]), 1)[0])
    _write_rows(rows, out, "convergence.csv")
    return ConvergenceResult(rows, mse_dec, l1z_dec, slope)


def run_bound(cfg: ExperimentConfig, out: Path | None = None):
    report = verify_bound(cfg.params(), cfg.ic(), cfg.grid())
    _write(report.table, out, f"bound_n{cfg.n}.csv")
    return report
