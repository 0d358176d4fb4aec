"""Command-line entry point.

Every subcommand takes the shared model flags (or a JSON ``--config``) and
writes plot-ready CSV under ``--out``. Exit status: 0 success, 1 a checked
property or acceptance criterion failed, 2 bad configuration.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .core import ConfigError
from .integrate import IntegrationError

log = logging.getLogger("sirmf")

SUBCOMMANDS = ("meanfield", "master", "closure", "bound", "gillespie", "lemmas", "figure1", "figure2", "converge", "accept")


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON file of ExperimentConfig fields")
    common.add_argument("--tau", type=float)
    common.add_argument("--gamma", type=float)
    common.add_argument("--n", type=int)
    common.add_argument("--s0", type=float)
    common.add_argument("--i0", type=float)
    common.add_argument("--t-end", dest="t_end", type=float)
    common.add_argument("--dt", type=float)
    common.add_argument("--reps", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--out", type=str)
    common.add_argument("--jobs", type=int)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="sirmf", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "closure":
            sp.add_argument("--h", nargs=4, type=float, metavar=("H1", "H2", "H3", "H4"), default=None,
                            help="constant closure values (default: lower-bound constants)")
            sp.add_argument("--oracle", action="store_true", help="use closure values extracted from the master solution")
            sp.add_argument("--epsilon", type=float, default=None, help="default 1/n")
        if name == "lemmas":
            sp.add_argument("--count", type=int, default=10_000)
        if name == "accept":
            sp.add_argument("--only", type=int, nargs="*", help="criterion numbers to run")
    return parser


def _config(args):
    from .experiments import ExperimentConfig

    overrides = {k: getattr(args, k) for k in ("tau", "gamma", "n", "s0", "i0", "t_end", "dt", "reps", "seed", "out", "jobs")}
    return ExperimentConfig.load(args.config, **overrides)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = _config(args)
    except (ConfigError, TypeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    out = Path(cfg.out)
    try:
        return COMMANDS[args.command](cfg, args, out)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except IntegrationError as exc:
        print(f"solver failure for {cfg.to_json()}:\n{exc}", file=sys.stderr)
        return 1


def _cmd_meanfield(cfg, args, out):
    from .meanfield import solve_meanfield

    table = solve_meanfield(cfg.params(), cfg.ic(), cfg.grid(), cfg.atol, cfg.rtol)
    out.mkdir(parents=True, exist_ok=True)
    table.to_csv(out / "meanfield.csv")
    print(f"wrote {out / 'meanfield.csv'}")
    return 0


def _cmd_master(cfg, args, out):
    from .master import master_table_with_h, solve_master

    sol = solve_master(cfg.params(), cfg.ic(), cfg.grid(), cfg.atol, cfg.rtol)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"master_n{cfg.n}.csv"
    master_table_with_h(sol).to_csv(path)
    print(f"wrote {path}")
    return 0


def _cmd_closure(cfg, args, out):
    from .closure import ClosedSystemSpec, ClosureFunctions, solve_closed
    from .core import MomentVector
    from .master import extract_oracle_h, solve_master

    p, ic, grid = cfg.params(), cfg.ic(), cfg.grid()
    if args.oracle:
        closure = extract_oracle_h(solve_master(p, ic, grid, cfg.atol, cfg.rtol).table)
    else:
        closure = ClosureFunctions.constant(*(args.h or cfg.lower_h))
    eps = 1 / p.n if args.epsilon is None else args.epsilon
    spec = ClosedSystemSpec(p, eps, closure, MomentVector(ic.s0, ic.i0, 0.0))
    table = solve_closed(spec, grid, cfg.atol, cfg.rtol, truncate_blowup=True)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"closure_n{cfg.n}.csv"
    table.to_csv(path)
    for k, v in table.metadata.items():
        print(f"{k}: {v}")
    print(f"wrote {path}")
    return 0


def _cmd_bound(cfg, args, out):
    from .experiments import run_bound

    report = run_bound(cfg, out)
    print(f"L={report.bound.L:g} M={report.bound.M:g} delta0={report.bound.delta0:g} max ratio={report.max_ratio:.3g}")
    print("bound holds at every grid point" if report.holds else f"bound VIOLATED at t={report.violations()}")
    return 0 if report.holds else 1


def _cmd_gillespie(cfg, args, out):
    from .gillespie import SimConfig, run_ensemble

    table = run_ensemble(SimConfig(cfg.params(), cfg.ic(), cfg.t_end, cfg.reps, cfg.seed), cfg.grid())
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"gillespie_n{cfg.n}.csv"
    table.to_csv(path)
    print(f"wrote {path}")
    return 0


def _cmd_lemmas(cfg, args, out):
    from .inequalities import run_lemma_suite

    res = run_lemma_suite(args.count, seed=cfg.seed)
    out.mkdir(parents=True, exist_ok=True)
    (out / "lemmas.csv").write_text(res.to_csv())
    for k, v in res.violations.items():
        print(f"{k}: {v} violations")
    return 0 if res.ok else 1


def _cmd_figure1(cfg, args, out):
    from .experiments import run_figure1

    res = run_figure1(cfg, out)
    for n, e in sorted(res.sup_error.items()):
        print(f"n={n}: sup_t |E[s_n] - y1| = {e:.6g}")
    if res.decreasing is not None:
        print("strictly decreasing in n" if res.decreasing else "NOT decreasing in n")
    return 0 if res.ok else 1


def _cmd_figure2(cfg, args, out):
    from .experiments import run_figure2

    res = run_figure2(cfg, out)
    for panel in res.panels:
        s = panel.summary()
        print(
            f"tau={s['tau']:g} n={s['n']} upper h={s['upper_h']}: lower holds until {s['lower_until']}, "
            f"upper holds until {s['upper_until']}, divergence onset {s['divergence_onset']}"
        )
    return 0


def _cmd_converge(cfg, args, out):
    from .experiments import run_convergence_study

    res = run_convergence_study(cfg, out)
    for row in res.rows:
        print(", ".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}" for k, v in row.items()))
    if res.loglog_slope is not None:
        print(f"log-log slope of sup ||z_n - zbar||_1 vs n: {res.loglog_slope:.3f}")
    return 0 if res.ok else 1


def _cmd_accept(cfg, args, out):
    from .acceptance import run_acceptance

    report = run_acceptance(cfg, only=args.only, out=out)
    print("ALL CRITERIA PASS" if report.passed else "SOME CRITERIA FAILED")
    return 0 if report.passed else 1


COMMANDS = {
    "meanfield": _cmd_meanfield,
    "master": _cmd_master,
    "closure": _cmd_closure,
    "bound": _cmd_bound,
    "gillespie": _cmd_gillespie,
    "lemmas": _cmd_lemmas,
    "figure1": _cmd_figure1,
    "figure2": _cmd_figure2,
    "converge": _cmd_converge,
    "accept": _cmd_accept,
}


if __name__ == "__main__":
    sys.exit(main())
