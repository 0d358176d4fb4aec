"""Time the numba kernels against their numpy fallbacks and check they agree.

    python3 benchmarks/bench_kernels.py [--n 100] [--reps 20000] [--repeat 5]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from sirmf.core import InitialCondition, ModelParams, n_states, uniform_grid
from sirmf.gillespie import SimConfig, sample_paths
from sirmf.kernels import generator_action_numba, generator_action_numpy, make_generator_action
from sirmf.master import solve_master


def best_of(fn, repeat):
    fn()  # warm-up (includes JIT compilation)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--reps", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    n, tau, gamma = args.n, 3.0, 0.25
    p = ModelParams(tau, gamma, n)
    ic = InitialCondition(0.9, 0.1)
    grid = uniform_grid(5.0, 0.01)
    mass = np.random.default_rng(0).dirichlet(np.ones(n_states(n)))

    rows = []
    a, b = generator_action_numba(mass, n, tau, gamma), generator_action_numpy(mass, n, tau, gamma)
    nb_act, np_act = make_generator_action(n, tau, gamma, True), make_generator_action(n, tau, gamma, False)
    rows.append(
        (
            f"generator action, n={n}",
            best_of(lambda: nb_act(mass), args.repeat * 100) * 1e6,
            best_of(lambda: np_act(mass), args.repeat * 100) * 1e6,
            "us",
            f"max |diff| {np.max(np.abs(a - b)):.1e}",
        )
    )
    sols = {}

    def master(use):
        sols[use] = solve_master(p, ic, grid, use_numba=use)

    rows.append(
        (
            f"master solve, n={n}, [0,5]",
            best_of(lambda: master(True), args.repeat),
            best_of(lambda: master(False), args.repeat),
            "s",
            f"max |diff| {np.max(np.abs(sols[True].masses - sols[False].masses)):.1e}",
        )
    )
    cfg = SimConfig(ModelParams(tau, gamma, 30), ic, 5.0, args.reps, 0)
    paths = {}

    def gillespie(use):
        paths[use] = sample_paths(cfg, grid, use_numba=use)

    rows.append(
        (
            f"gillespie paths, n=30, {args.reps} reps",
            best_of(lambda: gillespie(True), max(1, args.repeat // 2)),
            best_of(lambda: gillespie(False), max(1, args.repeat // 2)),
            "s",
            "identical" if all(np.array_equal(x, y) for x, y in zip(paths[True], paths[False])) else "DIFFERENT",
        )
    )

    print(f"{'kernel':34s} {'numba':>10s} {'numpy':>10s} {'speedup':>8s}  agreement")
    for name, t_nb, t_np, unit, agree in rows:
        print(f"{name:34s} {t_nb:9.3f}{unit:1s} {t_np:9.3f}{unit:1s} {t_np / t_nb:7.1f}x  {agree}")


if __name__ == "__main__":
    main()
