import json

import numpy as np
import pytest

from sirmf.core import ConfigError, TrajectoryTable
from sirmf.experiments import (
    ExperimentConfig,
    ordering_endpoint,
    run_bound,
    run_convergence_study,
    run_figure1,
    run_figure2,
    strictly_decreasing,
)


def small(**kw):
    base = dict(n_values=(10, 20), t_end=2.0, dt=0.02)
    base.update(kw)
    return ExperimentConfig(**base)


def test_config_defaults_and_json(tmp_path):
    cfg = ExperimentConfig()
    assert (cfg.tau, cfg.gamma, cfg.s0, cfg.i0, cfg.n_values) == (3.0, 0.25, 0.9, 0.1, (10, 30, 100))
    path = tmp_path / "c.json"
    path.write_text(cfg.to_json())
    assert ExperimentConfig.load(path) == cfg


def test_config_overrides(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"tau": 1.0, "n_values": [10]}))
    cfg = ExperimentConfig.load(path, tau=2.0, seed=None)
    assert cfg.tau == 2.0 and cfg.seed == 0 and cfg.n_values == (10,)


@pytest.mark.parametrize(
    "content",
    ['{"nope": 1}', "[1, 2]", "{not json", '{"n_values": []}', '{"lower_h": [2, 0, 0, 0]}', '{"gamma": -1}', '{"dt": 0.3}'],
)
def test_config_errors(tmp_path, content):
    path = tmp_path / "c.json"
    path.write_text(content)
    with pytest.raises(ConfigError):
        ExperimentConfig.load(path)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        ExperimentConfig.load(tmp_path / "absent.json")


def test_ordering_endpoint():
    t = np.array([0.0, 1.0, 2.0, 3.0])
    assert ordering_endpoint(np.zeros(4), np.ones(4), t) == 3.0
    assert ordering_endpoint(np.array([0, 0, 2, 0.0]), np.ones(4), t) == 1.0
    assert ordering_endpoint(np.array([2.0, 0, 0, 0]), np.ones(4), t) is None
    assert ordering_endpoint(np.zeros(4), np.array([1, 1, np.nan, np.nan]), t) == 1.0


def test_strictly_decreasing():
    assert strictly_decreasing([3, 2, 1]) and not strictly_decreasing([3, 3, 1]) and strictly_decreasing([1])


def test_figure1_outputs(tmp_path):
    res = run_figure1(small(), tmp_path)
    assert res.decreasing and res.ok
    for n in (10, 20):
        t = TrajectoryTable.from_csv(tmp_path / f"figure1_n{n}.csv")
        assert t.names == ["y1", "mean_s"]
        assert np.array_equal(t["mean_s"], res.tables[n]["mean_s"])
    assert (tmp_path / "figure1_summary.csv").read_text().startswith("n,sup_error\n")


def test_figure1_single_n_has_no_ordering():
    res = run_figure1(small(n_values=(10,)))
    assert res.decreasing is None and res.ok


def test_figure1_baseline_value():
    res = run_figure1(ExperimentConfig(n_values=(100,)))
    assert res.sup_error[100] == pytest.approx(0.015943846169022835, rel=1e-6)


def test_figure2_panels(tmp_path):
    res = run_figure2(small(tau_values=(3.0,)), tmp_path)
    assert len(res.panels) == 4
    for panel in res.panels:
        assert panel.lower_until == 2.0
        assert panel.upper_until is not None and panel.upper_until > 0
        assert (tmp_path / f"figure2_{panel.label}.csv").exists()
        assert panel.table.names == ["lower_z1", "mean_s", "y1", "upper_z1"]
    assert len(res.select((-1.0, -0.8, -0.4, 0.5))) == 2
    assert (tmp_path / "figure2_summary.csv").exists()


def test_figure2_divergence_onset():
    res = run_figure2(ExperimentConfig(n_values=(10,), tau_values=(3.0,)))
    for panel in res.panels:
        assert panel.divergence_onset is not None and panel.divergence_onset < 5.0


def test_convergence_study(tmp_path):
    res = run_convergence_study(ExperimentConfig(), tmp_path)
    assert res.mse_decreasing and res.l1z_decreasing and res.ok
    assert -1.3 < res.loglog_slope < -0.7
    for row in res.rows:
        assert row["l1z_t0.05"] < row["bound_t0.05"]
    assert (tmp_path / "convergence.csv").exists()


def test_convergence_no_infection():
    res = run_convergence_study(small(tau=0.0))
    for row in res.rows:
        # means are exact; the error is the O(1/n) variance
        assert row["sup_mse"] == pytest.approx(row["sup_l1z"], rel=1e-6)
        assert row["sup_mse"] < 1 / row["n"]


def test_bound_recipe(tmp_path):
    rep = run_bound(small(n=10), tmp_path)
    assert rep.holds
    back = TrajectoryTable.from_csv(tmp_path / "bound_n10.csv")
    assert back.names == ["measured_l1", "gronwall", "mse", "ratio"]


def test_parallel_sweep_is_bit_identical():
    cfg = small()
    a = run_figure1(cfg)
    b = run_figure1(ExperimentConfig(**{**cfg.__dict__, "jobs": 2}))
    for n in cfg.n_values:
        assert a.tables[n].to_csv() == b.tables[n].to_csv()
