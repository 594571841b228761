from pathlib import Path

import numpy as np
import pytest
import yaml
from hypothesis import given, settings
from hypothesis import strategies as st

from hunter_sim.cli import main
from hunter_sim.config import OUT_DIR_ENV, ConfigError, load_config
from hunter_sim.harness import read_rows, report, run_experiment
from hunter_sim.metrics import coefficient_of_variation, jain_fairness
from hunter_sim.plots import emit_plots


def write_config(path, **extra):
    cfg = {
        "seed": 4,
        "n_intervals": 3,
        "replications": 2,
        "scheduler": "random",
        "hosts": {"layout": [{"class": "B2s", "private": True, "count": 1}, {"class": "B4ms", "private": False, "count": 1}]},
        "surrogate": {"hidden": 8, "pretrain_intervals": 12, "max_epochs": 2, "patience": 1},
    }
    cfg.update(extra)
    path.write_text(yaml.safe_dump(cfg))
    return path


# -- statistics ---------------------------------------------------------------


def test_jain_examples():
    assert jain_fairness([3, 3, 3]) == 1.0
    assert jain_fairness([0, 0, 5, 0]) == pytest.approx(0.25)
    assert jain_fairness([1, 2, 3]) == pytest.approx(36 / 42)
    assert jain_fairness([]) == 1.0 and jain_fairness([0, 0]) == 1.0


def test_cov_examples():
    assert coefficient_of_variation([4, 4, 4]) == 0.0
    assert coefficient_of_variation([1, 3]) == pytest.approx(0.5)
    with pytest.raises(ZeroDivisionError):
        coefficient_of_variation([-1, 1])
    with pytest.raises(ValueError):
        coefficient_of_variation([])


@settings(max_examples=1000, deadline=None)
@given(st.lists(st.floats(0.0, 1e6), min_size=1, max_size=20))
def test_jain_bounds(xs):
    j = jain_fairness(xs)
    assert (1 / len(xs) - 1e-12 <= j <= 1.0) if any(xs) else j == 1.0


# -- config -------------------------------------------------------------------


def test_config_defaults_and_errors(tmp_path):
    cfg = load_config()
    assert cfg.n_intervals == 100 and cfg.replications == 5
    assert sum(g.count for g in cfg.hosts.layout) == 10
    with pytest.raises(ConfigError, match="n_intervals"):
        load_config(write_config(tmp_path / "a.yaml", n_intervals=0))
    with pytest.raises(ConfigError, match="bogus"):
        load_config(write_config(tmp_path / "b.yaml", bogus=1))
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.yaml")
    bad = tmp_path / "c.yaml"
    bad.write_text("hunter: {alpha: 0.9, beta: 0.9, gamma: 0.1}\n")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_output_dir_precedence(tmp_path, monkeypatch):
    cfg = load_config(write_config(tmp_path / "c.yaml", output_dir="from_cfg"))
    monkeypatch.delenv(OUT_DIR_ENV, raising=False)
    assert str(cfg.resolve_output_dir()) == "from_cfg"
    monkeypatch.setenv(OUT_DIR_ENV, str(tmp_path / "env"))
    assert cfg.resolve_output_dir() == tmp_path / "env"
    assert cfg.resolve_output_dir(tmp_path / "flag") == tmp_path / "flag"


def test_profile_csv_override(tmp_path):
    (tmp_path / "b2s.csv").write_text("load,power_watts\n0,10\n1,20\n")
    cfg = load_config(write_config(tmp_path / "c.yaml", hosts={
        "layout": [{"class": "B2s", "count": 1}], "profiles": {"B2s": "b2s.csv"}}))
    assert cfg.build_hosts()[0].power_profile.watts == (10.0, 20.0)


# -- experiments --------------------------------------------------------------


def test_determinism_byte_identical(tmp_path):
    cfg = load_config(write_config(tmp_path / "c.yaml"))
    run_experiment(cfg, tmp_path / "a")
    run_experiment(cfg, tmp_path / "b")
    for name in ("intervals.csv", "runs.csv", "summary.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_summary_aggregates_replications(tmp_path):
    cfg = load_config(write_config(tmp_path / "c.yaml", replications=5))
    res = run_experiment(cfg, tmp_path / "o", schedulers=["random", "bestfit"])
    assert len(res.interval_rows) == 2 * 5 * 3
    assert all(r["runs"] == 5 for r in res.summary)
    row = next(r for r in res.summary if r["scheduler"] == "random" and r["metric"] == "mean_objective")
    per_run = [r["mean_objective"] for r in res.runs if r["scheduler"] == "random"]
    assert row["mean"] == pytest.approx(np.mean(per_run))
    assert row["std"] == pytest.approx(np.std(per_run))


def test_report_recomputes_identical_summary(tmp_path):
    cfg = load_config(write_config(tmp_path / "c.yaml"))
    run_experiment(cfg, tmp_path / "o")
    before = (tmp_path / "o" / "summary.csv").read_bytes()
    (tmp_path / "o" / "summary.csv").unlink()
    report(tmp_path / "o")
    assert (tmp_path / "o" / "summary.csv").read_bytes() == before


def test_idle_host_costs_nothing(tmp_path):
    cfg = load_config(write_config(tmp_path / "c.yaml", n_intervals=4, replications=1, scheduler="bestfit",
                                   workload={"arrival_rate": 0.01}))
    res = run_experiment(cfg, tmp_path / "o")
    assert all(float(r["cost"]) == 0.0 for r in res.interval_rows if int(r["active_tasks"]) == 0)


def test_intervals_schema(tmp_path):
    cfg = load_config(write_config(tmp_path / "c.yaml", replications=1))
    run_experiment(cfg, tmp_path / "o")
    rows = read_rows(tmp_path / "o" / "intervals.csv")
    assert [int(r["interval"]) for r in rows] == [0, 1, 2]
    for r in rows:
        assert 0.0 < float(r["fairness"]) <= 1.0
        assert 0.0 <= float(r["slav"]) <= 1.0
        assert 0.0 <= float(r["objective"]) <= 1.0
    timings = read_rows(tmp_path / "o" / "timings.csv")
    assert len(timings) == 3 and all(float(t["scheduling_time_s"]) >= 0 for t in timings)


def test_hunter_experiment_end_to_end(tmp_path):
    cfg = load_config(write_config(tmp_path / "c.yaml", scheduler="hunter", replications=1))
    res = run_experiment(cfg, tmp_path / "o")
    assert (tmp_path / "o" / "model.hggc").is_file()
    assert (tmp_path / "o" / "loss_curve.csv").is_file()
    assert all(int(r["surrogate_evals"]) >= 0 for r in res.interval_rows)


# -- plots --------------------------------------------------------------------


def test_plots_empty_warns(tmp_path):
    with pytest.warns(UserWarning):
        assert emit_plots([], tmp_path) == []
    assert not any(tmp_path.iterdir())


def test_plots_one_metric_one_file_and_point_count(tmp_path):
    cfg = load_config(write_config(tmp_path / "c.yaml"))
    res = run_experiment(cfg, tmp_path / "o")
    paths = emit_plots(res, metrics=["objective"])
    assert [p.name for p in paths] == ["objective.svg"]
    svg = paths[0].read_text()
    assert svg.startswith("<?xml") and "<svg" in svg
    # every line in the left panel is one run; together they hold one point per CSV row
    import matplotlib.pyplot as plt
    from hunter_sim.plots import _series

    series = _series(res.interval_rows, "objective")
    assert sum(len(ys) for _, ys in series.values()) == len(read_rows(tmp_path / "o" / "intervals.csv"))
    plt.close("all")


# -- CLI ----------------------------------------------------------------------


def test_cli_run_and_report(tmp_path, capsys, monkeypatch):
    cfg = write_config(tmp_path / "c.yaml")
    monkeypatch.setenv(OUT_DIR_ENV, str(tmp_path / "envout"))
    assert main(["run", "--config", str(cfg), "--scheduler", "bestfit", "--seed", "9", "--no-plots"]) == 0
    assert (tmp_path / "envout" / "intervals.csv").is_file()
    saved = yaml.safe_load((tmp_path / "envout" / "config.yaml").read_text())
    assert saved["seed"] == 9 and saved["scheduler"] == "bestfit"
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "flag" / "plots" / "objective.svg").is_file()
    assert main(["report", "--in", str(tmp_path / "flag")]) == 0
    assert "runs summarised" in capsys.readouterr().out


def test_cli_pretrain(tmp_path):
    cfg = write_config(tmp_path / "c.yaml")
    assert main(["pretrain", "--config", str(cfg), "--out", str(tmp_path / "m")]) == 0
    assert (tmp_path / "m" / "model.hggc").is_file()
    # the saved weights can drive a hunter run
    cfg2 = write_config(tmp_path / "d.yaml", scheduler="hunter", replications=1,
                        surrogate={"hidden": 8, "weights": str(tmp_path / "m" / "model.hggc")})
    assert main(["run", "--config", str(cfg2), "--out", str(tmp_path / "r"), "--no-plots"]) == 0
    assert not (tmp_path / "r" / "model.hggc").exists()


def test_cli_errors(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "nope.yaml")]) == 2
    assert "error" in capsys.readouterr().err
    assert main(["report", "--in", str(tmp_path)]) == 2
    with pytest.raises(SystemExit):
        main(["run"])


def test_shipped_configs_load():
    root = Path(__file__).resolve().parents[1] / "configs"
    full = load_config(root / "testbed10.yaml")
    assert full.model_dump() == load_config().model_dump()
    assert load_config(root / "quick.yaml").n_intervals == 10
