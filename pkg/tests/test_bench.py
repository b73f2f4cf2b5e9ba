import csv
import json

import numpy as np
import pytest

from privsearch.bench import sweep
from privsearch.bench.cli import main
from privsearch.bench.report import emit_report, read_results_csv, summarize
from privsearch.bench.sweep import SweepConfig, SweepError, build_context, cell_jobs, run_experiment


def cfg(ds, **kw):
    base = dict(edges=str(ds["edges"]), publications=str(ds["publications"]), tasks=str(ds["tasks"]))
    base.update(kw)
    return SweepConfig(**base)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def mae_out(small_dataset, tmp_path_factory):
    out = tmp_path_factory.mktemp("mae")
    code = main(["run", "--out", str(out), "--experiment", "global_mae", "--seed", "3",
                 "--config", str(_write_config(out, small_dataset))])
    assert code == 0
    return out


def _write_config(dirpath, ds):
    p = dirpath / "sweep.yaml"
    p.write_text(f"edges: {ds['edges']}\npublications: {ds['publications']}\ntasks: {ds['tasks']}\nruns: 10\n")
    return p


def test_global_mae_row_counts(mae_out):
    rows = read_csv(mae_out / "results.csv")
    assert len(rows) == 450
    assert list(rows[0]) == ["experiment", "lambda", "pb", "pc", "run", "metric", "value"]
    summary = read_csv(mae_out / "summary.csv")
    assert len(summary) == 45
    assert list(summary[0]) == ["experiment", "lambda", "pb", "pc", "metric", "mean", "stddev", "n_runs",
                                "p_value_vs_baseline"]
    assert {s["n_runs"] for s in summary} == {"10"}
    info = json.loads((mae_out / "run_info.json").read_text())
    assert info["n_rows"] == 450 and info["elapsed_seconds"] >= 0
    assert (mae_out / "fig_global_mae.svg").exists()


def test_report_rerender_is_byte_identical(mae_out, tmp_path):
    assert main(["report", "--results", str(mae_out / "results.csv"), "--out", str(tmp_path)]) == 0
    for name in ("results.csv", "summary.csv", "fig_global_mae.svg"):
        assert (tmp_path / name).read_bytes() == (mae_out / name).read_bytes()


def test_results_csv_round_trip(mae_out):
    rows = read_results_csv(mae_out / "results.csv")
    assert rows[0].experiment == "global_mae" and rows[0].pc is None


def test_trivial_cells(small_dataset):
    config = cfg(small_dataset, pbs=(0.0,), pcs=(0.0, 1.0), runs=2, lambdas=(-1.0, 1.0))
    rows = run_experiment(config)
    by = {}
    for r in rows:
        by.setdefault((r.experiment, r.metric), []).append(r)
    assert all(r.value == 0.0 for r in by[("global_mae", "mae")])
    for exp in ("global_search", "local_search"):
        base = by[(exp, "baseline_map")][0].value
        assert all(r.value == base for r in by[(exp, "map")])
    full = by[("user_privacy", "full_social_map")][0].value
    none = by[("user_privacy", "no_social_map")][0].value
    pc = {r.pc: r.value for r in by[("user_privacy", "map")]}
    assert pc[1.0] == full and pc[0.0] == none


def test_search_summary_has_p_values_and_baseline_plot(small_dataset, tmp_path):
    config = cfg(small_dataset, experiments=("global_search",), pbs=(0.5,), runs=2, lambdas=(1.0,), out=str(tmp_path))
    rows = run_experiment(config)
    emit_report(rows, tmp_path)
    summary = {s["metric"]: s for s in summarize(rows)}
    assert summary["map"]["p_value_vs_baseline"] is not None
    assert 0.0 <= summary["map"]["p_value_vs_baseline"] <= 1.0
    assert "Full Networks" in (tmp_path / "fig_global_search.svg").read_text()


def test_worker_count_does_not_change_bytes(small_dataset, tmp_path):
    outs = []
    for workers in (1, 2):
        config = cfg(small_dataset, experiments=("global_search", "user_privacy"), pbs=(0.2, 0.6), pcs=(0.3, 0.7),
                     runs=3, workers=workers)
        out = tmp_path / f"w{workers}"
        emit_report(run_experiment(config), out)
        outs.append(out)
    for name in ("results.csv", "summary.csv"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_cell_jobs_order(small_dataset):
    jobs = cell_jobs(cfg(small_dataset, experiments=("global_mae",), lambdas=(1.0, -1.0), pbs=(0.1, 0.2), runs=2))
    assert jobs[:3] == [("global_mae", 1.0, 0.1, 0), ("global_mae", 1.0, 0.1, 1), ("global_mae", 1.0, 0.2, 0)]


def test_config_validation(small_dataset):
    with pytest.raises(ValueError):
        cfg(small_dataset, pbs=(1.2,))
    with pytest.raises(ValueError):
        cfg(small_dataset, pbs=())
    with pytest.raises(ValueError):
        cfg(small_dataset, experiments=("bogus",))
    with pytest.raises(ValueError):
        SweepConfig.from_mapping({"edges": "x", "colour": "red"})
    with pytest.raises(ValueError, match="publications"):
        SweepConfig(edges="x")


def test_flags_override_config_file(small_dataset, tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text(f"edges: {small_dataset['edges']}\nexperiments: [global_mae]\nlambdas: [0.0]\npbs: [0.1, 0.2]\n"
                 "runs: 5\nout: rel_out\n")
    assert main(["run", "--config", str(p), "--runs", "2", "--pb", "0.3"]) == 0
    rows = read_csv(tmp_path / "rel_out" / "results.csv")  # relative out resolves against the config file
    assert {(r["pb"], r["run"]) for r in rows} == {("0.3", "0"), ("0.3", "1")}


def test_nested_config_rejected(tmp_path, capsys):
    p = tmp_path / "c.yaml"
    p.write_text("edges: e.tsv\nprivacy:\n  pb: 0.1\n")
    assert main(["run", "--config", str(p)]) == 2
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["command"] == "run" and "flat" in err["message"]


def test_machine_readable_error(tmp_path, capsys):
    assert main(["run", "--out", str(tmp_path / "o")]) == 2
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert set(err) == {"error", "message", "command"}
    assert not (tmp_path / "o").exists()


def test_unwritable_directory_fails_before_writing(mae_out, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    rows = read_results_csv(mae_out / "results.csv")
    with pytest.raises(OSError):
        emit_report(rows, blocker / "sub")
    assert blocker.read_text() == "x"


def test_empty_results_rejected(tmp_path):
    with pytest.raises(ValueError):
        emit_report([], tmp_path)
    assert list(tmp_path.iterdir()) == []


def test_failing_cell_names_coordinates(small_dataset, tmp_path, monkeypatch):
    config = cfg(small_dataset, experiments=("global_mae",), lambdas=(0.5,), pbs=(0.4,), runs=1, out=str(tmp_path))
    ctx = build_context(config)

    def boom(*a, **k):
        raise RuntimeError("disk on fire")

    monkeypatch.setattr(sweep, "mae", boom)
    with pytest.raises(SweepError, match=r"lambda=0.5 pb=0.4 run=0"):
        run_experiment(config, ctx)
    assert not (tmp_path / "results.csv").exists()


def test_synth_and_oracle_commands(tmp_path, capsys):
    assert main(["synth", "--out", str(tmp_path / "ds"), "--n", "400", "--m", "2", "--n-tasks", "4", "--seed", "1"]) == 0
    for name in ("edges.tsv", "publications.jsonl", "tasks.json"):
        assert (tmp_path / "ds" / name).stat().st_size > 0
    capsys.readouterr()
    assert main(["oracle"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines and all(line.startswith("PASS") for line in lines)


def test_mae_ordering_regression(pinned_dataset):
    """Frozen from the pinned sweep: strict +1 > 0 > -1 ordering holds for 0.3 <= p_b <= 0.7."""
    config = SweepConfig(experiments=("global_mae",), edges=str(pinned_dataset["edges"]), lambdas=(-1.0, 0.0, 1.0),
                         pbs=(0.3, 0.5, 0.7))
    means = {(s["lambda"], s["pb"]): s["mean"] for s in summarize(run_experiment(config))}
    for pb in (0.3, 0.5, 0.7):
        assert means[(1.0, pb)] > means[(0.0, pb)] > means[(-1.0, pb)]
    assert means[(1.0, 0.5)] == pytest.approx(9.93e-5, rel=2e-3)
    assert means[(-1.0, 0.5)] == pytest.approx(5.33e-5, rel=2e-3)
