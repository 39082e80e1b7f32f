"""Harness, CLI, seeding, and output-format checks."""

import csv
import json
import subprocess
import sys

import numpy as np
import pytest
from scipy import stats

from matchmix.harness import (
    EXIT_INFEASIBLE,
    EXIT_OK,
    EXIT_USAGE,
    ExperimentConfig,
    config_from_dict,
    derive_stream,
    run_experiment,
)
from matchmix.cli import main as cli_main


def test_derive_stream_deterministic():
    a = derive_stream(12345, 7).random(10_000)
    b = derive_stream(12345, 7).random(10_000)
    assert np.array_equal(a, b)


def test_derive_stream_replicas_differ():
    a = derive_stream(12345, 0).random(100)
    b = derive_stream(12345, 1).random(100)
    assert not np.array_equal(a, b)


def test_derive_stream_equidistribution():
    draws = derive_stream(999, 0).integers(0, 10, size=1_000_000)
    counts = np.bincount(draws, minlength=10)
    assert stats.chisquare(counts).pvalue > 1e-3


def test_config_validation():
    with pytest.raises(ValueError):
        config_from_dict({"bogus": 1}, kind="sample")
    cfg = config_from_dict({"n": 10, "k": 3}, kind="sample")
    cfg.validate()
    bad = ExperimentConfig(kind="sample", n=2, k=5)
    with pytest.raises(ValueError):
        bad.validate()
    with pytest.raises(ValueError):
        ExperimentConfig(kind="nope").validate()


def _read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_sample_experiment_csv(tmp_path):
    out = tmp_path / "sample.csv"
    cfg = ExperimentConfig(
        kind="sample", n=20, k=2, reps=50, seed=3, out=str(out), plot=False
    )
    assert run_experiment(cfg) == EXIT_OK
    rows = _read_csv(out)
    assert len(rows) == 50
    assert rows[0]["schema_version"] == "1"
    assert set(rows[0]) == {
        "schema_version",
        "rep",
        "support",
        "swap_distance",
        "partition",
    }


def test_tv_experiment_jsonl_and_figure(tmp_path):
    out = tmp_path / "tv.jsonl"
    cfg = ExperimentConfig(
        kind="tv-exact", n=4, k=2, times=(10,), seed=1, out=str(out), fmt="jsonl"
    )
    assert run_experiment(cfg) == EXIT_OK
    rows = [json.loads(line) for line in out.read_text().splitlines()]
    assert len(rows) == 11
    for row in rows:
        assert abs(row["tv_full"] - row["tv_lumped"]) <= 1e-9
    assert (tmp_path / "tv.png").exists()


def test_tv_experiment_infeasible():
    cfg = ExperimentConfig(kind="tv-exact", n=100, k=2, seed=1, plot=False)
    assert run_experiment(cfg) == EXIT_INFEASIBLE


def test_runs_are_reproducible(tmp_path):
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (out1, out2):
        cfg = ExperimentConfig(
            kind="walk", n=12, k=2, times=(0, 5), reps=10, seed=42,
            out=str(out), plot=False,
        )
        assert run_experiment(cfg) == EXIT_OK
    assert out1.read_text() == out2.read_text()


def test_couple_and_contraction_kinds(tmp_path):
    out = tmp_path / "couple.csv"
    cfg = ExperimentConfig(
        kind="couple", n=20, k=2, beta=(2.0,), delta=0.1, reps=5, seed=9,
        out=str(out), plot=False,
    )
    assert run_experiment(cfg) == EXIT_OK
    rows = _read_csv(out)
    assert len(rows) == 5
    assert all(r["final_distance"] in {"0", "1", "2"} for r in rows)
    out2 = tmp_path / "contraction.csv"
    cfg2 = ExperimentConfig(
        kind="contraction", n=16, k=2, beta=(1.0, 2.0), delta=0.1, reps=4,
        seed=9, out=str(out2), plot=False,
    )
    assert run_experiment(cfg2) == EXIT_OK
    assert len(_read_csv(out2)) == 2


def test_giant_kind_schema(tmp_path):
    out = tmp_path / "giant.csv"
    cfg = ExperimentConfig(
        kind="giant", n=200, k=2, beta=(2.0,), reps=4, seed=5,
        out=str(out), plot=False,
    )
    assert run_experiment(cfg) == EXIT_OK
    rows = _read_csv(out)
    assert len(rows) == 4
    assert set(rows[0]) == {
        "schema_version",
        "beta",
        "rep",
        "giant_fraction",
        "rounds",
        "seed",
    }


def test_verify_kind_exit_zero(capsys):
    cfg = ExperimentConfig(kind="verify", seed=0)
    assert run_experiment(cfg) == EXIT_OK
    lines = [l for l in capsys.readouterr().out.splitlines() if l]
    assert all(l.startswith("PASS") for l in lines)
    assert len(lines) >= 10


def test_cli_usage_errors():
    assert cli_main(["sample", "--n", "2", "--k", "5"]) == EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        cli_main(["bogus-kind"])
    assert exc.value.code == EXIT_USAGE
    assert cli_main(["sample", "--config", "/no/such/file.json"]) == EXIT_USAGE


def test_cli_config_file_with_flag_override(tmp_path):
    cfg_file = tmp_path / "cfg.json"
    cfg_file.write_text(json.dumps({"n": 10, "k": 2, "reps": 8, "seed": 1}))
    out = tmp_path / "run.csv"
    code = cli_main(
        [
            "sample",
            "--config",
            str(cfg_file),
            "--reps",
            "3",
            "--out",
            str(out),
            "--no-plot",
        ]
    )
    assert code == EXIT_OK
    assert len(_read_csv(out)) == 3  # flag beat the config value


def test_cli_renders_figure_by_default(tmp_path):
    out = tmp_path / "walk.csv"
    code = cli_main(
        ["walk", "--n", "10", "--k", "2", "--t", "0", "--t", "4",
         "--reps", "5", "--seed", "2", "--out", str(out)]
    )
    assert code == EXIT_OK
    assert (tmp_path / "walk.png").exists()


def test_console_script_installed():
    proc = subprocess.run(
        [sys.executable, "-m", "matchmix.cli", "sample", "--n", "6", "--k", "2",
         "--reps", "2", "--seed", "0"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "schema_version" in proc.stdout
