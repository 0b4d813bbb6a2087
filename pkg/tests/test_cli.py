"""Tests for the command-line interface: config parsing, subcommands,
exit codes, overrides, strict mode, and record reproducibility."""

import json
import os
from pathlib import Path

import pytest

from randschro.cli import (OUTPUT_ENV, _coerce, load_config, main,
                           ConfigError)

BASE_INI = """
[grid]
dim = 1
n = 32
length = 20.0

[potential]
kind = gaussian_well
depth = 1.5
width = 1.0

[path]
kind = brownian
steps = 32

[run]
dt = 0.03125
t_final = 0.5
alpha = 2.0
seed = 42
trials = 3
"""


@pytest.fixture()
def workdir(tmp_path, monkeypatch):
    ini = tmp_path / "run.ini"
    ini.write_text(BASE_INI)
    out = tmp_path / "results"
    monkeypatch.setenv(OUTPUT_ENV, str(out))
    return ini, out


def run_dirs(out: Path) -> list:
    return sorted(p for p in out.iterdir() if p.is_dir()) if out.exists() else []


# ---------------------------------------------------------------------------
# Config parsing
# ---------------------------------------------------------------------------

def test_coerce_types():
    assert _coerce("true") is True
    assert _coerce("No") is False
    assert _coerce("3") == 3
    assert _coerce("2.5") == 2.5
    assert _coerce("1, 2.5, x") == [1, 2.5, "x"]
    assert _coerce("hello") == "hello"


def test_load_config_flattens_and_overrides(workdir):
    ini, _ = workdir
    cfg = load_config(ini, ["run.alpha=5.0", "grid.n=64"])
    assert cfg["grid.dim"] == 1
    assert cfg["run.alpha"] == 5.0
    assert cfg["grid.n"] == 64
    assert cfg["potential.kind"] == "gaussian_well"


def test_load_config_missing_file():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/path.ini")


def test_load_config_bad_override(workdir):
    ini, _ = workdir
    with pytest.raises(ConfigError):
        load_config(ini, ["runalpha"])


# ---------------------------------------------------------------------------
# Subcommands and record layout
# ---------------------------------------------------------------------------

def test_simulate_writes_record_and_series(workdir, capsys):
    ini, out = workdir
    assert main(["simulate", "--config", str(ini)]) == 0
    dirs = run_dirs(out)
    assert len(dirs) == 1
    record = json.loads((dirs[0] / "record.json").read_text())
    assert record["experiment"] == "simulate"
    assert record["run_id"] == dirs[0].name
    assert "strichartz_deviation" in record["stats"]
    header = (dirs[0] / "series.csv").read_text().splitlines()[0]
    assert header == "experiment,alpha,trial,metric,value"
    assert "simulate:" in capsys.readouterr().out


def test_simulate_zero_potential_is_free_flow(workdir):
    ini, out = workdir
    assert main(["simulate", "--config", str(ini),
                 "--set", "potential.kind=zero", "--quiet"]) == 0
    record = json.loads((run_dirs(out)[0] / "record.json").read_text())
    assert record["stats"]["strichartz_deviation"] < 1e-10


def test_each_subcommand_runs(workdir):
    ini, out = workdir
    cheap = {
        "opnorm": ["--set", "run.power_iters=30"],
        "blocks": ["--set", "run.blocks=2", "--set", "run.power_iters=30"],
        "concentration": ["--set", "run.trials=3", "--set", "run.eps=0.25"],
        "series": ["--set", "run.max_order=1"],
        "groundstate": [],
        "sweep-alpha": ["--set", "run.alphas=1.0,3.0,10.0",
                        "--set", "run.trials=2"],
        "compare-paths": ["--set", "run.alphas=1.0,3.0,10.0",
                          "--set", "run.trials=2",
                          "--set", "run.classes=zero,brownian"],
        "ionize": ["--set", "run.alphas=1.0,4.0", "--set", "run.trials=2",
                   "--set", "potential.depth=4.0", "--set", "grid.n=64"],
    }
    for command, extra in cheap.items():
        code = main([command, "--config", str(ini), "--quiet"] + extra)
        assert code == 0, command
    # every run landed in its own content-addressed directory
    assert len(run_dirs(out)) == len(cheap)


def test_quiet_suppresses_summary(workdir, capsys):
    ini, _ = workdir
    assert main(["groundstate", "--config", str(ini), "--quiet"]) == 0
    assert capsys.readouterr().out == ""


# ---------------------------------------------------------------------------
# Exit codes
# ---------------------------------------------------------------------------

def test_config_error_exit_code(workdir, capsys):
    ini, _ = workdir
    code = main(["simulate", "--config", str(ini),
                 "--set", "potential.kind=nonsense"])
    assert code == 2
    assert "config error" in capsys.readouterr().err


def test_missing_config_file_exit_code(capsys):
    assert main(["simulate", "--config", "/does/not/exist.ini"]) == 2


def test_missing_required_key_exit_code(workdir, capsys):
    ini, _ = workdir
    assert main(["sweep-alpha", "--config", str(ini)]) == 2
    assert "run.alphas" in capsys.readouterr().err


def test_strict_promotes_warnings(workdir, capsys):
    ini, _ = workdir
    args = ["sweep-alpha", "--config", str(ini), "--quiet",
            "--set", "run.alphas=1.0,2.0,4.0", "--set", "run.trials=2"]
    # few trials + short alpha range produce numerical warnings
    assert main(args) == 0
    assert main(args + ["--strict"]) == 3
    assert "numerical warning" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# Reproducibility and output routing
# ---------------------------------------------------------------------------

def test_identical_config_reproduces_record(workdir, tmp_path):
    ini, out = workdir
    args = ["sweep-alpha", "--config", str(ini), "--quiet",
            "--set", "run.alphas=1.0,3.0,10.0", "--set", "run.trials=2"]
    assert main(args) == 0
    (run_dir,) = run_dirs(out)
    first_json = json.loads((run_dir / "record.json").read_text())
    first_series = (run_dir / "series.csv").read_text()
    assert main(args) == 0
    assert len(run_dirs(out)) == 1  # same content hash, same directory
    second_json = json.loads((run_dir / "record.json").read_text())
    for volatile in ("elapsed_seconds", "created"):
        first_json.pop(volatile), second_json.pop(volatile)
    assert first_json == second_json
    assert (run_dir / "series.csv").read_text() == first_series


def test_output_dir_key_beats_env(workdir, tmp_path):
    ini, out = workdir
    alt = tmp_path / "elsewhere"
    assert main(["groundstate", "--config", str(ini), "--quiet",
                 "--set", f"run.output_dir={alt}"]) == 0
    assert len(run_dirs(alt)) == 1
    assert not out.exists()


def test_env_var_default_root(workdir, monkeypatch, tmp_path):
    ini, out = workdir
    assert main(["groundstate", "--config", str(ini), "--quiet"]) == 0
    assert len(run_dirs(out)) == 1
