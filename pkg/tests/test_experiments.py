"""Tests for the Monte Carlo experiment drivers: slope fitting, seeding,
thread reproducibility, statistics scaling, and record persistence."""

import math

import numpy as np
import pytest

from randschro.experiments import (
    ExperimentConfigError,
    alpha_sweep_strichartz,
    fit_loglog_slope,
    ionization_experiment,
    load_record,
    path_class_comparison,
    run_id_for,
    save_record,
    trial_seed,
)

SMALL_SWEEP = {
    "dim": 1, "n": 32, "length": 20.0,
    "kind": "gaussian_well", "depth": 1.5, "width": 1.0,
    "dt": 1.0 / 32, "t_final": 0.5, "path_steps": 32,
    "trials": 4, "seed": 21, "alphas": [1.0, 2.0, 4.0, 8.0, 16.0],
}


# ---------------------------------------------------------------------------
# Slope fitting
# ---------------------------------------------------------------------------

def test_slope_fit_exact_power_law():
    xs = np.geomspace(1.0, 10.0, 6)
    ys = 3.0 * xs**-1.5
    out = fit_loglog_slope(xs, ys)
    assert out["slope"] == pytest.approx(-1.5, abs=1e-12)
    assert out["intercept"] == pytest.approx(math.log(3.0), abs=1e-12)
    assert out["ci"][0] == pytest.approx(-1.5, abs=1e-9)
    assert out["ci"][1] == pytest.approx(-1.5, abs=1e-9)


def test_slope_fit_bootstrap_covers_noisy_power_law():
    # The 95% bootstrap interval should contain the true exponent in the
    # vast majority of independent noisy realizations.  Pair resampling on
    # a dozen points undercovers the nominal level a little, so the bar is
    # 85% rather than 95%.
    rng = np.random.default_rng(3)
    xs = np.geomspace(1.0, 10.0, 12)
    hits = 0
    reps = 50
    for rep in range(reps):
        ys = 2.0 * xs**-1.5 * np.exp(rng.normal(0.0, 0.05, size=xs.size))
        out = fit_loglog_slope(xs, ys, seed=rep)
        if out["ci"][0] <= -1.5 <= out["ci"][1]:
            hits += 1
    assert hits >= 0.85 * reps


def test_slope_fit_input_guards():
    with pytest.raises(ExperimentConfigError):
        fit_loglog_slope([1.0, 2.0], [1.0, 2.0])
    with pytest.raises(ExperimentConfigError):
        fit_loglog_slope([1.0, 2.0, 3.0], [1.0, -2.0, 3.0])


def test_slope_fit_deterministic():
    xs = [1.0, 2.0, 4.0, 8.0]
    ys = [1.0, 0.6, 0.3, 0.2]
    a = fit_loglog_slope(xs, ys, seed=5)
    b = fit_loglog_slope(xs, ys, seed=5)
    assert a == b


# ---------------------------------------------------------------------------
# Seeding and run ids
# ---------------------------------------------------------------------------

def test_trial_seeds_counter_based_and_distinct():
    seeds = [trial_seed(99, k) for k in range(64)]
    assert len(set(seeds)) == 64
    # Independent of how many trials are requested.
    assert trial_seed(99, 5) == seeds[5]
    assert trial_seed(100, 5) != seeds[5]


def test_run_id_content_hash_properties():
    a = run_id_for({"x": 1}, 7, "sweep")
    assert len(a) == 12 and all(c in "0123456789abcdef" for c in a)
    assert a == run_id_for({"x": 1}, 7, "sweep")
    assert a != run_id_for({"x": 2}, 7, "sweep")
    assert a != run_id_for({"x": 1}, 8, "sweep")
    assert a != run_id_for({"x": 1}, 7, "ionize")


# ---------------------------------------------------------------------------
# Alpha sweep
# ---------------------------------------------------------------------------

def test_alpha_sweep_record_shape_and_warnings():
    rec = alpha_sweep_strichartz(dict(SMALL_SWEEP))
    assert rec.experiment == "alpha_sweep_strichartz"
    assert rec.run_id == run_id_for(rec.config, 21, rec.experiment)
    assert len(rec.series) == 4 * 5
    assert all(r[2] == "strichartz_deviation" for r in rec.series)
    assert "strichartz_deviation" in rec.slopes
    assert any("fewer than 20 trials" in w for w in rec.warnings)
    # Full decade present, so no range warning.
    assert not any("decade" in w for w in rec.warnings)


def test_alpha_sweep_warns_on_short_range():
    cfg = dict(SMALL_SWEEP, alphas=[1.0, 2.0, 4.0])
    rec = alpha_sweep_strichartz(cfg)
    assert any("decade" in w for w in rec.warnings)


def test_alpha_sweep_thread_reproducible():
    serial = alpha_sweep_strichartz(dict(SMALL_SWEEP), threads=1)
    threaded = alpha_sweep_strichartz(dict(SMALL_SWEEP), threads=4)
    assert serial.series == threaded.series
    assert serial.stats == threaded.stats
    assert serial.run_id == threaded.run_id


def test_alpha_sweep_stderr_scales_with_trials():
    # CLT: quadrupling trials should roughly halve the standard error.
    base = dict(SMALL_SWEEP, alphas=[2.0, 4.0, 8.0], trials=8)
    rec8 = alpha_sweep_strichartz(base)
    rec32 = alpha_sweep_strichartz(dict(base, trials=32))
    ratios = [rec32.stats[a]["stderr"] / rec8.stats[a]["stderr"]
              for a in rec8.stats]
    mean_ratio = float(np.mean(ratios))
    assert 0.5 * 0.7 <= mean_ratio <= 0.5 * 1.3


# ---------------------------------------------------------------------------
# Path-class comparison
# ---------------------------------------------------------------------------

def test_path_class_zero_norm_alpha_independent():
    cfg = {
        "dim": 1, "n": 32, "length": 20.0,
        "kind": "gaussian_well", "depth": 1.5, "width": 1.0,
        "dt": 1.0 / 32, "t_final": 1.0, "path_steps": 32,
        "trials": 3, "seed": 4, "alphas": [1.0, 3.0, 9.0],
        "classes": ["zero", "piecewise_linear", "brownian"],
        "power_iters": 40,
    }
    rec = path_class_comparison(cfg)
    zero_means = [rec.stats[str(a)]["zero"]["mean"] for a in cfg["alphas"]]
    assert max(zero_means) - min(zero_means) <= 1e-6 * max(zero_means)
    # deterministic classes carry zero spread
    assert all(rec.stats[str(a)]["piecewise_linear"]["stderr"] == 0.0
               for a in cfg["alphas"])
    assert set(rec.slopes) == {"norm_zero", "norm_piecewise_linear",
                               "norm_brownian"}


def test_path_class_rejects_unknown_class():
    with pytest.raises(ExperimentConfigError):
        path_class_comparison(dict(SMALL_SWEEP, classes=["brownian", "levy"]))


# ---------------------------------------------------------------------------
# Ionization
# ---------------------------------------------------------------------------

def test_ionization_record_metrics_and_zero_alpha_control():
    cfg = {
        "dim": 1, "n": 64, "length": 20.0,
        "kind": "gaussian_well", "depth": 4.0, "width": 1.0,
        "dt": 1.0 / 64, "t_final": 1.0, "path_steps": 64,
        "trials": 2, "seed": 13, "alphas": [0.0, 4.0],
    }
    rec = ionization_experiment(cfg)
    metrics = {r[2] for r in rec.series}
    assert metrics == {"rage_statistic", "overlap_decay_time",
                       "l6_low_fraction", "overlap_min"}
    assert rec.stats["ground_energy"] < 0
    # Undriven control: the ground state never leaves itself.
    assert rec.stats["0.0"]["overlap_min"] >= 1.0 - 1e-6
    assert all(math.isnan(v) for v in rec.series_values("overlap_decay_time", 0.0))


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def test_record_roundtrip_bitwise(tmp_path):
    rec = alpha_sweep_strichartz(dict(SMALL_SWEEP))
    run_dir = save_record(rec, tmp_path)
    assert run_dir.name == rec.run_id
    assert (run_dir / "record.json").exists()
    header = (run_dir / "series.csv").read_text().splitlines()[0]
    assert header == "experiment,alpha,trial,metric,value"
    back = load_record(run_dir)
    assert back.series == rec.series
    assert back.stats == rec.stats
    assert back.slopes == rec.slopes
    assert back.run_id == rec.run_id
    assert back.master_seed == rec.master_seed


def test_rerun_identical_config_identical_series(tmp_path):
    a = alpha_sweep_strichartz(dict(SMALL_SWEEP))
    b = alpha_sweep_strichartz(dict(SMALL_SWEEP))
    assert a.series == b.series
    assert a.run_id == b.run_id
