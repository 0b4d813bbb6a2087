"""Monte Carlo drivers, parameter sweeps, slope fits and result persistence.

Every experiment consumes a flat configuration mapping and returns an
:class:`ExperimentRecord` whose per-trial scalars are bitwise reproducible
from (config, master seed): trial k's path seed is derived by counter-based
splitting of the master seed, so it does not depend on how many trials run,
in what order, or on how many worker threads are used.  Reductions happen
after all trials are gathered in trial-index order.

Records are persisted as ``<output_dir>/<run-id>/record.json`` plus a
long-format ``series.csv`` with columns ``experiment, alpha, trial, metric,
value``.  The run id is a content hash of the (config, seed) pair, so
repeated runs of the same configuration land in the same directory.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .grid import ComplexField, Grid, fourier_mode, gaussian_packet
from .evolve import (
    evolve,
    ground_overlap,
    l6_low_fraction,
    rage_statistic,
    strichartz_deviation,
)
from .opnorm import SpaceTimeOperator, estimate_norm
from .paths import PathSample, make_piecewise_linear, sample_brownian, sample_fbm, zero_path
from .potentials import Potential, ground_state, make_potential

SCHEMA_VERSION = 1

SERIES_COLUMNS = ("experiment", "alpha", "trial", "metric", "value")


class ExperimentConfigError(ValueError):
    """Configuration value missing or rejected before any computation."""


@dataclass
class ExperimentRecord:
    """Full immutable result of one experiment run."""

    experiment: str
    run_id: str
    config: dict
    master_seed: int
    series: list  # rows of (alpha, trial, metric, value)
    stats: dict  # aggregated per-alpha statistics
    slopes: dict  # fitted log-log slopes with confidence intervals
    warnings: list = field(default_factory=list)
    elapsed_seconds: float = 0.0
    created: str = ""
    schema_version: int = SCHEMA_VERSION

    def series_values(self, metric: str, alpha: float) -> np.ndarray:
        """Per-trial values of one metric at one alpha, in trial order."""
        rows = [r for r in self.series
                if r[2] == metric and math.isclose(r[0], alpha)]
        rows.sort(key=lambda r: r[1])
        return np.array([r[3] for r in rows])


def run_id_for(config: dict, master_seed: int, experiment: str = "") -> str:
    """Content hash of (experiment, config, seed); identical runs collide
    on purpose so repeats are detected by landing in the same directory."""
    payload = json.dumps({"experiment": experiment, "config": config,
                          "seed": master_seed},
                         sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(payload.encode()).hexdigest()[:12]


def trial_seed(master_seed: int, trial: int) -> int:
    """Counter-based per-trial seed, independent of trial count and order."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(trial,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _run_trials(fn, trials: int, threads: int) -> list:
    """Run fn(trial) for each trial index, gathering in index order."""
    if threads <= 1:
        return [fn(k) for k in range(trials)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(trials)))


def fit_loglog_slope(xs, ys, n_boot: int = 1000, seed: int = 0) -> dict:
    """Least-squares slope of log(ys) vs log(xs) with a bootstrap CI.

    The confidence interval is the central 95% of slopes refitted on
    ``n_boot`` seeded resamples of the points (with replacement, always
    keeping at least three distinct abscissas so the fit is determined).
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 3:
        raise ExperimentConfigError("need at least 3 points for a slope fit")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ExperimentConfigError("log-log fit requires positive values")
    lx, ly = np.log(xs), np.log(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    boot = []
    while len(boot) < n_boot:
        idx = rng.integers(0, xs.size, size=xs.size)
        if np.unique(lx[idx]).size < 3:
            continue
        boot.append(np.polyfit(lx[idx], ly[idx], 1)[0])
    lo, hi = np.quantile(boot, [0.025, 0.975])
    return {"slope": float(slope), "intercept": float(intercept),
            "ci": [float(lo), float(hi)]}


def _grid_from(config: dict) -> Grid:
    return Grid(int(config.get("dim", 1)), int(config.get("n", 64)),
                float(config.get("length", 20.0)))


def _potential_from(config: dict, grid: Grid) -> Potential:
    return make_potential(str(config.get("potential_kind", "gaussian_well")),
                          float(config.get("depth", 1.5)),
                          float(config.get("width", 1.0)), grid)


def _alphas_from(config: dict, allow_zero: bool = False) -> list:
    alphas = [float(a) for a in config["alphas"]]
    floor = -1e-300 if allow_zero else 0.0
    if len(alphas) < 2 or min(alphas) <= floor:
        raise ExperimentConfigError(
            "alphas must be >= 2 nonnegative values" if allow_zero
            else "alphas must be >= 2 positive values")
    return sorted(alphas)


def _initial_data(config: dict, grid: Grid, pot: Potential) -> ComplexField:
    kind = str(config.get("initial_data", "gaussian"))
    if kind == "gaussian":
        return gaussian_packet(grid, float(config.get("packet_width", 1.0)))
    if kind == "ground_state":
        return ground_state(pot)[0]
    if kind == "mode":
        index = np.zeros(grid.dim, dtype=int)
        index[0] = int(config.get("mode_index", grid.n // 4))
        return fourier_mode(grid, index)
    raise ExperimentConfigError(f"unknown initial_data {kind!r}")


def _sample_path(config: dict, seed: int, dim: int) -> PathSample:
    steps = int(config.get("path_steps", 128))
    t_path = float(config.get("t_final", 1.0))
    kind = str(config.get("path_kind", "brownian"))
    if kind == "brownian":
        return sample_brownian(seed, steps, t_path, dim)
    if kind == "fbm":
        return sample_fbm(seed, steps, t_path, dim,
                          hurst=float(config.get("hurst", 0.5)))
    raise ExperimentConfigError(f"unknown path_kind {kind!r}")


def _finish(experiment: str, config: dict, master_seed: int, series: list,
            stats: dict, slopes: dict, warnings: list, t0: float) -> ExperimentRecord:
    return ExperimentRecord(
        experiment=experiment,
        run_id=run_id_for(config, master_seed, experiment),
        config=dict(config),
        master_seed=master_seed,
        series=series,
        stats=stats,
        slopes=slopes,
        warnings=warnings,
        elapsed_seconds=time.time() - t0,
        created=time.strftime("%Y-%m-%dT%H:%M:%S"),
    )


def alpha_sweep_strichartz(config: dict, threads: int = 1) -> ExperimentRecord:
    """Mean Strichartz deviation from free flow vs alpha, with slope fit.

    For each alpha, `trials` Brownian paths drive the potential; each trial
    records the space-time L^2_t L^{6,2}_x distance between the interacting
    and free evolutions of the same initial datum.  The log-log slope of
    the per-alpha means is fitted with a bootstrap confidence interval.
    """
    t0 = time.time()
    grid = _grid_from(config)
    pot = _potential_from(config, grid)
    z0 = _initial_data(config, grid, pot)
    alphas = _alphas_from(config)
    trials = int(config.get("trials", 20))
    dt = float(config.get("dt", 1.0 / 64))
    t_final = float(config.get("t_final", 1.0))
    store_every = int(config.get("store_every", 1))
    master_seed = int(config.get("seed", 0))
    warnings = []
    if trials < 20:
        warnings.append("fewer than 20 trials per alpha; slope CI unreliable")
    if max(alphas) / min(alphas) < 10.0:
        warnings.append("alpha range below one decade; slope fit ill-conditioned")

    series = []
    stats = {}
    for alpha in alphas:
        def one(trial, alpha=alpha):
            path = _sample_path(config, trial_seed(master_seed, trial), grid.dim)
            traj = evolve(z0, pot, path, alpha, dt, t_final,
                          store_every=store_every)
            return strichartz_deviation(traj, z0)["l2t_l62"]

        vals = np.array(_run_trials(one, trials, threads))
        series += [(alpha, k, "strichartz_deviation", float(v))
                   for k, v in enumerate(vals)]
        stats[str(alpha)] = {
            "mean": float(vals.mean()),
            "stderr": float(vals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0,
        }
    means = [stats[str(a)]["mean"] for a in alphas]
    slopes = {}
    if len(alphas) >= 3 and min(means) > 0:
        slopes["strichartz_deviation"] = fit_loglog_slope(
            alphas, means, seed=master_seed)
    return _finish("alpha_sweep_strichartz", config, master_seed, series,
                   stats, slopes, warnings, t0)


PATH_CLASSES = ("zero", "piecewise_linear", "brownian", "fbm")


def path_class_comparison(config: dict, threads: int = 1) -> ExperimentRecord:
    """Finite-horizon operator norm vs alpha for several path classes.

    The zero path and the fixed piecewise-linear shape are deterministic
    (one norm per alpha); Brownian and fractional-Brownian classes are
    averaged over `trials` sampled paths.  Scaling by alpha multiplies the
    path amplitude, so the zero-path norm is exactly alpha-independent
    while the paper predicts decay only for the random classes.
    """
    t0 = time.time()
    grid = _grid_from(config)
    pot = _potential_from(config, grid)
    alphas = _alphas_from(config)
    trials = int(config.get("trials", 8))
    dt = float(config.get("dt", 1.0 / 64))
    t_final = float(config.get("t_final", 1.0))
    steps = int(config.get("path_steps", 64))
    iters = int(config.get("power_iters", 60))
    hursts = [float(h) for h in config.get("hursts", [])]
    master_seed = int(config.get("seed", 0))
    classes = [str(c) for c in config.get("classes", ["zero", "piecewise_linear", "brownian"])]
    for c in classes:
        if c not in PATH_CLASSES:
            raise ExperimentConfigError(f"unknown path class {c!r}")

    pl_velocities = config.get("pl_velocities", [[1.0] + [0.0] * (grid.dim - 1),
                                                 [-1.0] + [0.0] * (grid.dim - 1)])
    pl_path = make_piecewise_linear(len(pl_velocities), pl_velocities,
                                    steps_per_piece=max(8, steps // len(pl_velocities)))

    def norm_of(path: PathSample, alpha: float) -> float:
        op = SpaceTimeOperator(pot, path, alpha, dt, t_final)
        return estimate_norm(op, iters=iters, seed=master_seed + 1).value

    series = []
    stats = {}
    for alpha in alphas:
        row = {}
        if "zero" in classes:
            row["zero"] = {"mean": norm_of(zero_path(steps, t_final, grid.dim), alpha),
                           "stderr": 0.0}
            series.append((alpha, 0, "norm_zero", row["zero"]["mean"]))
        if "piecewise_linear" in classes:
            row["piecewise_linear"] = {"mean": norm_of(pl_path, alpha), "stderr": 0.0}
            series.append((alpha, 0, "norm_piecewise_linear",
                           row["piecewise_linear"]["mean"]))
        if "brownian" in classes:
            def one(trial, alpha=alpha):
                return norm_of(sample_brownian(trial_seed(master_seed, trial),
                                               steps, t_final, grid.dim), alpha)
            vals = np.array(_run_trials(one, trials, threads))
            row["brownian"] = {
                "mean": float(vals.mean()),
                "stderr": float(vals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0,
            }
            series += [(alpha, k, "norm_brownian", float(v))
                       for k, v in enumerate(vals)]
        if "fbm" in classes:
            for hurst in hursts:
                def one_fbm(trial, alpha=alpha, hurst=hurst):
                    path = sample_fbm(trial_seed(master_seed, trial), steps,
                                      t_final, grid.dim, hurst=hurst)
                    return norm_of(path, alpha)
                vals = np.array(_run_trials(one_fbm, trials, threads))
                key = f"fbm_h{hurst:g}"
                row[key] = {
                    "mean": float(vals.mean()),
                    "stderr": float(vals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0,
                }
                series += [(alpha, k, f"norm_{key}", float(v))
                           for k, v in enumerate(vals)]
        stats[str(alpha)] = row

    slopes = {}
    for cls in stats[str(alphas[0])]:
        means = [stats[str(a)][cls]["mean"] for a in alphas]
        if len(alphas) >= 3 and min(means) > 0:
            slopes[f"norm_{cls}"] = fit_loglog_slope(alphas, means, seed=master_seed)
    return _finish("path_class_comparison", config, master_seed, series,
                   stats, slopes, [], t0)


def ionization_experiment(config: dict, threads: int = 1) -> ExperimentRecord:
    """Ground-state survival under Brownian driving across an alpha sweep.

    Per trial, records the time-averaged dispersal statistic
    (rage_statistic), the first time the ground-state overlap drops below
    1/2 (NaN if it never does within the horizon), and the fraction of
    time the L^6 norm sits below `l6_eps`.
    """
    t0 = time.time()
    grid = _grid_from(config)
    pot = _potential_from(config, grid)
    phi0, energy0 = ground_state(pot, dtau=float(config.get("gs_dtau", 0.005)))
    alphas = _alphas_from(config, allow_zero=True)
    trials = int(config.get("trials", 8))
    dt = float(config.get("dt", 1.0 / 64))
    t_final = float(config.get("t_final", 2.0))
    l6_eps = float(config.get("l6_eps", 0.5 * _l6_norm(phi0)))
    master_seed = int(config.get("seed", 0))

    def one(trial, alpha):
        if alpha == 0.0:
            path = zero_path(int(config.get("path_steps", 128)), t_final, grid.dim)
        else:
            path = _sample_path(config, trial_seed(master_seed, trial), grid.dim)
        traj = evolve(phi0, pot, path, alpha, dt, t_final)
        overlaps = [ground_overlap(traj, phi0, m)
                    for m in range(len(traj.field.times))]
        decay = next((float(traj.field.times[m])
                      for m, ov in enumerate(overlaps) if ov < 0.5), math.nan)
        return (rage_statistic(traj), decay, l6_low_fraction(traj, l6_eps),
                min(overlaps))

    series = []
    stats = {}
    for alpha in alphas:
        rows = _run_trials(lambda k, a=alpha: one(k, a), trials, threads)
        for k, (rage, decay, frac, ov_min) in enumerate(rows):
            series += [(alpha, k, "rage_statistic", float(rage)),
                       (alpha, k, "overlap_decay_time", float(decay)),
                       (alpha, k, "l6_low_fraction", float(frac)),
                       (alpha, k, "overlap_min", float(ov_min))]
        rages = np.array([r[0] for r in rows])
        stats[str(alpha)] = {
            "mean": float(rages.mean()),
            "stderr": float(rages.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0,
            "l6_low_fraction_mean": float(np.mean([r[2] for r in rows])),
            "overlap_min": float(min(r[3] for r in rows)),
        }
    slopes = {}
    positive = [a for a in alphas if a > 0]
    means = [stats[str(a)]["mean"] for a in positive]
    if len(positive) >= 3 and min(means) > 0:
        slopes["rage_statistic"] = fit_loglog_slope(positive, means, seed=master_seed)
    record = _finish("ionization_experiment", config, master_seed, series,
                     stats, slopes, [], t0)
    record.stats["ground_energy"] = energy0
    return record


def _l6_norm(f: ComplexField) -> float:
    from .grid import lp_norm
    return lp_norm(f, 6.0)


def record_to_json(record: ExperimentRecord) -> dict:
    return {
        "schema_version": record.schema_version,
        "experiment": record.experiment,
        "run_id": record.run_id,
        "config": record.config,
        "master_seed": record.master_seed,
        "stats": record.stats,
        "slopes": record.slopes,
        "warnings": record.warnings,
        "elapsed_seconds": record.elapsed_seconds,
        "created": record.created,
        "n_series_rows": len(record.series),
    }


def save_record(record: ExperimentRecord, output_dir) -> Path:
    """Write record.json + series.csv under output_dir/<run-id>/."""
    run_dir = Path(output_dir) / record.run_id
    run_dir.mkdir(parents=True, exist_ok=True)
    with open(run_dir / "record.json", "w") as fh:
        json.dump(record_to_json(record), fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(run_dir / "series.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SERIES_COLUMNS)
        for alpha, trial, metric, value in record.series:
            writer.writerow([record.experiment, repr(alpha), trial, metric,
                             repr(value)])
    return run_dir


def load_record(run_dir) -> ExperimentRecord:
    """Reconstruct a record from record.json + series.csv."""
    run_dir = Path(run_dir)
    with open(run_dir / "record.json") as fh:
        meta = json.load(fh)
    series = []
    with open(run_dir / "series.csv", newline="") as fh:
        for row in csv.DictReader(fh):
            series.append((float(row["alpha"]), int(row["trial"]),
                           row["metric"], float(row["value"])))
    return ExperimentRecord(
        experiment=meta["experiment"],
        run_id=meta["run_id"],
        config=meta["config"],
        master_seed=meta["master_seed"],
        series=series,
        stats=meta["stats"],
        slopes=meta["slopes"],
        warnings=meta.get("warnings", []),
        elapsed_seconds=meta.get("elapsed_seconds", 0.0),
        created=meta.get("created", ""),
        schema_version=meta.get("schema_version", SCHEMA_VERSION),
    )
