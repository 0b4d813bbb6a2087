"""Command-line entry point: INI configs in, record.json/series.csv out.

Usage::

    randschro <subcommand> --config run.ini [--set key=value ...]
              [--strict] [--threads N] [--quiet]

Subcommands: simulate | opnorm | blocks | concentration | series |
sweep-alpha | compare-paths | ionize | groundstate.

Configs are flat INI files; every key may also be overridden on the
command line with ``--set section.key=value``.  Results are written under
``<output_dir>/<run-id>/`` where the run id is a content hash of the
resolved configuration plus seed, so identical runs are detected by
landing in the same directory.  The default output root is the
``RANDSCHRO_OUTPUT`` environment variable, falling back to ``./results``.

Exit codes: 0 success, 2 configuration error, 3 numerical warning promoted
to an error under ``--strict``.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import experiments
from .evolve import evolve, strichartz_deviation
from .grid import Grid
from .opnorm import SpaceTimeOperator, block_norm, estimate_norm, restricted_norm_growth
from .paths import (
    PathError,
    concentration_K,
    make_piecewise_linear,
    sample_brownian,
    sample_fbm,
    zero_path,
)
from .potentials import (
    NoBoundStateError,
    PotentialConfigError,
    ground_state,
    make_potential,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_STRICT = 3

OUTPUT_ENV = "RANDSCHRO_OUTPUT"

_BOOL = {"true": True, "false": False, "yes": True, "no": False}


class ConfigError(ValueError):
    """Invalid or missing configuration value, reported with its key path."""


def _coerce(text: str):
    """Parse an INI value: bool, int, float, comma list, or raw string."""
    s = text.strip()
    if s.lower() in _BOOL:
        return _BOOL[s.lower()]
    if "," in s:
        return [_coerce(part) for part in s.split(",") if part.strip()]
    for caster in (int, float):
        try:
            return caster(s)
        except ValueError:
            pass
    return s


def load_config(path, overrides=()) -> dict:
    """Flatten an INI file into {'section.key': value} with overrides applied."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")
    flat = {}
    for section in parser.sections():
        for key, value in parser[section].items():
            flat[f"{section}.{key}"] = _coerce(value)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        flat[key.strip()] = _coerce(value)
    return flat


def _require(config: dict, key: str):
    if key not in config:
        raise ConfigError(f"missing required config key: {key}")
    return config[key]


def _get(config: dict, key: str, default):
    return config.get(key, default)


def _as_list(value) -> list:
    return list(value) if isinstance(value, list) else [value]


def _grid(config: dict) -> Grid:
    try:
        return Grid(int(_get(config, "grid.dim", 1)),
                    int(_get(config, "grid.n", 64)),
                    float(_get(config, "grid.length", 20.0)))
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}") from exc


def _potential(config: dict, grid: Grid):
    try:
        return make_potential(str(_get(config, "potential.kind", "gaussian_well")),
                              float(_get(config, "potential.depth", 1.5)),
                              float(_get(config, "potential.width", 1.0)), grid)
    except PotentialConfigError as exc:
        raise ConfigError(f"potential: {exc}") from exc


def _path(config: dict, grid: Grid, seed: int):
    kind = str(_get(config, "path.kind", "brownian"))
    steps = int(_get(config, "path.steps", 128))
    t_final = float(_get(config, "run.t_final", 1.0))
    try:
        if kind == "zero":
            return zero_path(steps, t_final, grid.dim)
        if kind == "brownian":
            return sample_brownian(seed, steps, t_final, grid.dim)
        if kind == "fbm":
            return sample_fbm(seed, steps, t_final, grid.dim,
                              hurst=float(_get(config, "path.hurst", 0.5)))
        if kind == "piecewise_linear":
            velocities = [[float(v)] + [0.0] * (grid.dim - 1)
                          for v in _as_list(_get(config, "path.velocities", [1.0, -1.0]))]
            return make_piecewise_linear(len(velocities), velocities,
                                         steps_per_piece=max(8, steps // len(velocities)))
    except PathError as exc:
        raise ConfigError(f"path: {exc}") from exc
    raise ConfigError(f"path.kind: unknown kind {kind!r}")


def _experiment_config(config: dict) -> dict:
    """Map flat CLI keys onto the experiments-module configuration."""
    out = {
        "dim": int(_get(config, "grid.dim", 1)),
        "n": int(_get(config, "grid.n", 64)),
        "length": float(_get(config, "grid.length", 20.0)),
        "potential_kind": str(_get(config, "potential.kind", "gaussian_well")),
        "depth": float(_get(config, "potential.depth", 1.5)),
        "width": float(_get(config, "potential.width", 1.0)),
        "dt": float(_get(config, "run.dt", 1.0 / 64)),
        "t_final": float(_get(config, "run.t_final", 1.0)),
        "path_steps": int(_get(config, "path.steps", 128)),
        "path_kind": str(_get(config, "path.kind", "brownian")),
        "trials": int(_get(config, "run.trials", 20)),
        "seed": int(_get(config, "run.seed", 0)),
        "initial_data": str(_get(config, "run.initial_data", "gaussian")),
    }
    if "run.alphas" in config:
        out["alphas"] = [float(a) for a in _as_list(config["run.alphas"])]
    if "path.hurst" in config:
        out["hurst"] = float(config["path.hurst"])
    if "run.classes" in config:
        out["classes"] = [str(c) for c in _as_list(config["run.classes"])]
    if "run.hursts" in config:
        out["hursts"] = [float(h) for h in _as_list(config["run.hursts"])]
    return out


def _output_root(config: dict) -> Path:
    root = config.get("run.output_dir") or os.environ.get(OUTPUT_ENV, "results")
    return Path(root)


def _write_scalar_record(name: str, config: dict, series: list, stats: dict,
                         quiet: bool) -> tuple:
    """Persist a non-MC subcommand result in the standard record layout."""
    seed = int(_get(config, "run.seed", 0))
    record = experiments.ExperimentRecord(
        experiment=name,
        run_id=experiments.run_id_for(config, seed, name),
        config=dict(config),
        master_seed=seed,
        series=series,
        stats=stats,
        slopes={},
    )
    run_dir = experiments.save_record(record, _output_root(config))
    return record, run_dir


def _summary(line: str, run_dir, quiet: bool) -> None:
    if not quiet:
        print(f"{line}  [{run_dir}]")


def cmd_simulate(config: dict, threads: int, quiet: bool) -> list:
    grid = _grid(config)
    pot = _potential(config, grid)
    from .grid import gaussian_packet
    z0 = gaussian_packet(grid, float(_get(config, "run.packet_width", 1.0)))
    seed = int(_get(config, "run.seed", 0))
    path = _path(config, grid, experiments.trial_seed(seed, 0))
    alpha = float(_get(config, "run.alpha", 1.0))
    traj = evolve(z0, pot, path, alpha, float(_get(config, "run.dt", 1.0 / 64)),
                  float(_get(config, "run.t_final", 1.0)))
    dev = strichartz_deviation(traj, z0)
    drift = max(abs(traj.mass(m) - traj.mass(0)) for m in range(len(traj.field.times)))
    series = [(alpha, 0, "strichartz_deviation", dev["l2t_l62"]),
              (alpha, 0, "mass_drift", drift)]
    stats = {"strichartz_deviation": dev["l2t_l62"], "mass_drift": drift}
    record, run_dir = _write_scalar_record("simulate", config, series, stats, quiet)
    _summary(f"simulate: strichartz deviation {dev['l2t_l62']:.6g}, "
             f"mass drift {drift:.3g}", run_dir, quiet)
    return record.warnings


def cmd_opnorm(config: dict, threads: int, quiet: bool) -> list:
    grid = _grid(config)
    pot = _potential(config, grid)
    seed = int(_get(config, "run.seed", 0))
    path = _path(config, grid, experiments.trial_seed(seed, 0))
    alpha = float(_get(config, "run.alpha", 1.0))
    op = SpaceTimeOperator(pot, path, alpha, float(_get(config, "run.dt", 1.0 / 64)),
                           float(_get(config, "run.t_final", 1.0)))
    horizons = [float(h) for h in _as_list(_get(config, "run.horizons", []))]
    warnings = []
    if horizons:
        est = restricted_norm_growth(pot, path, alpha, horizons,
                                     float(_get(config, "run.dt", 1.0 / 64)))
        series = [(alpha, 0, f"norm_T{h:g}", e.value) for h, e in zip(horizons, est)]
        stats = {f"norm_T{h:g}": e.value for h, e in zip(horizons, est)}
        last = est[-1]
    else:
        last = estimate_norm(op, iters=int(_get(config, "run.power_iters", 120)),
                             seed=seed + 1)
        series = [(alpha, 0, "norm", last.value)]
        stats = {"norm": last.value, "convergence_gap": last.gap}
    if not last.converged:
        warnings.append("power iteration did not reach its gap tolerance")
    record, run_dir = _write_scalar_record("opnorm", config, series, stats, quiet)
    _summary(f"opnorm: ||S|| = {last.value:.6g} (gap {last.gap:.2g})", run_dir, quiet)
    return warnings


def cmd_blocks(config: dict, threads: int, quiet: bool) -> list:
    grid = _grid(config)
    pot = _potential(config, grid)
    seed = int(_get(config, "run.seed", 0))
    path = _path(config, grid, experiments.trial_seed(seed, 0))
    alpha = float(_get(config, "run.alpha", 1.0))
    n = int(_get(config, "run.blocks", 4))
    op = SpaceTimeOperator(pot, path, alpha, float(_get(config, "run.dt", 1.0 / 64)),
                           float(_get(config, "run.t_final", 1.0)))
    series, stats = [], {}
    for j in range(1, n + 1):
        for k in range(1, n + 1):
            value = block_norm(op, n, j, k,
                               iters=int(_get(config, "run.power_iters", 80)),
                               seed=seed + 1).value
            series.append((alpha, 0, f"block_{j}_{k}", value))
            stats[f"block_{j}_{k}"] = value
    diag = max(stats[f"block_{j}_{j}"] for j in range(1, n + 1))
    record, run_dir = _write_scalar_record("blocks", config, series, stats, quiet)
    _summary(f"blocks: n={n}, max diagonal block norm {diag:.6g}", run_dir, quiet)
    return record.warnings


def cmd_concentration(config: dict, threads: int, quiet: bool) -> list:
    grid = _grid(config)
    seed = int(_get(config, "run.seed", 0))
    eps = float(_get(config, "run.eps", 0.25))
    radii = [float(r) for r in _as_list(_get(config, "run.radii", [0.01, 0.1, 0.5]))]
    trials = int(_get(config, "run.trials", 20))
    series, stats = [], {}
    for r in radii:
        vals = []
        for trial in range(trials):
            path = _path(config, grid, experiments.trial_seed(seed, trial))
            vals.append(concentration_K(path, eps, r))
            series.append((r, trial, "concentration_K", vals[-1]))
        stats[f"K_r{r:g}"] = float(np.mean(vals))
    record, run_dir = _write_scalar_record("concentration", config, series, stats, quiet)
    pairs = ", ".join(f"K(r={r:g})={stats[f'K_r{r:g}']:.4g}" for r in radii)
    _summary(f"concentration: eps={eps:g}, {pairs}", run_dir, quiet)
    return record.warnings


def cmd_series(config: dict, threads: int, quiet: bool) -> list:
    """Born-series partial-sum defects against the full evolution."""
    from .duhamel import born_partial_sum
    from .grid import gaussian_packet
    grid = _grid(config)
    pot = _potential(config, grid)
    z0 = gaussian_packet(grid, float(_get(config, "run.packet_width", 1.0)))
    seed = int(_get(config, "run.seed", 0))
    path = _path(config, grid, experiments.trial_seed(seed, 0))
    alpha = float(_get(config, "run.alpha", 4.0))
    dt = float(_get(config, "run.dt", 1.0 / 64))
    t_final = float(_get(config, "run.t_final", 1.0))
    max_order = int(_get(config, "run.max_order", 3))
    traj = evolve(z0, pot, path, alpha, dt, t_final)
    z_final = traj.slice(len(traj.field.times) - 1)
    series, stats = [], {}
    for order in range(max_order + 1):
        approx = born_partial_sum(order, z0, pot, path, alpha, dt, t_final)
        defect = (z_final - approx.slice(len(approx.times) - 1)).norm_l2()
        series.append((alpha, 0, f"born_defect_{order}", defect))
        stats[f"born_defect_{order}"] = defect
    record, run_dir = _write_scalar_record("series", config, series, stats, quiet)
    _summary(f"series: born defects "
             + " ".join(f"n={o}:{stats[f'born_defect_{o}']:.3g}"
                        for o in range(max_order + 1)), run_dir, quiet)
    return record.warnings


def _mc_summary(record, metric_label: str, run_dir, quiet: bool) -> None:
    slope = next(iter(record.slopes.values()), None)
    if slope is not None:
        _summary(f"{record.experiment}: {metric_label} slope "
                 f"{slope['slope']:.3f} (95% CI [{slope['ci'][0]:.3f}, "
                 f"{slope['ci'][1]:.3f}])", run_dir, quiet)
    else:
        _summary(f"{record.experiment}: {len(record.series)} series rows",
                 run_dir, quiet)


def cmd_sweep_alpha(config: dict, threads: int, quiet: bool) -> list:
    exp_config = _experiment_config(config)
    if "alphas" not in exp_config:
        raise ConfigError("missing required config key: run.alphas")
    record = experiments.alpha_sweep_strichartz(exp_config, threads=threads)
    run_dir = experiments.save_record(record, _output_root(config))
    _mc_summary(record, "strichartz deviation", run_dir, quiet)
    return record.warnings


def cmd_compare_paths(config: dict, threads: int, quiet: bool) -> list:
    exp_config = _experiment_config(config)
    if "alphas" not in exp_config:
        raise ConfigError("missing required config key: run.alphas")
    record = experiments.path_class_comparison(exp_config, threads=threads)
    run_dir = experiments.save_record(record, _output_root(config))
    _mc_summary(record, "operator norm", run_dir, quiet)
    return record.warnings


def cmd_ionize(config: dict, threads: int, quiet: bool) -> list:
    exp_config = _experiment_config(config)
    if "alphas" not in exp_config:
        raise ConfigError("missing required config key: run.alphas")
    try:
        record = experiments.ionization_experiment(exp_config, threads=threads)
    except NoBoundStateError as exc:
        raise ConfigError(f"potential: {exc}") from exc
    run_dir = experiments.save_record(record, _output_root(config))
    _mc_summary(record, "rage statistic", run_dir, quiet)
    return record.warnings


def cmd_groundstate(config: dict, threads: int, quiet: bool) -> list:
    grid = _grid(config)
    pot = _potential(config, grid)
    try:
        phi0, energy = ground_state(pot, dtau=float(_get(config, "run.gs_dtau", 0.01)))
    except NoBoundStateError as exc:
        raise ConfigError(f"potential: {exc}") from exc
    series = [(0.0, 0, "ground_energy", energy)]
    stats = {"ground_energy": energy}
    record, run_dir = _write_scalar_record("groundstate", config, series, stats, quiet)
    _summary(f"groundstate: E0 = {energy:.6f}", run_dir, quiet)
    return record.warnings


COMMANDS = {
    "simulate": cmd_simulate,
    "opnorm": cmd_opnorm,
    "blocks": cmd_blocks,
    "concentration": cmd_concentration,
    "series": cmd_series,
    "sweep-alpha": cmd_sweep_alpha,
    "compare-paths": cmd_compare_paths,
    "ionize": cmd_ionize,
    "groundstate": cmd_groundstate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="randschro",
        description="Spectral simulator for a Schrodinger equation with a "
                    "randomly translated potential.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="INI config file")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key (repeatable)")
    parser.add_argument("--strict", action="store_true",
                        help="promote numerical warnings to exit code 3")
    parser.add_argument("--threads", type=int, default=1,
                        help="concurrent trials per experiment")
    parser.add_argument("--quiet", action="store_true",
                        help="suppress the one-line summary")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config, args.set)
        warnings = COMMANDS[args.command](config, max(1, args.threads), args.quiet)
    except (ConfigError, experiments.ExperimentConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if warnings and args.strict:
        for w in warnings:
            print(f"numerical warning: {w}", file=sys.stderr)
        return EXIT_STRICT
    for w in warnings or []:
        if not args.quiet:
            print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
