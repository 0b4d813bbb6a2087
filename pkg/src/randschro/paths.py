"""Driving curves: Brownian / fractional Brownian / piecewise-linear paths,
plus the cylinder-concentration functional and the local-time energy sum.

All samplers are deterministic functions of their seed.  Paths start at the
origin; the magnitude multiplier alpha is stored on the sample but applied
at use sites (solver, operator norms), so one canonical unit-scale path
exists per seed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

FBM_MAX_STEPS = 4096


class PathError(ValueError):
    """Invalid path construction parameters."""


class PathResourceError(PathError):
    """Requested path exceeds the dense-covariance size cap."""


@dataclass
class PathSample:
    """A curve gamma(t_k) on a uniform time lattice starting at the origin."""

    times: np.ndarray          # (M+1,)
    positions: np.ndarray      # (M+1, d)
    kind: str                  # brownian | fbm | piecewise_linear | zero
    seed: int | None = None
    alpha: float = 1.0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.positions = np.asarray(self.positions, dtype=float)
        if self.positions.ndim != 2 or self.positions.shape[0] != len(self.times):
            raise PathError("positions must have shape (len(times), d)")
        if np.any(np.abs(self.positions[0]) > 0):
            raise PathError("paths must start at the origin")

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    def at(self, t) -> np.ndarray:
        """Piecewise-linear interpolation of the sampled positions."""
        t = np.asarray(t, dtype=float)
        out = np.empty(t.shape + (self.dim,))
        for j in range(self.dim):
            out[..., j] = np.interp(t, self.times, self.positions[:, j])
        return out


def zero_path(steps: int, t_path: float = 1.0, dim: int = 1) -> PathSample:
    times = np.linspace(0.0, t_path, steps + 1)
    return PathSample(times, np.zeros((steps + 1, dim)), "zero")


def sample_brownian(seed: int, steps: int, t_path: float = 1.0,
                    dim: int = 1) -> PathSample:
    """Standard Brownian motion: independent N(0, dt) increments per axis."""
    if steps < 1:
        raise PathError("sample_brownian requires at least one step")
    if not t_path > 0:
        raise PathError("t_path must be positive")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    dt = t_path / steps
    incr = rng.normal(0.0, np.sqrt(dt), size=(steps, dim))
    pos = np.vstack([np.zeros((1, dim)), np.cumsum(incr, axis=0)])
    times = np.linspace(0.0, t_path, steps + 1)
    return PathSample(times, pos, "brownian", seed=seed)


def sample_fbm(seed: int, steps: int, t_path: float = 1.0, dim: int = 1,
               hurst: float = 0.5) -> PathSample:
    """Fractional Brownian motion via dense Cholesky of the exact covariance.

    Cov(t_i, t_j) = (t_i^{2H} + t_j^{2H} - |t_i - t_j|^{2H}) / 2 per axis.
    """
    if steps < 1:
        raise PathError("sample_fbm requires at least one step")
    if not (0.0 < hurst < 1.0):
        raise PathError(f"Hurst exponent must lie in (0,1), got {hurst}")
    if steps > FBM_MAX_STEPS:
        raise PathResourceError(
            f"fBM dense Cholesky capped at {FBM_MAX_STEPS} steps, got {steps}"
        )
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    times = np.linspace(0.0, t_path, steps + 1)
    t = times[1:]
    h2 = 2.0 * hurst
    cov = 0.5 * (t[:, None] ** h2 + t[None, :] ** h2
                 - np.abs(t[:, None] - t[None, :]) ** h2)
    chol = np.linalg.cholesky(cov + 1e-14 * np.eye(steps))
    z = rng.standard_normal(size=(steps, dim))
    pos = np.vstack([np.zeros((1, dim)), chol @ z])
    return PathSample(times, pos, "fbm", seed=seed, params={"hurst": hurst})


def make_piecewise_linear(n: int, velocities, steps_per_piece: int = 16,
                          t_path: float = 1.0) -> PathSample:
    """Continuous path, affine with velocity v_j on [(j-1)/n, j/n] * t_path."""
    velocities = np.atleast_2d(np.asarray(velocities, dtype=float))
    if velocities.shape[0] != n:
        raise PathError(f"expected {n} velocities, got {velocities.shape[0]}")
    dim = velocities.shape[1]
    steps = n * steps_per_piece
    times = np.linspace(0.0, t_path, steps + 1)
    piece_len = t_path / n
    pos = np.zeros((steps + 1, dim))
    anchor = np.zeros(dim)
    for j in range(n):
        t0 = j * piece_len
        sel = slice(j * steps_per_piece, (j + 1) * steps_per_piece + 1)
        pos[sel] = anchor + (times[sel, None] - t0) * velocities[j]
        anchor = anchor + piece_len * velocities[j]
    return PathSample(times, pos, "piecewise_linear",
                      params={"velocities": velocities})


def separated_velocities(n: int, dim: int = 1) -> np.ndarray:
    """Velocity family with pairwise separation |v_j - v_k| > n^2.

    Spaced along the first axis by sqrt(2)*(n^2+1), incommensurate with
    typical box lengths so that no velocity aliases to a lattice period.
    """
    v = np.zeros((n, dim))
    v[:, 0] = np.sqrt(2.0) * (n**2 + 1) * np.arange(n)
    return v


# ---------------------------------------------------------------------------
# Concentration functional and local-time energy
# ---------------------------------------------------------------------------

def _candidate_lines(path: PathSample, max_base_points: int = 256):
    """Lines through pairs of sampled path points, plus the global
    least-squares line.  Returns (y0, v) arrays of shape (n_cand, d)."""
    t, pos = path.times, path.positions
    m = len(t)
    stride = max(1, int(np.ceil(m / max_base_points)))
    idx = np.arange(0, m, stride)
    ii, jj = np.triu_indices(len(idx), k=1)
    a, b = idx[ii], idx[jj]
    dt_ab = t[b] - t[a]
    v = (pos[b] - pos[a]) / dt_ab[:, None]
    y0 = pos[a] - v * t[a][:, None]
    # global least-squares line
    tm, pm = t.mean(), pos.mean(axis=0)
    denom = np.sum((t - tm) ** 2)
    if denom > 0:
        v_ls = ((t - tm) @ (pos - pm)) / denom
        y0_ls = pm - v_ls * tm
        v = np.vstack([v, v_ls[None, :]])
        y0 = np.vstack([y0, y0_ls[None, :]])
    return y0, v


def concentration_K(path: PathSample, eps: float, r: float) -> float:
    """Lower-bound estimate of the cylinder-concentration functional.

    Slides every window of length eps over the time lattice and maximizes,
    over a candidate family of lines (through all pairs of sampled path
    points, plus the least-squares fit), the time measure of
    {t in window : |gamma(t) - y0 - v t| <= r}, by the trapezoid rule on the
    hit indicator.  Exact for affine paths; a documented lower bound of the
    true supremum otherwise.  The candidate family is shared by all windows
    so the estimate is monotone in both eps and r.
    """
    t, pos = path.times, path.positions
    dt = path.dt
    if not (0 < eps <= path.horizon + 1e-12):
        raise PathError(f"eps must lie in (0, horizon], got {eps}")
    if not r > 0:
        raise PathError("radius r must be positive")
    w_nodes = int(eps / dt + 1e-9)  # full lattice steps inside the window
    frac = eps - w_nodes * dt       # fractional remainder step
    if w_nodes < 2:
        raise PathError("eps must cover at least two lattice steps")
    y0, v = _candidate_lines(path)
    # distance of each node to each candidate line: (n_cand, M+1)
    lines = y0[:, None, :] + v[:, None, :] * t[None, :, None]
    dist = np.sqrt(np.sum((pos[None, :, :] - lines) ** 2, axis=-1))
    hit = (dist <= r).astype(float)
    # continuum trapezoid of the (piecewise-linear) indicator over each
    # window [t_start, t_start + eps]; exact length eps, so a fully hit
    # window measures exactly eps.
    best = 0.0
    m = len(t)
    n_starts = max(1, m - w_nodes - (1 if frac > 1e-12 else 0))
    for start in range(n_starts):
        seg = hit[:, start:start + w_nodes + 1]
        meas = dt * (np.sum(seg, axis=1) - 0.5 * seg[:, 0] - 0.5 * seg[:, -1])
        if frac > 1e-12:
            tail = hit[:, start + w_nodes:start + w_nodes + 2]
            left = tail[:, 0]
            right = left + (tail[:, 1] - left) * (frac / dt)
            meas = meas + 0.5 * frac * (left + right)
        best = max(best, float(np.max(meas)))
    return best


def local_time_energy(path: PathSample, beta: float) -> float:
    """Double Riemann sum of dt^2 / dist^beta over graph points (t, gamma(t))
    with t in [0, 1) (the unit-time window)."""
    if not beta > 0:
        raise PathError("beta must be positive")
    mask = path.times < 1.0 - 1e-12
    t = path.times[mask]
    pos = path.positions[mask]
    dt = path.dt
    pts = np.hstack([t[:, None], pos])
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=-1))
    np.fill_diagonal(dist, 1.0)
    s = np.sum(dist ** (-beta)) - len(t)  # remove the i == j placeholder
    return float(dt * dt * s)


# ---------------------------------------------------------------------------
# CSV persistence
# ---------------------------------------------------------------------------

def save_path_csv(path: PathSample, filename) -> None:
    with open(filename, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"x{j + 1}" for j in range(path.dim)])
        for t, p in zip(path.times, path.positions):
            writer.writerow([repr(float(t))] + [repr(float(c)) for c in p])


def load_path_csv(filename, kind: str = "imported") -> PathSample:
    with open(filename, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    dim = len(header) - 1
    times = np.array([float(r[0]) for r in body])
    pos = np.array([[float(c) for c in r[1:]] for r in body]).reshape(-1, dim)
    return PathSample(times, pos, kind)
