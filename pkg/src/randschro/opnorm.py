"""Discretized space-time operators S(gamma) / T(gamma), power-iteration
norm estimation, time-block decomposition and restricted-norm growth.

The kernel is S(t, s) = V2 exp(i(t-s)Delta) exp((gamma(t)-gamma(s)).grad) V1
applied by the left-endpoint rectangle rule in s (strictly causal: the
output at t_m only sees inputs at t_k < t_m).  Because the free flow and
the path translation are both Fourier multipliers, one application costs
O(M N^d) plus M FFTs via cumulative sums of unit-modulus phases.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import Grid, SpaceTimeField, k2_mesh, xi_mesh
from .paths import PathSample, make_piecewise_linear, separated_velocities
from .potentials import Potential


class LatticeMismatchError(ValueError):
    """Space-time field does not match the operator lattice."""


@dataclass
class NormEstimate:
    value: float
    gap: float
    converged: bool
    iterations: int

    def __float__(self):
        return self.value


@dataclass
class SpaceTimeOperator:
    """S(gamma) on the lattice {0, dt, ..., horizon} x grid."""

    pot: Potential
    path: PathSample
    alpha: float
    dt: float
    horizon: float
    _phases: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.horizon > self.path.horizon + 1e-9:
            raise ValueError("operator horizon exceeds the path horizon")
        steps = int(round(self.horizon / self.dt))
        self.times = np.linspace(0.0, self.horizon, steps + 1)
        g = self.grid
        k2 = k2_mesh(g)
        xi = xi_mesh(g)
        shifts = self.alpha * self.path.at(self.times)
        # P_m = exp(-i k2 t_m + i xi . shift_m); kernel phase (m,k) = P_m conj(P_k)
        self._phases = np.empty((len(self.times),) + g.shape, dtype=complex)
        for m, t in enumerate(self.times):
            self._phases[m] = np.exp(
                -1j * k2 * t + 1j * np.sum(xi * shifts[m], axis=-1)
            )

    @property
    def grid(self) -> Grid:
        return self.pot.grid

    @property
    def n_nodes(self) -> int:
        return len(self.times)

    def _check(self, F: SpaceTimeField):
        if F.grid != self.grid or len(F.times) != self.n_nodes or \
                not np.allclose(F.times, self.times, atol=1e-12):
            raise LatticeMismatchError("field lattice does not match operator")

    def zero_field(self) -> SpaceTimeField:
        return SpaceTimeField(
            self.grid, self.times,
            np.zeros((self.n_nodes,) + self.grid.shape, dtype=complex),
        )


def apply_S(op: SpaceTimeOperator, F: SpaceTimeField) -> SpaceTimeField:
    """(SF)(t_m) = dt * sum_{k<m} V2 U(t_m - t_k) Tr_{mk} (V1 F(t_k))."""
    op._check(F)
    g = op.grid
    v1, v2 = op.pot.v1, op.pot.v2
    out = np.zeros_like(F.values, dtype=complex)
    acc = np.zeros(g.shape, dtype=complex)
    for m in range(op.n_nodes):
        if m > 0:
            acc = acc + np.conj(op._phases[m - 1]) * np.fft.fftn(v1 * F.values[m - 1])
            out[m] = op.dt * v2 * np.fft.ifftn(op._phases[m] * acc)
    return SpaceTimeField(g, op.times, out)


def apply_S_adjoint(op: SpaceTimeOperator, G: SpaceTimeField) -> SpaceTimeField:
    """Adjoint in the uniformly weighted space-time L^2 inner product."""
    op._check(G)
    g = op.grid
    v1, v2 = op.pot.v1, op.pot.v2
    out = np.zeros_like(G.values, dtype=complex)
    acc = np.zeros(g.shape, dtype=complex)
    for k in range(op.n_nodes - 1, -1, -1):
        if k < op.n_nodes - 1:
            acc = acc + np.conj(op._phases[k + 1]) * np.fft.fftn(v2 * G.values[k + 1])
        out[k] = op.dt * v1 * np.fft.ifftn(op._phases[k] * acc)
    return SpaceTimeField(g, op.times, out)


def _st_norm(op: SpaceTimeOperator, values: np.ndarray) -> float:
    w = op.dt * op.grid.cell_volume
    return float(np.sqrt(np.sum(np.abs(values) ** 2) * w))


def _power_iteration(op: SpaceTimeOperator, forward, adjoint, iters: int,
                     seed: int, tol: float = 1e-10) -> NormEstimate:
    """Dominant singular value of the (possibly windowed) operator."""
    if iters < 10:
        raise ValueError("power iteration needs at least 10 iterations")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    shape = (op.n_nodes,) + op.grid.shape
    v = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    nv = _st_norm(op, v)
    v /= nv
    sigma_old, gap = 0.0, np.inf
    it = 0
    for it in range(1, iters + 1):
        w = forward(SpaceTimeField(op.grid, op.times, v)).values
        u = adjoint(SpaceTimeField(op.grid, op.times, w)).values
        lam = _st_norm(op, u)
        sigma = float(np.sqrt(lam))
        if lam == 0.0:
            return NormEstimate(0.0, 0.0, True, it)
        gap = abs(sigma - sigma_old) / max(sigma, 1e-300)
        if gap < tol:
            return NormEstimate(sigma, gap, True, it)
        sigma_old = sigma
        v = u / lam
    return NormEstimate(sigma, gap, False, it)


def estimate_norm(op: SpaceTimeOperator, iters: int = 200,
                  seed: int = 0, tol: float = 1e-10) -> NormEstimate:
    """||S|| by power iteration on S*S from a seeded random start."""
    return _power_iteration(
        op,
        lambda F: apply_S(op, F),
        lambda G: apply_S_adjoint(op, G),
        iters, seed, tol,
    )


def _window_mask(op: SpaceTimeOperator, n: int, j: int) -> np.ndarray:
    """Indicator of times in [(j-1)/n, j/n] * horizon (last block closed)."""
    lo = (j - 1) / n * op.horizon
    hi = j / n * op.horizon
    t = op.times
    mask = (t >= lo - 1e-12) & ((t < hi - 1e-12) | (j == n) & (t <= hi + 1e-12))
    return mask.astype(float)


def block_norm(op: SpaceTimeOperator, n: int, j: int, k: int,
               iters: int = 200, seed: int = 0) -> NormEstimate:
    """Norm of T_jk = chi_j S chi_k for time blocks 1 <= k <= j <= n.

    Blocks with k > j vanish by causality and return exactly zero.
    """
    if not (1 <= j <= n and 1 <= k <= n):
        raise ValueError("block indices must lie in 1..n")
    if k > j:
        return NormEstimate(0.0, 0.0, True, 0)
    min_ = _window_mask(op, n, k).reshape((-1,) + (1,) * op.grid.dim)
    mout = _window_mask(op, n, j).reshape((-1,) + (1,) * op.grid.dim)

    def fwd(F):
        masked = SpaceTimeField(op.grid, op.times, F.values * min_)
        out = apply_S(op, masked)
        return SpaceTimeField(op.grid, op.times, out.values * mout)

    def adj(G):
        masked = SpaceTimeField(op.grid, op.times, G.values * mout)
        out = apply_S_adjoint(op, masked)
        return SpaceTimeField(op.grid, op.times, out.values * min_)

    return _power_iteration(op, fwd, adj, iters, seed)


def dense_matrix(op: SpaceTimeOperator, max_size: int = 4096) -> np.ndarray:
    """Materialize S as a dense matrix (oracle for small lattices).

    Uniform quadrature weights mean the L^2 operator norm equals the plain
    matrix 2-norm of this array.
    """
    size = op.n_nodes * op.grid.n**op.grid.dim
    if size > max_size:
        raise ValueError(f"lattice too large to materialize ({size} > {max_size})")
    cols = []
    for idx in range(size):
        e = np.zeros(size)
        e[idx] = 1.0
        F = SpaceTimeField(op.grid, op.times,
                           e.reshape((op.n_nodes,) + op.grid.shape).astype(complex))
        cols.append(apply_S(op, F).values.reshape(-1))
    return np.array(cols).T


def separated_linear_norm(pot: Potential, n: int, alpha: float, dt: float,
                          iters: int = 200, seed: int = 0) -> NormEstimate:
    """||S(gamma_0)|| for the velocity-separated piecewise-linear family
    (|v_j - v_k| > n^2 pairwise)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    vel = separated_velocities(n, pot.grid.dim)
    steps_per_piece = max(2, int(round(1.0 / (n * dt))))
    path = make_piecewise_linear(n, vel, steps_per_piece=steps_per_piece)
    op = SpaceTimeOperator(pot, path, alpha, dt, 1.0)
    return estimate_norm(op, iters=iters, seed=seed)


def restricted_norm_growth(pot: Potential, path: PathSample, alpha: float,
                           horizons, dt: float, iters: int = 300,
                           seed: int = 0) -> list:
    """||T_R|| for increasing horizons R; nondecreasing by restriction."""
    horizons = list(horizons)
    if any(b <= a for a, b in zip(horizons, horizons[1:])):
        raise ValueError("horizons must be strictly increasing")
    out = []
    for r in horizons:
        op = SpaceTimeOperator(pot, path, alpha, dt, r)
        out.append(estimate_norm(op, iters=iters, seed=seed))
    return out


def norm_series_csv(rows, filename) -> None:
    """Rows of (parameter, NormEstimate) to CSV."""
    with open(filename, "w") as fh:
        fh.write("parameter,norm_estimate,convergence_gap\n")
        for param, est in rows:
            fh.write(f"{param!r},{est.value!r},{est.gap!r}\n")
