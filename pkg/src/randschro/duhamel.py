"""Born-series machinery on the Fourier side: path-wise Duhamel terms, the
heat-smoothing identity, the sesquilinear symbol W(xi1, xi2), the L/R
recursion over balanced words, and the geometric series majorant.

Symbol conventions.  Symbols live on the 1-d frequency lattice (dense
(N, N) storage).  The time phases entering the symbol calculus follow the
frame in which the denominator reads
    D = alpha^2 |xi1 - xi2|^2 - i (|xi1|^2 - |xi2|^2),
which is the complex conjugate of the solver's time direction; every norm
statement is invariant under this conjugation.  The infinite time integral
is truncated at T_cut, replacing 1/D by (1 - exp(-T_cut D))/D, which is
entire with the removable value T_cut on the diagonal D = 0.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .grid import (ComplexField, Grid, TWO_PI, fourier_coefficients,
                   free_propagate, heat_propagate, translation_phase,
                   k2_mesh)
from .paths import PathSample, sample_brownian
from .potentials import Potential

BORN_ORDER_CAP = 4
SYMBOL_MAGIC = b"RSYM"


class SymbolGridError(ValueError):
    """Symbol operations restricted to small 1-d grids."""


class BornOrderError(ValueError):
    """Requested Born order above the configured cap."""


@dataclass
class SymbolMatrix:
    """Discretized sesquilinear-form kernel W(xi1, xi2) on the 1-d frequency
    lattice (FFT index order on both axes)."""

    grid: Grid
    entries: np.ndarray  # (N, N) complex, axis 0 = xi1, axis 1 = xi2
    alpha: float
    t_cut: float

    def __post_init__(self):
        if self.grid.dim != 1:
            raise SymbolGridError("symbol matrices are 1-d only")
        if self.entries.shape != (self.grid.n, self.grid.n):
            raise SymbolGridError("entries shape must be (N, N)")
        if not self.t_cut > 0:
            raise ValueError("t_cut must be positive")


def _check_symbol_grid(grid: Grid):
    if grid.dim != 1:
        raise SymbolGridError("symbol calculus supports d = 1 grids only")
    if grid.n > 128:
        raise SymbolGridError("symbol storage capped at N = 128")


def _denominator(grid: Grid, alpha: float) -> np.ndarray:
    xi = grid.xi_axis
    x1 = xi[:, None]
    x2 = xi[None, :]
    return alpha**2 * (x1 - x2) ** 2 - 1j * (x1**2 - x2**2)


def _reg_reciprocal(den: np.ndarray, t_cut: float) -> np.ndarray:
    """(1 - exp(-T_cut D)) / D with the removable limit T_cut at D = 0."""
    out = np.full(den.shape, complex(t_cut))
    nz = den != 0
    out[nz] = (1.0 - np.exp(-t_cut * den[nz])) / den[nz]
    return out


def potential_hat(pot_values: np.ndarray, grid: Grid) -> np.ndarray:
    """Continuum-normalized transform of a potential field (FFT order)."""
    return fourier_coefficients(ComplexField(grid, pot_values.astype(complex)))


def w_symbol(pot: Potential, alpha: float, t_cut: float) -> SymbolMatrix:
    """Base symbol: Vhat(xi2 - xi1) times the regularized reciprocal of D,
    built from |V|.  Diagonal entries equal T_cut * Vhat(0)."""
    g = pot.grid
    _check_symbol_grid(g)
    if not t_cut > 0:
        raise ValueError("t_cut must be positive")
    vhat = potential_hat(np.abs(pot.v), g)
    n = g.n
    k = np.arange(n)
    diff_idx = (k[None, :] - k[:, None]) % n  # index of xi2 - xi1
    entries = vhat[diff_idx] * _reg_reciprocal(_denominator(g, alpha), t_cut)
    return SymbolMatrix(g, entries, alpha, t_cut)


def delta_symbol(grid: Grid, alpha: float, t_cut: float) -> SymbolMatrix:
    """The identity form <f, g>: a Dirac delta on the diagonal with entries
    2pi/(frequency cell), so eval_form(delta, f, g) = <f, g> exactly and the
    letter quadrature collapses it to the base symbol."""
    _check_symbol_grid(grid)
    entries = np.zeros((grid.n, grid.n), dtype=complex)
    np.fill_diagonal(entries, TWO_PI / grid.freq_cell_volume)
    return SymbolMatrix(grid, entries, alpha, t_cut)


def _apply_letter(w: SymbolMatrix, pot: Potential, side: str) -> SymbolMatrix:
    g = w.grid
    if pot.grid != g:
        raise SymbolGridError("symbol and potential grids differ")
    n = g.n
    deta = g.freq_cell_volume
    acc = np.zeros((n, n), dtype=complex)
    if side == "L":
        vhat = potential_hat(pot.v, g)
        for eta in range(n):
            if vhat[eta] != 0:
                acc += np.roll(w.entries, -eta, axis=0) * vhat[eta]
    else:
        vbar_hat = potential_hat(np.conj(pot.v.astype(complex)).real, g)
        for eta in range(n):
            if vbar_hat[eta] != 0:
                acc += np.roll(w.entries, eta, axis=1) * vbar_hat[eta]
    acc *= deta / TWO_PI
    acc *= _reg_reciprocal(_denominator(g, w.alpha), w.t_cut)
    return SymbolMatrix(g, acc, w.alpha, w.t_cut)


def apply_LV(w: SymbolMatrix, pot: Potential) -> SymbolMatrix:
    """W'(xi1, xi2) = [ (2pi)^-1 sum_eta W(xi1 + eta, xi2) Vhat(eta) deta ]
    times the regularized reciprocal denominator."""
    return _apply_letter(w, pot, "L")


def apply_RV(w: SymbolMatrix, pot: Potential) -> SymbolMatrix:
    """Mirror of apply_LV acting on the second frequency argument with the
    transform of conj(V)."""
    return _apply_letter(w, pot, "R")


def eval_form(w: SymbolMatrix, f: ComplexField, g: ComplexField) -> complex:
    """Evaluate the sesquilinear form: (2pi)^-2 iint W fhat(xi1)
    conj(ghat(xi2)); eval_form(delta_symbol, f, g) = <f, g>."""
    fh = fourier_coefficients(f)
    gh = fourier_coefficients(g)
    deta = w.grid.freq_cell_volume
    return complex(fh @ w.entries @ np.conj(gh)) * deta**2 / TWO_PI**2


def apply_word(word, base: SymbolMatrix, pot: Potential) -> SymbolMatrix:
    """Compose apply_LV / apply_RV letters (applied left to right)."""
    w = base
    for letter in word:
        w = _apply_letter(w, pot, letter)
    return w


def enumerate_words(n: int) -> list:
    """All balanced words over {L, R} of length 2(n-2) with equal counts.

    Their number is binomial(2n-4, n-2); words are returned in a fixed
    lexicographic-position order for deterministic summation.
    """
    if n < 2:
        raise ValueError("word enumeration starts at order n = 2")
    half = n - 2
    length = 2 * half
    words = []
    for pos in combinations(range(length), half):
        letters = ["R"] * length
        for p in pos:
            letters[p] = "L"
        words.append("".join(letters))
    return words


# ---------------------------------------------------------------------------
# Path-wise Born terms
# ---------------------------------------------------------------------------

def born_term(n: int, z0: ComplexField, pot: Potential, path: PathSample,
              alpha: float, dt: float, t_final: float | None = None,
              max_order: int = BORN_ORDER_CAP):
    """n-th iterated Duhamel integral, evaluated path-wise on the time
    lattice by the left-endpoint rectangle rule.

    Term 0 is the free evolution; each insertion carries the factor
    -i V(x - alpha*gamma(s)) of the solver's convention.  Returns a
    SpaceTimeField on the lattice {0, dt, ..., T}.
    """
    from .grid import SpaceTimeField  # local import to avoid cycle noise

    if n < 0:
        raise ValueError("order must be nonnegative")
    if n > max_order:
        raise BornOrderError(f"Born order {n} above cap {max_order}")
    if t_final is None:
        t_final = path.horizon
    g = z0.grid
    steps = int(round(t_final / dt))
    times = np.linspace(0.0, t_final, steps + 1)
    k2 = k2_mesh(g)
    shifts = alpha * path.at(times)
    vhat = np.fft.fftn(pot.v)
    v_at = [np.fft.ifftn(vhat * translation_phase(g, -shifts[m])).real
            for m in range(steps + 1)]
    z0hat = np.fft.fftn(z0.values.astype(complex))
    # order 0: free evolution
    current = np.array([np.fft.ifftn(np.exp(-1j * k2 * t) * z0hat)
                        for t in times])
    for _ in range(n):
        nxt = np.zeros_like(current)
        acc = np.zeros(g.shape, dtype=complex)  # running sum in Fourier
        for m in range(1, steps + 1):
            j = m - 1
            contrib = np.fft.fftn(v_at[j] * current[j])
            acc = acc + contrib * np.exp(1j * k2 * times[j])
            nxt[m] = -1j * dt * np.fft.ifftn(np.exp(-1j * k2 * times[m]) * acc)
        current = nxt
    return SpaceTimeField(g, times, current)


def born_partial_sum(n: int, z0: ComplexField, pot: Potential,
                     path: PathSample, alpha: float, dt: float,
                     t_final: float | None = None):
    """Sum of Born terms of orders 0..n."""
    from .grid import SpaceTimeField

    total = None
    for k in range(n + 1):
        term = born_term(k, z0, pot, path, alpha, dt, t_final)
        total = term.values if total is None else total + term.values
        times, grid = term.times, term.grid
    return SpaceTimeField(grid, times, total)


# ---------------------------------------------------------------------------
# Heat smoothing and series bounds
# ---------------------------------------------------------------------------

def heat_smoothing_check(pot: Potential, alpha: float, s: float,
                         n_paths: int, seed: int = 0) -> float:
    """Relative L^2 error between the Monte Carlo average of
    |V|(x - alpha B_s) and the heat semigroup applied to |V|.

    With the variance-t Brownian normalization used by the samplers, the
    exact identity is E |V|(x - alpha B_s) = exp((alpha^2 s / 2) Delta) |V|.
    """
    if not s > 0:
        raise ValueError("s must be positive")
    if n_paths < 100:
        raise ValueError("need at least 100 sample paths")
    g = pot.grid
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    vabs = np.abs(pot.v)
    vhat = np.fft.fftn(vabs)
    xi = g.xi_axis
    mean_phase = np.zeros(g.shape, dtype=complex)
    chunk = 2048
    done = 0
    while done < n_paths:
        take = min(chunk, n_paths - done)
        b = rng.normal(0.0, math.sqrt(s), size=(take, g.dim))
        shift = alpha * b
        if g.dim == 1:
            mean_phase += np.sum(np.exp(-1j * np.outer(shift[:, 0], xi)), axis=0)
        else:
            for row in shift:
                mean_phase += translation_phase(g, -row)
        done += take
    mean_phase /= n_paths
    mc = np.fft.ifftn(vhat * mean_phase).real
    target = heat_propagate(ComplexField(g, vabs.astype(complex)),
                            0.5 * alpha**2 * s).values.real
    num = np.sqrt(np.sum((mc - target) ** 2))
    den = np.sqrt(np.sum(target**2))
    return float(num / den)


def series_majorant(n: int, alpha: float, v_norm: float, c: float = 1.0) -> dict:
    """Geometric majorant sum_{k=1}^{n} (4c)^k alpha^{-4k} v_norm^{2k} and the
    convergence threshold alpha* = (4c)^{1/4} sqrt(v_norm)."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    ks = np.arange(1, n + 1)
    terms = (4.0 * c) ** ks * alpha ** (-4.0 * ks) * v_norm ** (2.0 * ks)
    threshold = (4.0 * c) ** 0.25 * math.sqrt(v_norm)
    return {
        "terms": terms,
        "sum": float(np.sum(terms)),
        "alpha_star": threshold,
        "diverged": bool(alpha <= threshold),
    }


def mc_series_bound(pot: Potential, alpha: float, z0: ComplexField,
                    dt: float = 0.01, t_final: float = 1.0,
                    n_paths: int = 8, path_steps: int = 200,
                    seed: int = 0) -> dict:
    """Monte Carlo estimate of E || |V|^{1/2}(x - alpha B_t) Z ||^2 over
    L^2_{t,x}, with the fitted constant of the first majorant term."""
    from .evolve import evolve

    g = pot.grid
    w = g.cell_volume
    totals = []
    for k in range(n_paths):
        sub = np.random.SeedSequence(seed, spawn_key=(k,))
        path_seed = int(sub.generate_state(1, np.uint64)[0])
        path = sample_brownian(path_seed, path_steps, t_final, g.dim)
        traj = evolve(z0, pot, path, alpha, dt, t_final)
        per_node = []
        vhat = np.fft.fftn(pot.v)
        for m, t in enumerate(traj.times):
            shift = alpha * path.at(t)
            vs = np.fft.ifftn(vhat * translation_phase(g, -shift)).real
            per_node.append(np.sum(np.abs(vs) * np.abs(traj.field.values[m]) ** 2) * w)
        totals.append(float(np.trapezoid(per_node, traj.times)))
    mean = float(np.mean(totals))
    v_norm = pot.norms["l32_1"]
    fitted_c = mean * alpha**4 / (4.0 * v_norm**2) if v_norm > 0 else 0.0
    return {"mean": mean, "fitted_c": fitted_c, "samples": totals}


# ---------------------------------------------------------------------------
# Binary persistence
# ---------------------------------------------------------------------------

def save_symbol(w: SymbolMatrix, filename) -> None:
    """Binary dump: magic, N, dim, alpha, t_cut header + raw complex128."""
    with open(filename, "wb") as fh:
        fh.write(SYMBOL_MAGIC)
        fh.write(struct.pack("<iiddd", w.grid.n, w.grid.dim, w.grid.length,
                             w.alpha, w.t_cut))
        fh.write(np.ascontiguousarray(w.entries, dtype=np.complex128).tobytes())


def load_symbol(filename) -> SymbolMatrix:
    with open(filename, "rb") as fh:
        magic = fh.read(4)
        if magic != SYMBOL_MAGIC:
            raise ValueError("not a symbol file")
        header = fh.read(struct.calcsize("<iiddd"))
        n, dim, length, alpha, t_cut = struct.unpack("<iiddd", header)
        data = np.frombuffer(fh.read(), dtype=np.complex128).reshape(n, n)
    return SymbolMatrix(Grid(dim, n, length), data.copy(), alpha, t_cut)
