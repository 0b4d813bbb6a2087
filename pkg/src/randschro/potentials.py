"""Test potentials, the V = V1 V2 factorization, Lorentz-norm metadata and
bound-state computation by imaginary-time propagation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import (ComplexField, Grid, k2_mesh, lorentz_norm, lp_norm,
                   x_mesh)

KINDS = ("gaussian_well", "compact_bump", "zero")


class PotentialConfigError(ValueError):
    """Potential does not fit the box with the required margin."""


class NoBoundStateError(RuntimeError):
    """Imaginary-time iteration found no negative-energy state."""


@dataclass
class Potential:
    """Real potential field with its factorization V = V1 V2.

    V1 = |V|^{1/2} >= 0 and V2 = |V|^{1/2} sgn V, so |V2| = V1 pointwise.
    """

    grid: Grid
    v: np.ndarray
    kind: str
    depth: float
    width: float
    center: np.ndarray
    v1: np.ndarray = field(init=False)
    v2: np.ndarray = field(init=False)
    _norms: dict = field(init=False, default_factory=dict)

    def __post_init__(self):
        self.v = np.asarray(self.v, dtype=float)
        self.v1 = np.sqrt(np.abs(self.v))
        self.v2 = self.v1 * np.sign(self.v)

    @property
    def norms(self) -> dict:
        if not self._norms:
            self._norms.update(potential_norms(self))
        return self._norms

    def as_field(self) -> ComplexField:
        return ComplexField(self.grid, self.v.astype(complex))

    def abs_field(self) -> ComplexField:
        return ComplexField(self.grid, np.abs(self.v).astype(complex))


def _support_radius(kind: str, width: float) -> float:
    # gaussians are treated as supported within 4 widths at box scale
    return width if kind == "compact_bump" else 4.0 * width


def make_potential(kind: str, depth: float, width: float, grid: Grid,
                   center=None) -> Potential:
    """Construct a test potential; negative depth parameters make wells."""
    if kind not in KINDS:
        raise PotentialConfigError(
            f"unknown potential kind {kind!r}; choose from {KINDS}")
    if not width > 0:
        raise PotentialConfigError("width must be positive")
    c = np.zeros(grid.dim) if center is None else np.asarray(center, dtype=float)
    if kind != "zero":
        reach = np.max(np.abs(c)) + _support_radius(kind, width) + 2.0 * width
        if reach > 0.5 * grid.length:
            raise PotentialConfigError(
                f"support radius plus 2*width margin ({reach:.3g}) exceeds "
                f"half the box length ({0.5 * grid.length:.3g})"
            )
    x = x_mesh(grid)
    r2 = np.sum((x - c) ** 2, axis=-1)
    if kind == "zero":
        v = np.zeros(grid.shape)
    elif kind == "gaussian_well":
        v = -depth * np.exp(-r2 / width**2)
    else:  # compact_bump, normalized so the minimum value is -depth
        rho2 = r2 / width**2
        v = np.zeros(grid.shape)
        inside = rho2 < 1.0
        v[inside] = -depth * np.e * np.exp(-1.0 / (1.0 - rho2[inside]))
    return Potential(grid, v, kind, depth, width, c)


def potential_norms(pot: Potential) -> dict:
    """Lorentz norms used by the dispersive estimates, plus the sup norm."""
    f = pot.as_field()
    if np.all(pot.v == 0):
        return {"l32_1": 0.0, "l32_inf": 0.0, "linf": 0.0}
    return {
        "l32_1": lorentz_norm(f, 1.5, 1.0),
        "l32_inf": lorentz_norm(f, 1.5, np.inf),
        "linf": lp_norm(f, np.inf),
    }


def ground_state(pot: Potential, tol: float = 1e-10, dtau: float = 0.02,
                 max_iter: int = 50000) -> tuple:
    """Ground state of -Delta + V by imaginary-time Strang propagation.

    Renormalizes every step and stops when the Rayleigh quotient changes by
    less than tol (relatively).  Raises NoBoundStateError when the converged
    energy is nonnegative.
    """
    g = pot.grid
    k2 = k2_mesh(g)
    kin = np.exp(-k2 * dtau)
    pot_half = np.exp(-0.5 * dtau * pot.v)
    rng = np.random.default_rng(0)
    # start from a positive bump plus a little noise to avoid symmetry traps
    psi = np.exp(-np.sum(x_mesh(g) ** 2, axis=-1) / (2.0 * pot.width**2))
    psi = psi + 1e-3 * rng.standard_normal(g.shape)
    psi /= np.sqrt(np.sum(np.abs(psi) ** 2) * g.cell_volume)
    energy_old = np.inf
    w = g.cell_volume
    scale = w / g.n**g.dim
    for _ in range(max_iter):
        psi = pot_half * psi
        psi = np.fft.ifftn(kin * np.fft.fftn(psi)).real
        psi = pot_half * psi
        psi /= np.sqrt(np.sum(psi**2) * w)
        hat = np.fft.fftn(psi)
        energy = float(np.sum(k2 * np.abs(hat) ** 2) * scale
                       + np.sum(pot.v * psi**2) * w)
        if abs(energy - energy_old) < tol * max(1.0, abs(energy)):
            break
        energy_old = energy
    else:
        raise NoBoundStateError("imaginary-time iteration did not converge")
    if energy >= 0:
        raise NoBoundStateError(
            f"no bound state found (E0 = {energy:.3g} >= 0); deepen the well"
        )
    return ComplexField(g, psi.astype(complex)), energy


def hamiltonian_dense(pot: Potential) -> np.ndarray:
    """Dense spectral Hamiltonian -Delta + V; oracle for small 1-d grids."""
    g = pot.grid
    if g.dim != 1:
        raise ValueError("dense Hamiltonian oracle is 1-d only")
    n = g.n
    F = np.fft.fft(np.eye(n), axis=0)
    Finv = np.fft.ifft(np.eye(n), axis=0)
    kinetic = (Finv @ (k2_mesh(g)[:, None] * F)).real
    return kinetic + np.diag(pot.v)


def save_potential_csv(pot: Potential, filename) -> None:
    """Grid samples in long format: one row per node, columns x1..xd, V."""
    x = x_mesh(pot.grid).reshape(-1, pot.grid.dim)
    v = pot.v.reshape(-1)
    with open(filename, "w") as fh:
        fh.write(",".join([f"x{j + 1}" for j in range(pot.grid.dim)] + ["V"]) + "\n")
        for row, val in zip(x, v):
            fh.write(",".join(repr(c) for c in row) + f",{val!r}\n")
