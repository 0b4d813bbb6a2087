"""Spectral simulator and operator toolbox for a Schrodinger equation
whose potential is translated along a random (Brownian-type) path.

Modules
-------
grid        periodic-box fields, Fourier propagators, Lorentz/Strichartz norms
paths       Brownian / fractional-Brownian / piecewise-linear path samplers
potentials  potential shapes, norms, imaginary-time ground states
evolve      split-step interacting evolution and its observables
duhamel     Born-series terms, frequency-side symbol calculus, series bounds
opnorm      finite-horizon space-time operator, norms, block decompositions
experiments Monte Carlo sweeps, slope fits, record persistence
cli         command-line entry point
"""

from .grid import ComplexField, Grid, SpaceTimeField, gaussian_packet
from .paths import PathSample, sample_brownian, sample_fbm
from .potentials import Potential, ground_state, make_potential
from .evolve import Trajectory, evolve
from .opnorm import NormEstimate, SpaceTimeOperator, estimate_norm

__version__ = "0.1.0"

__all__ = [
    "ComplexField",
    "Grid",
    "NormEstimate",
    "PathSample",
    "Potential",
    "SpaceTimeField",
    "SpaceTimeOperator",
    "Trajectory",
    "estimate_norm",
    "evolve",
    "gaussian_packet",
    "ground_state",
    "make_potential",
    "sample_brownian",
    "sample_fbm",
    "__version__",
]
