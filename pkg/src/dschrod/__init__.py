"""Schroedinger equations with distributional potentials.

Spectral parameter power series, Neumann series of Bessel functions and
transmutation kernels built on a non-vanishing particular solution.
"""

from .nonvanishing import NonvanishingSolution, build_f, dirac_spps, select_constants
from .nsbf import (
    NsbfCoeffs,
    NsbfSolver,
    coeffs_direct,
    coeffs_recursive,
    impedance_kernel_values,
    kernel_reconstruct,
    nsbf_eval,
    reflected_solutions,
)
from .numerics import Grid, LegendreBasis, PiecewiseFn, cumulative_integral, legendre_eval, spherical_bessel
from .potential import PotentialSpec, assemble_sigma
from .powers import FormalPowerTable, formal_powers, recursive_integrals
from .solutions import SolutionSample, cauchy_solve, spps_eval
from .spectral import BoundaryCondition, Eigenpair, SpectralProblem, characteristic, find_eigenvalues

__version__ = "0.1.0"
