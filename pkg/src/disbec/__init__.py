"""Ground states of a one-dimensional Bose gas among Poisson point scatterers.

Finite-difference and exact hard-wall Gross-Pitaevskii minimizers, mean-field
spectra with gap and depletion bounds, the grand-canonical mass-repartition
model and the sweep drivers built on them.
"""

from .discretize import INFINITE, Grid, assemble_potential, schrodinger_operator
from .disorder import DisorderSample, interval_statistics, largest_interval, sample_poisson
from .errors import ConvergenceError, DisbecError, DomainError, SolveTimeout, UsageError
from .gc_model import GcSolution, Phase, solve_mu
from .gp_solve import GpOptions, GpSolution, interval_gp, minimize_gp, solve_hard_wall
from .spectrum import (SpectrumResult, depletion_bound, gap_lower_bound, lowest_eigenpairs,
                       mean_field_hamiltonian)

__all__ = [
    "INFINITE", "Grid", "assemble_potential", "schrodinger_operator",
    "DisorderSample", "interval_statistics", "largest_interval", "sample_poisson",
    "ConvergenceError", "DisbecError", "DomainError", "SolveTimeout", "UsageError",
    "GcSolution", "Phase", "solve_mu",
    "GpOptions", "GpSolution", "interval_gp", "minimize_gp", "solve_hard_wall",
    "SpectrumResult", "depletion_bound", "gap_lower_bound", "lowest_eigenpairs",
    "mean_field_hamiltonian",
]

__version__ = "0.1.0"
