"""Numerical laboratory for beta ensembles (log-gases).

Equilibrium measures, samplers, Dyson Brownian motion, the stochastic Airy
operator, edge statistics and two discrete Sobolev-type constants, tied
together by a config-driven CLI (``loggas``).
"""
__version__ = "0.1.0"

from .errors import (ChainStalled, ConfigError, DomainError, LoggasError, NotOneCut, NumericFailure,
                     OptimFailed, SolveDiverged, StepCollapse, StepTooLarge)
from .potentials import Potential, check_assumptions, eval_potential, polynomial, quadratic
from .equilibrium import EquilibriumMeasure, classical_locations, solve_equilibrium
from .samplers import SampleArchive, sample_loggas_mala, tridiag_archive

__all__ = [
    "__version__", "ChainStalled", "ConfigError", "DomainError", "LoggasError", "NotOneCut",
    "NumericFailure", "OptimFailed", "SolveDiverged", "StepCollapse", "StepTooLarge", "Potential",
    "check_assumptions", "eval_potential", "polynomial", "quadratic", "EquilibriumMeasure",
    "classical_locations", "solve_equilibrium", "SampleArchive", "sample_loggas_mala", "tridiag_archive",
]
