"""
tfwave_core: numerical library for semilinear stochastic time-tempered
fractional wave equations on an interval.

Modules:
    special: Gamma and two-parameter Mittag-Leffler functions
    calculus: Riemann-Liouville and Caputo (tempered) operators on grids
    model: Dirichlet eigenbasis, nonlinearities, noise coefficients, ModelSpec
    noise: Brownian and fractional Brownian mode increments
    kernels: Mild-solution kernels and memoised kernel tables
    solver: Regularized spectral solver and exact linear reference
    fem: Piecewise-linear Galerkin space with spectral fractional stiffness
    experiments: Monte-Carlo error studies and probes
"""

from .experiments import (
    ErrorReport,
    fem_error_study,
    fit_rate,
    holder_probe,
    modeling_error_study,
    ms_error,
    regularity_probe,
    stability_probe,
    total_error_study,
)
from .fem import FemSpace, build_space, solve_fem
from .model import CoeffSequences, ModelSpec, NonlinearitySpec, SequenceRule
from .noise import NoisePath, sample_path
from .solver import ModalTrajectory, exact_linear, solve_regularized
from .special import MlfParams, gamma, ml

__version__ = "1.0.0"
__author__ = "MKM Lab"
__all__ = [
    "CoeffSequences",
    "ErrorReport",
    "FemSpace",
    "MlfParams",
    "ModalTrajectory",
    "ModelSpec",
    "NoisePath",
    "NonlinearitySpec",
    "SequenceRule",
    "build_space",
    "exact_linear",
    "fem_error_study",
    "fit_rate",
    "gamma",
    "holder_probe",
    "ml",
    "modeling_error_study",
    "ms_error",
    "regularity_probe",
    "sample_path",
    "solve_fem",
    "solve_regularized",
    "stability_probe",
    "total_error_study",
]
