"""Fluctuations of Wigner-matrix spectra along time and nested corners.

Exact and numerical covariance formulas for linear eigenvalue statistics of
principal submatrices of time-dependent Wigner matrices, the limiting
Gaussian-field kernel, and a reproducible Monte Carlo harness to test them.
"""
__version__ = "0.1.0"

from .entry_process import Constant, EntryProcessSpec, OrnsteinUhlenbeck, TableInterpolated
from .errors import ConfigError, DysonCLTError, NumericalError
from .montecarlo import ExperimentConfig, ObservableSpec, compare, estimate_cumulants, run_experiment
from .theory import covariance_series, observable_covariance
from .wigner import IndexSet, sample_ensemble, submatrix

__all__ = [
    "Constant", "EntryProcessSpec", "OrnsteinUhlenbeck", "TableInterpolated",
    "ConfigError", "DysonCLTError", "NumericalError",
    "ExperimentConfig", "ObservableSpec", "compare", "estimate_cumulants", "run_experiment",
    "covariance_series", "observable_covariance",
    "IndexSet", "sample_ensemble", "submatrix",
]
