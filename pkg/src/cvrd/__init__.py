"""Eigen-entropy portfolio allocation on analytic-signal covariances, with risk-parity and real-covariance baselines."""
from .market_data import PriceTable, ReturnMatrix, compute_returns, describe, load_price_table
from .spectral import analytic_matrix, analytic_signal, dft, discrete_hilbert, idft
from .risk_models import (
    HermitianCovariance,
    SpectralDecomposition,
    complex_covariance,
    sample_covariance,
    spectral_decomposition,
)
from .allocation import (
    ConstraintSet,
    SolverOptions,
    WeightVector,
    diversification_entropy,
    solve_cvrd,
    solve_mrd,
    solve_risk_parity,
)

__version__ = "0.1.0"

__all__ = [
    "ConstraintSet",
    "HermitianCovariance",
    "PriceTable",
    "ReturnMatrix",
    "SolverOptions",
    "SpectralDecomposition",
    "WeightVector",
    "analytic_matrix",
    "analytic_signal",
    "complex_covariance",
    "compute_returns",
    "describe",
    "dft",
    "discrete_hilbert",
    "diversification_entropy",
    "idft",
    "load_price_table",
    "sample_covariance",
    "solve_cvrd",
    "solve_mrd",
    "solve_risk_parity",
    "spectral_decomposition",
]
