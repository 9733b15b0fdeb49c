"""Entropy-maximising allocations: MRD on the real covariance, CVRD on the complex one."""
from __future__ import annotations

from typing import Optional

import numpy as np

from ..errors import ValidationError
from ..risk_models import HermitianCovariance, spectral_decomposition
from .constraints import ConstraintSet
from .entropy import EntropyObjective
from .optimizer import SolverOptions, maximize_entropy_on_simplex
from .weights import WeightVector


def canonical_order(cov: HermitianCovariance) -> np.ndarray:
    """Asset ranking that moves with the assets under relabelling.

    Sorted by variance, then by total absolute covariance; exact ties keep
    input order.
    """
    c = cov.matrix
    keys = (np.abs(c).sum(axis=1), np.diag(c).real)
    return np.lexsort(keys)


def _solve_entropy(cov: HermitianCovariance, constraints, opts) -> WeightVector:
    decomp = spectral_decomposition(cov)
    w, report = maximize_entropy_on_simplex(
        EntropyObjective(decomp), cov.size, constraints, opts, order=canonical_order(cov)
    )
    return WeightVector(w, cov.assets, report)


def solve_mrd(
    cov: HermitianCovariance,
    constraints: Optional[ConstraintSet] = None,
    opts: Optional[SolverOptions] = None,
) -> WeightVector:
    """Maximum risk diversification over the principal axes of a real covariance."""
    if cov.kind != "real":
        raise ValidationError("solve_mrd expects a real covariance; use solve_cvrd")
    return _solve_entropy(cov, constraints, opts)


def solve_cvrd(
    ccov: HermitianCovariance,
    constraints: Optional[ConstraintSet] = None,
    opts: Optional[SolverOptions] = None,
) -> WeightVector:
    """Maximum eigen-contribution entropy under the complex covariance of analytic signals.

    Weights stay real; they are rotated by the complex eigenvector basis and
    each axis contributes ``lambda_m |(U w)_m|^2``.
    """
    if ccov.kind != "complex":
        raise ValidationError("solve_cvrd expects a complex covariance")
    return _solve_entropy(ccov, constraints, opts)
