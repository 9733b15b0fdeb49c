"""Portfolio variance, Euler risk contributions and the equal-risk-contribution solver."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from ..errors import DegeneratePortfolioError, NonConvergenceError, ValidationError
from ..risk_models import HermitianCovariance
from .constraints import ConstraintSet
from .optimizer import SolverOptions, SolverReport
from .weights import WeightVector

RP_TOLERANCE = 1e-8


@dataclass(frozen=True, eq=False)
class RiskContribution:
    sigma: float
    contributions: np.ndarray


def _real_matrix(cov) -> np.ndarray:
    if isinstance(cov, HermitianCovariance):
        if cov.kind != "real":
            raise ValidationError("expected a real covariance")
        return cov.matrix
    return np.asarray(cov, dtype=float)


def _weights(w) -> np.ndarray:
    return np.asarray(w.weights if isinstance(w, WeightVector) else w, dtype=float)


def portfolio_variance(w, cov) -> float:
    """``w^T Sigma w``."""
    w, s = _weights(w), _real_matrix(cov)
    if s.shape != (w.size, w.size):
        raise ValidationError(f"weights of length {w.size} vs covariance {s.shape}")
    return max(float(w @ s @ w), 0.0)


def risk_contributions(w, cov) -> RiskContribution:
    """``sigma_m = w_m (Sigma w)_m / sqrt(w^T Sigma w)``; these sum to ``sigma``."""
    w, s = _weights(w), _real_matrix(cov)
    var = portfolio_variance(w, s)
    if not var > 0:
        raise DegeneratePortfolioError("portfolio variance is zero")
    sigma = math.sqrt(var)
    return RiskContribution(sigma, w * (s @ w) / sigma)


def _rp_residual(w, s) -> float:
    rc = risk_contributions(w, s)
    return float(np.max(np.abs(rc.contributions - rc.sigma / w.size)) / rc.sigma)


def _erc_newton(s: np.ndarray, max_iter: int = 200):
    """Minimise ``y'Sy/2 - sum(log y)/M`` over ``y > 0``; the minimiser is ERC up to scale.

    Its first-order condition ``y_m (S y)_m = 1/M`` is exactly equal risk
    contribution, and the problem is strictly convex, so damped Newton
    converges quadratically.
    """
    m = s.shape[0]
    b = np.full(m, 1.0 / m)
    y = 1.0 / np.sqrt(np.diag(s))
    y *= math.sqrt(1.0 / float(y @ s @ y))

    def f(y):
        return 0.5 * float(y @ s @ y) - float(b @ np.log(y))

    fy = f(y)
    best_y, best_g = y, math.inf
    stale = 0
    local = False  # inside the quadratic-convergence region
    for it in range(1, max_iter + 1):
        g = s @ y - b / y
        gnorm = float(np.max(np.abs(g)))
        if gnorm < best_g:
            best_y, best_g, stale = y, gnorm, 0
        elif local:
            stale += 1
            if stale >= 3:
                break
        h = s + np.diag(b / y**2)
        step = np.linalg.solve(h, g)
        decrement = float(g @ step)
        if decrement <= 1e-32:
            break
        local = local or decrement <= 1e-8
        if not local:
            best_y, best_g = y, math.inf
        t = 1.0
        while np.any(y - t * step <= 0):
            t *= 0.5
        if decrement > 1e-8:
            while t >= 1e-12:
                f_new = f(y - t * step)
                if f_new <= fy - 0.25 * t * decrement:
                    break
                t *= 0.5
        # within the quadratic region f is too flat to rank steps; trust Newton
        y = y - t * step
        fy = f(y)
    return best_y, it


def solve_risk_parity(
    cov,
    constraints: Optional[ConstraintSet] = None,
    opts: Optional[SolverOptions] = None,
) -> WeightVector:
    """Equal-risk-contribution weights.

    The unconstrained-by-bounds ERC point is found by Newton's method on the
    convex log-barrier formulation. If per-asset bounds exclude it, the
    squared residual ``sum_m (sigma_m - sigma/M)^2`` is minimised over the
    bounded set instead and the report records the remaining residual.

    Raises
    ------
    NonConvergenceError
        If equal contributions are not reached to ``1e-8`` relative where
        they are attainable.
    """
    constraints = constraints or ConstraintSet()
    opts = opts or SolverOptions()
    assets = cov.assets if isinstance(cov, HermitianCovariance) else ()
    s = _real_matrix(cov)
    m = s.shape[0]
    constraints.check_feasible(m)
    if np.any(np.diag(s) <= 0):
        raise ValidationError("risk parity needs a strictly positive covariance diagonal")
    if m == 1:
        report = SolverReport(True, 0.0, 0.0, 0, 0, method="risk-parity")
        return WeightVector([1.0], assets, report)

    # ERC is invariant under diagonal rescaling; solve on the correlation scale
    d = 1.0 / np.sqrt(np.diag(s))
    y, iters = _erc_newton(s * np.outer(d, d))
    w = d * y
    w = w / w.sum()
    residual = _rp_residual(w, s) if np.all(np.isfinite(w)) else math.inf
    if constraints.is_feasible(w) and residual <= RP_TOLERANCE:
        report = SolverReport(True, 0.0, residual, iters, 0, method="risk-parity-newton")
        return WeightVector(w, assets, report)
    if not constraints.has_box(m):
        raise NonConvergenceError(
            f"risk parity did not reach equal contributions (residual {residual:.3e})",
            best=w, residual=residual,
        )

    lo, hi = constraints.bounds(m)

    def objective(x):
        sx = s @ x
        var = float(x @ sx)
        if var <= 0:
            return 1e300
        sigma = math.sqrt(var)
        return float(np.sum((x * sx / sigma - sigma / m) ** 2))

    x0 = constraints.project(np.full(m, 1.0 / m))
    res = minimize(
        objective, x0, method="SLSQP",
        bounds=[(None if math.isinf(a) else a, None if math.isinf(b) else b) for a, b in zip(lo, hi)],
        constraints=[{"type": "eq", "fun": lambda x: x.sum() - 1.0}],
        options={"maxiter": opts.max_iter, "ftol": 1e-16},
    )
    w = constraints.project(res.x)
    residual = _rp_residual(w, s)
    report = SolverReport(bool(res.success), float(res.fun), residual, int(res.nit), 0,
                          method="risk-parity-bounded")
    if not res.success:
        raise NonConvergenceError(f"bounded risk parity failed: {res.message}",
                                  best=w, report=report, residual=residual)
    return WeightVector(w, assets, report)
