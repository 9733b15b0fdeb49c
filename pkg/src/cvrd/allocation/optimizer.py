"""Multi-start projected-gradient ascent over a fully-invested weight set.

Each start runs a spectral projected-gradient method: Barzilai-Borwein step
lengths, projection onto the constraint set, and a non-monotone Armijo
backtracking search. Objectives that expose ``hessian(w)`` additionally get
projected-Newton steps after a short warm-up; a Newton step whose line
search fails falls back to the gradient step. Every step moves each
coordinate by at most 0.1, so a start climbs the basin it begins in rather
than leaping into a neighbouring one. A start has converged when the
projected-gradient norm ``||P(w + grad) - w||_2`` drops below ``tolerance``.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import CVRDError, NonConvergenceError
from .constraints import ConstraintSet

logger = logging.getLogger(__name__)

Objective = Callable[[np.ndarray], Tuple[float, np.ndarray]]

_MEMORY = 10  # non-monotone reference window
_ARMIJO = 1e-4
_STEP_MIN, _STEP_MAX = 1e-12, 1e12
_FIRST_STEP = 0.01  # max coordinate move of the first gradient step
_MAX_MOVE = 0.1  # largest single-coordinate move per iteration
_WARMUP = 20  # gradient-only iterations before Newton refinement
_STALL = 200  # iterations without progress before a start is declared stalled
STALL_RESIDUAL = 1e-6  # stalled starts are usable only below this residual


@dataclass(frozen=True)
class SolverOptions:
    tolerance: float = 1e-9
    max_iter: int = 10_000
    n_starts: int = 8
    seed: int = 42
    tie_tolerance: float = 1e-10
    structured_starts: bool = True  # add vertices, face centroids and edge midpoints


@dataclass
class StartResult:
    start: int
    objective: float
    residual: float
    iterations: int
    converged: bool
    weights: List[float]
    stalled: bool = False  # stopped at the working-precision floor, residual above tolerance


@dataclass
class SolverReport:
    converged: bool
    objective: float
    residual: float
    iterations: int
    chosen_start: int
    starts: List[StartResult] = field(default_factory=list)
    method: str = "projected-gradient"
    strict: bool = True  # every reported optimum met the requested tolerance

    def to_dict(self) -> dict:
        return _finite(asdict(self))


def _finite(obj):
    # JSON has no inf/nan
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_finite(v) for v in obj]
    return obj


def weight_entropy(w) -> float:
    """``-sum w log w`` with ``0 log 0 = 0``; negative entries are ignored."""
    w = np.asarray(w, dtype=float)
    w = w[w > 0]
    return float(-np.sum(w * np.log(w)))


def _safe_eval(objective, w):
    try:
        f, g = objective(w)
    except (CVRDError, FloatingPointError, ZeroDivisionError):
        return -math.inf, None
    if not math.isfinite(f):
        return -math.inf, None
    return float(f), np.asarray(g, dtype=float)


def _newton_direction(w, g, hess, lo, hi, residual):
    """Projected-Newton direction on the coordinates not held at a bound.

    Coordinates within ``eps`` of a bound whose multiplier-adjusted gradient
    points outward are frozen and sent onto that bound. On the rest the reduced Hessian (restricted to
    ``sum(d) = 0``) is made negative definite by flipping and flooring its
    eigenvalues.
    """
    eps = min(1e-6, max(residual, 1e-14))
    near_lo = w <= lo + eps
    near_hi = w >= hi - eps
    inner = ~(near_lo | near_hi)
    nu = g[inner].mean() if inner.any() else g.mean()
    frozen = (near_lo & (g < nu)) | (near_hi & (g > nu))
    free = np.flatnonzero(~frozen)
    if free.size < 2:
        return None
    k = free.size
    # orthonormal basis of {d : sum(d) = 0} in the free coordinates
    q, _ = np.linalg.qr(np.column_stack([np.ones(k), np.eye(k)[:, : k - 1]]))
    z = q[:, 1:]
    hr = z.T @ hess[np.ix_(free, free)] @ z
    gr = z.T @ g[free]
    mu, vecs = np.linalg.eigh(hr)
    floor = max(1e-10 * np.max(np.abs(mu)), 1e-300)
    mu_mod = -np.maximum(np.abs(mu), floor)
    dr = -vecs @ ((vecs.T @ gr) / mu_mod)
    d = np.zeros_like(w)
    d[free] = z @ dr
    # frozen coordinates go straight to their bound; the mass moves to the free ones
    target = np.where(near_lo, lo, hi)
    d[frozen] = target[frozen] - w[frozen]
    d[free] -= d[frozen].sum() / k
    return d


def _capped(d) -> float:
    # step multiplier limiting the move; long leaps can cross into another basin
    big = float(np.max(np.abs(d), initial=0.0))
    return 1.0 if big <= _MAX_MOVE else _MAX_MOVE / big


def _ascend(objective: Objective, w0, constraints: ConstraintSet, opts: SolverOptions, start: int):
    hess_fn = getattr(objective, "hessian", None)
    lo, hi = constraints.bounds(np.size(w0))
    w = constraints.project(w0)
    f, g = _safe_eval(objective, w)
    if g is None:
        return StartResult(start, -math.inf, math.inf, 0, False, w.tolist())
    history = [f]
    residual = float(np.linalg.norm(constraints.project(w + g) - w))
    # a short first step keeps each start inside its own basin; BB steps take over after
    alpha = min(1.0, _FIRST_STEP / max(float(np.max(np.abs(g - g.mean()))), 1e-300))
    best_f, best_res, last_progress = f, residual, 0
    for it in range(1, opts.max_iter + 1):
        if residual <= opts.tolerance:
            return StartResult(start, f, residual, it - 1, True, w.tolist())
        if it - last_progress > _STALL:
            return StartResult(start, f, residual, it - 1, False, w.tolist(),
                               stalled=residual <= STALL_RESIDUAL)
        f_ref = max(history[-_MEMORY:])
        slack = 8 * np.finfo(float).eps * max(1.0, abs(f_ref))
        accepted = None
        if hess_fn is not None and it > _WARMUP:
            try:
                d = _newton_direction(w, g, hess_fn(w), lo, hi, residual)
            except (CVRDError, np.linalg.LinAlgError, FloatingPointError):
                d = None
            lam = 1.0 if d is None else _capped(d)
            while d is not None and lam >= 1e-10:
                w_new = constraints.project(w + lam * d)
                f_new, g_new = _safe_eval(objective, w_new)
                if g_new is not None and f_new >= f + _ARMIJO * float(g @ (w_new - w)) - slack:
                    accepted = (w_new, f_new, g_new)
                    break
                lam *= 0.5
        if accepted is None:
            # spectral projected-gradient step, non-monotone Armijo
            d = constraints.project(w + alpha * g) - w
            slope = float(g @ d)
            lam = _capped(d)
            while True:
                w_new = w + lam * d
                f_new, g_new = _safe_eval(objective, w_new)
                if g_new is not None and f_new >= f_ref + _ARMIJO * lam * slope - slack:
                    break
                lam *= 0.5
                if lam < 1e-20:
                    break
            if g_new is None:
                break
            accepted = (w_new, f_new, g_new)
        w_new, f_new, g_new = accepted
        s = w_new - w
        sy = -float(s @ (g_new - g))  # curvature of -f along s
        ss = float(s @ s)
        if ss == 0.0:
            alpha = 1.0
        else:
            alpha = min(_STEP_MAX, max(_STEP_MIN, ss / sy)) if sy > 0 else _STEP_MAX
        w, f, g = w_new, f_new, g_new
        history.append(f)
        residual = float(np.linalg.norm(constraints.project(w + g) - w))
        if f > best_f + slack or residual < 0.5 * best_res:
            last_progress = it
        best_f, best_res = max(best_f, f), min(best_res, residual)
    else:
        if residual <= opts.tolerance:
            return StartResult(start, f, residual, opts.max_iter, True, w.tolist())
        it = opts.max_iter
    return StartResult(start, f, residual, it, False, w.tolist())


def starting_points(
    m: int,
    constraints: ConstraintSet,
    opts: SolverOptions,
    order: Optional[Sequence[int]] = None,
) -> List[np.ndarray]:
    """Uniform weights, ``n_starts - 1`` seeded Dirichlet(1) draws, then structured points.

    The Dirichlet draws are generated in the asset order ``order`` (a
    permutation-invariant ranking supplied by the caller), so relabelling the
    assets relabels the starts the same way. The structured points are the
    simplex vertices, the centroids of the faces opposite each vertex and
    the edge midpoints; the objective is multimodal and these reach basins
    random draws often miss.
    """
    rng = np.random.default_rng(opts.seed)
    order = np.arange(m) if order is None else np.asarray(order)
    points = [np.full(m, 1.0 / m)]
    for _ in range(max(opts.n_starts, 1) - 1):
        p = np.empty(m)
        p[order] = rng.dirichlet(np.ones(m))
        points.append(p)
    if opts.structured_starts and m > 1:
        eye = np.eye(m)
        points.extend(eye)
        if m > 2:
            points.extend((1.0 - eye) / (m - 1))
            points.extend((eye[i] + eye[j]) / 2 for i, j in itertools.combinations(range(m), 2))
    return points


def _pick(results: List[StartResult], tie_tol: float) -> StartResult:
    best = max(r.objective for r in results)
    tied = [r for r in results if r.objective >= best - tie_tol * max(1.0, abs(best))]
    top = max(weight_entropy(r.weights) for r in tied)
    tied = [r for r in tied if weight_entropy(r.weights) >= top - 1e-12]
    return min(tied, key=lambda r: tuple(r.weights))


def maximize_entropy_on_simplex(
    objective: Objective,
    m: int,
    constraints: Optional[ConstraintSet] = None,
    opts: Optional[SolverOptions] = None,
    order: Optional[Sequence[int]] = None,
) -> Tuple[np.ndarray, SolverReport]:
    """Maximise ``objective`` over the feasible weight set.

    Parameters
    ----------
    objective : callable
        ``objective(w) -> (value, gradient)``.
    m : int
        Number of assets.
    order : sequence of int, optional
        Canonical asset ranking for the random starts (see
        :func:`starting_points`).

    Returns
    -------
    weights, report
        Best converged start, ties resolved by maximal weight entropy and
        then lexicographic order. Starts that stalled at the precision floor
        (residual <= 1e-6) are considered only if none converged; the report's
        ``strict`` flag is False in that case.

    Raises
    ------
    NonConvergenceError
        If no start reaches the tolerance; ``best`` carries the best iterate.
    """
    constraints = constraints or ConstraintSet()
    opts = opts or SolverOptions()
    constraints.check_feasible(m)
    results = [
        _ascend(objective, w0, constraints, opts, i)
        for i, w0 in enumerate(starting_points(m, constraints, opts, order))
    ]
    converged = [r for r in results if r.converged]
    usable = converged or [r for r in results if r.stalled]
    pool = usable or [r for r in results if math.isfinite(r.objective)] or results
    chosen = _pick(pool, opts.tie_tolerance)
    report = SolverReport(
        converged=bool(usable),
        objective=chosen.objective,
        residual=chosen.residual,
        iterations=sum(r.iterations for r in results),
        chosen_start=chosen.start,
        starts=results,
        strict=bool(converged),
    )
    w = np.array(chosen.weights)
    if not usable:
        raise NonConvergenceError(
            f"no start reached projected-gradient norm {opts.tolerance:g} "
            f"in {opts.max_iter} iterations (best residual {chosen.residual:.3e})",
            best=w,
            report=report,
            residual=chosen.residual,
        )
    logger.debug("entropy ascent: objective %.12g, residual %.2e", chosen.objective, chosen.residual)
    return w, report
