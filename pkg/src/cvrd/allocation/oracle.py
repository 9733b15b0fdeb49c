"""Exhaustive simplex-lattice search, used as an independent check on the solvers."""
from __future__ import annotations

import math
from typing import Callable, Iterator, Tuple

import numpy as np

from ..errors import CVRDError, GuardError

MAX_ASSETS = 4
MIN_RESOLUTION = 0.01


def simplex_lattice(m: int, n: int) -> Iterator[Tuple[int, ...]]:
    """All ``m``-tuples of non-negative integers summing to ``n``, lexicographic."""
    if m == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in simplex_lattice(m - 1, n - first):
            yield (first, *rest)


def lattice_size(m: int, n: int) -> int:
    return math.comb(n + m - 1, m - 1)


def grid_search_oracle(objective: Callable, m: int, h: float) -> np.ndarray:
    """Argmax of ``objective`` over simplex points whose coordinates are multiples of ``h``.

    ``objective`` may return a float or a ``(value, gradient)`` tuple. Points
    where it raises a library error count as ``-inf``. Ties go to the
    lexicographically smallest point.
    """
    if m > MAX_ASSETS or m < 1:
        raise GuardError(f"grid oracle supports 1 <= M <= {MAX_ASSETS}, got {m}")
    if h < MIN_RESOLUTION - 1e-15:
        raise GuardError(f"grid resolution must be >= {MIN_RESOLUTION}, got {h}")
    n = round(1.0 / h)
    if abs(n * h - 1.0) > 1e-9:
        raise GuardError(f"1/h must be an integer, got h={h}")
    best, best_val = None, -math.inf
    for k in simplex_lattice(m, n):
        w = np.array(k, dtype=float) / n
        try:
            val = objective(w)
        except CVRDError:
            continue
        if isinstance(val, tuple):
            val = val[0]
        if val > best_val:
            best, best_val = w, float(val)
    if best is None:
        raise GuardError("objective undefined at every lattice point")
    return best
