"""Feasible weight sets and Euclidean projection onto them."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..errors import ValidationError

KINDS = ("long-only", "sum-to-one")


def project_simplex(v: np.ndarray, z: float = 1.0) -> np.ndarray:
    """Projection onto ``{w >= 0, sum(w) = z}`` (sort-and-threshold)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - z
    ind = np.arange(1, v.size + 1)
    rho = np.count_nonzero(u - css / ind > 0)
    theta = css[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def _project_box_sum(v, lo, hi, z=1.0, iters=200):
    # clip(v - tau, lo, hi) is non-increasing in tau; bisect for sum == z
    def excess(tau):
        return np.clip(v - tau, lo, hi).sum() - z

    step = 1.0 + np.max(np.abs(v))
    a, b = -step, step
    for _ in range(2000):
        if excess(a) >= 0:
            break
        a -= step
        step *= 2
    for _ in range(2000):
        if excess(b) <= 0:
            break
        b += step
        step *= 2
    for _ in range(iters):
        mid = 0.5 * (a + b)
        if mid in (a, b):
            break
        if excess(mid) > 0:
            a = mid
        else:
            b = mid
    w = np.clip(v - 0.5 * (a + b), lo, hi)
    # spread the last rounding error over coordinates strictly inside their bounds
    free = (w > lo) & (w < hi)
    if free.any():
        w[free] += (z - w.sum()) / free.sum()
    return w


@dataclass(frozen=True)
class ConstraintSet:
    """Fully-invested weight constraints.

    ``kind="long-only"`` (default) is the simplex; ``kind="sum-to-one"`` only
    requires the weights to add up to one. Optional per-asset ``lower`` /
    ``upper`` bounds apply on top of either.
    """

    kind: str = "long-only"
    lower: Optional[Sequence[float]] = None
    upper: Optional[Sequence[float]] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"constraint kind must be one of {KINDS}, got {self.kind!r}")

    def bounds(self, m: int):
        lo = np.full(m, 0.0 if self.kind == "long-only" else -np.inf)
        hi = np.full(m, np.inf)
        if self.lower is not None:
            lo = np.maximum(lo, np.asarray(self.lower, dtype=float))
        if self.upper is not None:
            hi = np.minimum(hi, np.asarray(self.upper, dtype=float))
        if lo.shape != (m,) or hi.shape != (m,):
            raise ValidationError(f"bounds must have length {m}")
        return lo, hi

    def has_box(self, m: int) -> bool:
        return self.lower is not None or self.upper is not None

    def check_feasible(self, m: int) -> None:
        lo, hi = self.bounds(m)
        if np.any(lo > hi) or lo.sum() > 1.0 + 1e-12 or hi.sum() < 1.0 - 1e-12:
            raise ValidationError("bounds admit no fully-invested portfolio")

    def project(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        m = v.size
        if not self.has_box(m):
            if self.kind == "long-only":
                return project_simplex(v)
            return v - (v.sum() - 1.0) / m
        lo, hi = self.bounds(m)
        return _project_box_sum(v, lo, hi)

    def is_feasible(self, w, atol: float = 1e-9) -> bool:
        w = np.asarray(w, dtype=float)
        lo, hi = self.bounds(w.size)
        return (
            abs(w.sum() - 1.0) <= atol
            and bool(np.all(w >= lo - 1e-12))
            and bool(np.all(w <= hi + 1e-12))
        )
