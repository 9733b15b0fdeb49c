"""Fast built-in oracle checks, run by ``cvrd selftest``.

Each check compares a library routine against an independent computation
(direct-summation DFT, finite differences, lattice search, closed forms).
The full property suites live in the test directory.
"""
from __future__ import annotations

import math
from typing import Callable, List, Tuple

import numpy as np

from .allocation import (
    EntropyObjective,
    grid_search_oracle,
    risk_contributions,
    solve_cvrd,
    solve_mrd,
    solve_risk_parity,
)
from .backtest import performance_metrics
from .risk_models import complex_covariance, sample_covariance, spectral_decomposition
from .spectral import analytic_matrix, analytic_signal, discrete_hilbert

Check = Tuple[str, bool, str]


def _direct_dft(x):
    n = len(x)
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n) @ x


def check_hilbert() -> Check:
    worst = 0.0
    for n in (64, 128, 255, 256):
        t = np.arange(n)
        for k in range(1, (n + 1) // 2):
            if 2 * k == n:
                continue
            err = np.max(np.abs(discrete_hilbert(np.cos(2 * np.pi * k * t / n)) - np.sin(2 * np.pi * k * t / n)))
            worst = max(worst, err)
    return "hilbert cos->sin", worst < 1e-10, f"max err {worst:.1e}"


def check_analytic_spectrum(rng) -> Check:
    worst = 0.0
    n = 128
    for _ in range(20):
        z = analytic_signal(rng.normal(size=n))
        e = np.abs(_direct_dft(z)) ** 2
        worst = max(worst, e[n // 2 + 1:].sum() / e.sum())
    return "analytic spectrum one-sided", worst < 1e-18, f"neg/total {worst:.1e}"


def check_complex_covariance(rng) -> Check:
    ok, worst = True, 0.0
    for _ in range(20):
        c = complex_covariance(analytic_matrix(rng.normal(size=(64, 8)))).matrix
        worst = max(worst, np.max(np.abs(c - c.conj().T)))
        lam = np.linalg.eigvalsh(c)
        ok &= lam[0] >= -1e-10 * lam[-1]
    return "complex covariance Hermitian PSD", ok and worst <= 1e-12, f"asym {worst:.1e}"


def check_risk_parity(rng) -> Check:
    worst = 0.0
    for _ in range(10):
        m = int(rng.integers(2, 9))
        x = rng.normal(size=(4 * m, m)) * np.exp(rng.normal(size=m))
        cov = sample_covariance(x)
        rc = risk_contributions(solve_risk_parity(cov), cov)
        worst = max(worst, np.max(np.abs(rc.contributions - rc.sigma / m)) / rc.sigma)
    return "risk parity equal contributions", worst <= 1e-8, f"max rel dev {worst:.1e}"


def check_gradient(rng) -> Check:
    worst = 0.0
    for kind in ("real", "complex"):
        x = rng.normal(size=(60, 4)) @ rng.normal(size=(4, 4))
        cov = sample_covariance(x) if kind == "real" else complex_covariance(analytic_matrix(x))
        obj = EntropyObjective(spectral_decomposition(cov))
        for _ in range(10):
            w = rng.dirichlet(np.ones(4))
            g = obj(w)[1]
            fd = np.array([(obj.value(w + 1e-6 * e) - obj.value(w - 1e-6 * e)) / 2e-6 for e in np.eye(4)])
            worst = max(worst, np.linalg.norm(g - fd) / np.linalg.norm(g))
    return "entropy gradient vs finite differences", worst <= 1e-5, f"max rel err {worst:.1e}"


def check_oracle(rng) -> Check:
    gap = -math.inf
    for _ in range(3):
        x = rng.normal(size=(64, 2)) @ rng.normal(size=(2, 2))
        for cov, solve in ((sample_covariance(x), solve_mrd),
                           (complex_covariance(analytic_matrix(x)), solve_cvrd)):
            obj = EntropyObjective(spectral_decomposition(cov))
            h_grid = obj.value(grid_search_oracle(obj.value, 2, 0.01))
            gap = max(gap, h_grid - obj.value(solve(cov).weights))
    return "solver vs grid oracle", gap <= 1e-3, f"worst shortfall {gap:.1e}"


def check_reduction(rng) -> Check:
    worst = 0.0
    for _ in range(5):
        x = rng.normal(size=(64, 3)) @ rng.normal(size=(3, 3))
        am = analytic_matrix(x)
        zero_imag = type(am)(am.values.real + 0j, am.assets, am.means, am.centered)
        w_c = solve_cvrd(complex_covariance(zero_imag)).weights
        w_r = solve_mrd(sample_covariance(x)).weights
        worst = max(worst, np.max(np.abs(w_c - w_r)))
    return "CVRD reduces to MRD", worst <= 1e-8, f"max diff {worst:.1e}"


def check_sharpe() -> Check:
    rows = [(1.340, 1.728, 0.7756), (1.621, 4.219, 0.384), (3.816, 6.152, 0.620)]
    worst = 0.0
    for ret, risk, expected in rows:
        mu, sd = ret / 252, risk / math.sqrt(252)
        s = performance_metrics([mu + sd, mu - sd], 252, 0.0).sharpe
        worst = max(worst, abs(s - expected))
    return "Sharpe definition vs published rows", worst <= 5e-4, f"max diff {worst:.1e}"


def run_all(seed: int = 0) -> List[Check]:
    rng = np.random.default_rng(seed)
    checks: List[Callable[[], Check]] = [
        check_hilbert,
        lambda: check_analytic_spectrum(rng),
        lambda: check_complex_covariance(rng),
        lambda: check_risk_parity(rng),
        lambda: check_gradient(rng),
        lambda: check_oracle(rng),
        lambda: check_reduction(rng),
        check_sharpe,
    ]
    out = []
    for c in checks:
        try:
            out.append(c())
        except Exception as exc:  # a crashing check is a failing check
            out.append((getattr(c, "__name__", "check"), False, f"raised {exc!r}"))
    return out
