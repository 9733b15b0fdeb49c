import numpy as np
import pytest
from datetime import date, timedelta

from cvrd.market_data import PriceTable


def wishart_cov(rng, m, t=None):
    """Well-conditioned random PSD matrix: X'X/T with per-asset vol scales."""
    t = t or 4 * m + 8
    x = rng.normal(size=(t, m)) * np.exp(0.5 * rng.normal(size=m))
    return x.T @ x / t


def business_dates(n, start=date(2020, 1, 1)):
    out, d = [], start
    while len(out) < n:
        if d.weekday() < 5:
            out.append(d)
        d += timedelta(days=1)
    return out


def table_from_returns(returns, start=date(2020, 1, 1), assets=None):
    r = np.atleast_2d(np.asarray(returns, dtype=float))
    if r.shape[0] == 1 and np.ndim(returns) == 1:
        r = r.T
    p = np.vstack([np.full(r.shape[1], 100.0), 100.0 * np.cumprod(1 + r, axis=0)])
    assets = assets or [f"A{i}" for i in range(r.shape[1])]
    return PriceTable(business_dates(len(p), start), assets, p)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
