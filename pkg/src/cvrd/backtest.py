"""Rolling-window, calendar-rebalanced backtests and summary metrics.

At each rebalance date ``d`` (default: first trading date of each calendar
month) a strategy is fitted on the ``lookback`` returns realised strictly
before ``d``. The weights apply from the return realised on ``d`` onward
and are held until the next rebalance. No transaction costs.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from .allocation import (
    ConstraintSet,
    SolverOptions,
    WeightVector,
    solve_cvrd,
    solve_mrd,
    solve_risk_parity,
)
from .errors import CVRDError, InsufficientDataError, InsufficientHistoryError, SolverFailure, ValidationError
from .market_data import PriceTable, ReturnMatrix, compute_returns
from .risk_models import complex_covariance, sample_covariance
from .spectral import analytic_matrix

logger = logging.getLogger(__name__)

STRATEGIES = ("rp", "mrd", "cvrd")
REBALANCE_RULES = ("monthly", "quarterly", "annual")


@dataclass(frozen=True)
class BacktestConfig:
    lookback: int = 252
    rebalance: str = "monthly"
    strategy: str = "cvrd"
    centering: bool = True
    solver: SolverOptions = field(default_factory=SolverOptions)
    constraints: ConstraintSet = field(default_factory=ConstraintSet)
    risk_free_rate: float = 0.0
    periods_per_year: int = 252
    drift: bool = False  # let weights drift with prices between rebalances
    start: Optional[object] = None  # earliest rebalance date to use

    def __post_init__(self):
        if self.lookback < 8:
            raise ValidationError(f"lookback must be >= 8, got {self.lookback}")
        if self.strategy not in STRATEGIES:
            raise ValidationError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.rebalance not in REBALANCE_RULES:
            raise ValidationError(f"rebalance must be one of {REBALANCE_RULES}, got {self.rebalance!r}")
        if self.periods_per_year <= 0:
            raise ValidationError("periods_per_year must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["start"] = None if self.start is None else str(self.start)
        return d


@dataclass(frozen=True)
class PerformanceSummary:
    annual_return: float
    annual_risk: float
    sharpe: float  # NaN when annual_risk == 0
    sharpe_defined: bool
    n_periods: int
    periods_per_year: int
    risk_free_rate: float

    def to_dict(self) -> dict:
        d = asdict(self)
        if not self.sharpe_defined:
            d["sharpe"] = None
        return d


def sharpe_ratio(annual_return: float, annual_risk: float, risk_free_rate: float = 0.0) -> float:
    """``(return - rf) / risk``; NaN when risk is zero."""
    if annual_risk == 0:
        return math.nan
    return (annual_return - risk_free_rate) / annual_risk


def performance_metrics(series, periods_per_year: int = 252, risk_free_rate: float = 0.0) -> PerformanceSummary:
    """Annualised mean return, population volatility and Sharpe ratio.

    Sums are correctly rounded (``math.fsum``), so the result does not depend
    on summation order.
    """
    x = np.asarray(series, dtype=float)
    n = x.size
    if n < 2:
        raise InsufficientDataError(f"need at least 2 returns, got {n}")
    if np.ptp(x) == 0:
        mean, std = float(x[0]), 0.0
    else:
        mean = math.fsum(x) / n
        std = math.sqrt(math.fsum((x - mean) ** 2) / n)
    ann_ret = mean * periods_per_year
    ann_risk = std * math.sqrt(periods_per_year)
    sharpe = sharpe_ratio(ann_ret, ann_risk, risk_free_rate)
    return PerformanceSummary(ann_ret, ann_risk, sharpe, ann_risk > 0, n, periods_per_year, risk_free_rate)


def _period_key(d, rule: str):
    if rule == "monthly":
        return (d.year, d.month)
    if rule == "quarterly":
        return (d.year, (d.month - 1) // 3)
    return (d.year,)


def rebalance_indices(period_dates, rule: str = "monthly") -> List[int]:
    """Row indices of the first return date in each calendar period."""
    out, last = [], None
    for i, d in enumerate(period_dates):
        k = _period_key(d, rule)
        if k != last:
            out.append(i)
            last = k
    return out


def fit_strategy(window: ReturnMatrix, config: BacktestConfig) -> WeightVector:
    """Weights for one lookback window under ``config.strategy``."""
    if window.n_assets == 1:
        return WeightVector([1.0], window.assets)
    if config.strategy == "rp":
        return solve_risk_parity(sample_covariance(window), config.constraints, config.solver)
    if config.strategy == "mrd":
        return solve_mrd(sample_covariance(window), config.constraints, config.solver)
    signals = analytic_matrix(window, centering=config.centering)
    return solve_cvrd(complex_covariance(signals), config.constraints, config.solver)


@dataclass(frozen=True, eq=False)
class BacktestReport:
    strategy: str
    assets: tuple
    rebalance_dates: tuple
    weights: tuple  # WeightVector per rebalance date
    period_dates: tuple  # dates of the portfolio return series
    portfolio_returns: np.ndarray
    weights_in_force: np.ndarray  # weights applied to each period's return
    summary: PerformanceSummary
    config: BacktestConfig

    def weight_paths(self) -> np.ndarray:
        return np.array([w.weights for w in self.weights])

    def cumulative_returns(self) -> np.ndarray:
        return np.cumprod(1.0 + self.portfolio_returns) - 1.0

    def rolling_annual_returns(self) -> np.ndarray:
        """Trailing annualised mean return; NaN until a full year is available."""
        n = self.config.periods_per_year
        r = self.portfolio_returns
        out = np.full(r.size, np.nan)
        for i in range(n - 1, r.size):
            out[i] = math.fsum(r[i - n + 1:i + 1])  # mean * n over an n-period window
        return out

    def summary_json(self) -> str:
        payload = {
            "strategy": self.strategy,
            "summary": self.summary.to_dict(),
            "rebalances": len(self.rebalance_dates),
            "first_rebalance": str(self.rebalance_dates[0]),
            "last_date": str(self.period_dates[-1]),
            "config": self.config.to_dict(),
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    def weights_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["date", *self.assets])
        for d, wv in zip(self.rebalance_dates, self.weights):
            w.writerow([str(d), *(repr(float(x)) for x in wv.weights)])
        return buf.getvalue()

    def returns_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["date", "portfolio_return", "cumulative_return", "rolling_annual_return"])
        for d, r, c, a in zip(self.period_dates, self.portfolio_returns,
                              self.cumulative_returns(), self.rolling_annual_returns()):
            w.writerow([str(d), repr(float(r)), repr(float(c)), "" if math.isnan(a) else repr(float(a))])
        return buf.getvalue()

    def write(self, directory) -> None:
        os.makedirs(directory, exist_ok=True)
        for name, text in (("summary.json", self.summary_json()),
                           ("weights.csv", self.weights_csv()),
                           ("returns.csv", self.returns_csv())):
            with open(os.path.join(directory, name), "w", encoding="utf-8", newline="") as fh:
                fh.write(text)


def run_backtest(
    table: PriceTable,
    config: Optional[BacktestConfig] = None,
    fit: Optional[Callable[[ReturnMatrix, BacktestConfig], WeightVector]] = None,
) -> BacktestReport:
    """Simulate ``config.strategy`` over ``table``.

    Parameters
    ----------
    table : PriceTable
    config : BacktestConfig
    fit : callable, optional
        Replacement for :func:`fit_strategy` (same signature).

    Raises
    ------
    InsufficientHistoryError
        No rebalance date has ``lookback`` prior returns, or ``config.start``
        precedes the first date that does.
    SolverFailure
        The strategy could not be fitted at some date; carries the date and
        solver report.
    """
    config = config or BacktestConfig()
    fit = fit or fit_strategy
    rets = compute_returns(table)
    L = config.lookback
    candidates = rebalance_indices(rets.period_dates, config.rebalance)
    feasible = [i for i in candidates if i >= L]
    if not feasible:
        raise InsufficientHistoryError(
            f"lookback {L} needs {L + 1} price rows before the first rebalance; "
            f"the table has {len(table)} rows and no {config.rebalance} rebalance date qualifies"
        )
    first_ok = rets.period_dates[feasible[0]]
    if config.start is not None:
        if config.start < first_ok:
            raise InsufficientHistoryError(
                f"start {config.start} has fewer than {L} prior returns; "
                f"first feasible rebalance date is {first_ok}",
                first_feasible=first_ok,
            )
        feasible = [i for i in feasible if rets.period_dates[i] >= config.start]
        if not feasible:
            raise InsufficientDataError(f"no rebalance date on or after {config.start}")

    r = rets.returns
    weights, dates = [], []
    for i in feasible:
        d = rets.period_dates[i]
        try:
            wv = fit(rets.window(i - L, i), config)
        except CVRDError as exc:
            raise SolverFailure(
                f"{config.strategy} failed at rebalance {d}: {exc}",
                date=d,
                report=getattr(exc, "report", None),
            ) from exc
        weights.append(wv)
        dates.append(d)
        logger.debug("%s %s weights %s", config.strategy, d, np.round(wv.weights, 4))

    first = feasible[0]
    held = np.empty((r.shape[0] - first, r.shape[1]))
    port = np.empty(r.shape[0] - first)
    starts = dict(zip(feasible, weights))
    current = None
    for t in range(first, r.shape[0]):
        if t in starts:
            current = np.array(starts[t].weights, dtype=float)
        k = t - first
        held[k] = current
        port[k] = math.fsum(current * r[t])
        if config.drift:
            current = current * (1.0 + r[t]) / (1.0 + port[k])
    held.setflags(write=False)
    port.setflags(write=False)
    summary = performance_metrics(port, config.periods_per_year, config.risk_free_rate)
    return BacktestReport(
        strategy=config.strategy,
        assets=table.assets,
        rebalance_dates=tuple(dates),
        weights=tuple(weights),
        period_dates=rets.period_dates[first:],
        portfolio_returns=port,
        weights_in_force=held,
        summary=summary,
        config=config,
    )


def combined_summary(reports: Dict[str, BacktestReport]) -> dict:
    """Side-by-side summary keyed by strategy."""
    return {name: rep.summary.to_dict() for name, rep in reports.items()}


def summary_table(reports: Dict[str, BacktestReport]) -> str:
    """Return / Risk / Sharpe rows with one column per strategy."""
    names = list(reports)
    lines = ["{:<14}".format("") + "".join(f"{n.upper():>12}" for n in names)]
    for label, key in (("Return", "annual_return"), ("Risk", "annual_risk"), ("Sharpe Ratio", "sharpe")):
        cells = []
        for n in names:
            v = getattr(reports[n].summary, key)
            cells.append(f"{'n/a':>12}" if isinstance(v, float) and math.isnan(v) else f"{v:>12.4f}")
        lines.append(f"{label:<14}" + "".join(cells))
    return "\n".join(lines)
