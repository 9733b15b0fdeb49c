import csv
import io
import json
import math
from datetime import date

import numpy as np
import pytest

from cvrd.allocation import solve_risk_parity
from cvrd.backtest import (
    BacktestConfig,
    performance_metrics,
    rebalance_indices,
    run_backtest,
    sharpe_ratio,
    summary_table,
)
from cvrd.errors import (
    InsufficientDataError,
    InsufficientHistoryError,
    NonConvergenceError,
    SolverFailure,
    ValidationError,
)
from cvrd.market_data import PriceTable, load_price_table
from cvrd.risk_models import sample_covariance

from conftest import business_dates, table_from_returns


def scripted_table():
    """Two assets, business days 2020-01-01 .. 2020-04-30, deterministic returns."""
    dates = business_dates(87)
    assert dates[-1] == date(2020, 4, 30)
    p = [[100.0, 50.0]]
    for t in range(1, len(dates)):
        r1 = 0.01 * math.sin(0.7 * t) + 0.002 * ((t * 7) % 5 - 2)
        r2 = 0.02 * math.cos(0.3 * t) - 0.003 * ((t * 3) % 4 - 1.5)
        p.append([p[-1][0] * (1 + r1), p[-1][1] * (1 + r2)])
    return PriceTable(dates, ["X", "Y"], np.array(p))


def hand_stepped(table, lookback):
    """Plain-Python replay of the rebalance rules."""
    dates, prices = list(table.dates), table.prices.tolist()
    rets = [[(prices[t + 1][m] - prices[t][m]) / prices[t][m] for m in range(2)] for t in range(len(prices) - 1)]
    rdates = dates[1:]
    rebal = [i for i in range(len(rdates)) if i == 0 or rdates[i].month != rdates[i - 1].month]
    rebal = [i for i in rebal if i >= lookback]
    weights = {}
    for i in rebal:
        window = np.array(rets[i - lookback:i])
        w = solve_risk_parity(sample_covariance(window)).weights
        # two-asset equal risk contribution is w_m proportional to 1/sigma_m
        sig = [math.sqrt(math.fsum((x - math.fsum(col) / lookback) ** 2 for x in col) / lookback)
               for col in window.T.tolist()]
        closed = np.array([1 / sig[0], 1 / sig[1]]) / (1 / sig[0] + 1 / sig[1])
        assert np.max(np.abs(w - closed)) <= 1e-12
        weights[i] = w
    series, held = [], None
    for t in range(rebal[0], len(rets)):
        held = weights.get(t, held)
        series.append(math.fsum([held[0] * rets[t][0], held[1] * rets[t][1]]))
    n = len(series)
    mean = math.fsum(series) / n
    std = math.sqrt(math.fsum((x - mean) ** 2 for x in series) / n)
    return [rdates[i] for i in rebal], [weights[i] for i in rebal], series, (mean * 252, std * math.sqrt(252))


def test_hand_stepped_oracle_bit_for_bit():
    table = scripted_table()
    rep = run_backtest(table, BacktestConfig(lookback=20, strategy="rp"))
    dates, weights, series, (ret, risk) = hand_stepped(table, 20)
    assert len(dates) == 3
    assert rep.rebalance_dates == tuple(dates)
    for wv, w in zip(rep.weights, weights):
        assert np.array_equal(wv.weights, w)
    assert rep.portfolio_returns.tolist() == series
    assert rep.summary.annual_return == ret
    assert rep.summary.annual_risk == risk
    assert rep.summary.sharpe == ret / risk


def test_rebalance_on_first_return_date_of_month():
    table = scripted_table()
    rep = run_backtest(table, BacktestConfig(lookback=20, strategy="rp"))
    assert rep.rebalance_dates == (date(2020, 2, 3), date(2020, 3, 2), date(2020, 4, 1))
    assert rep.period_dates[0] == date(2020, 2, 3)


def test_rebalance_rules():
    ds = [date(2020, m, d) for m in (1, 2, 3, 4) for d in (2, 15)]
    assert rebalance_indices(ds) == [0, 2, 4, 6]
    assert rebalance_indices(ds, "quarterly") == [0, 6]
    assert rebalance_indices(ds, "annual") == [0]


@pytest.mark.parametrize("strategy", ["rp", "mrd", "cvrd"])
def test_single_asset(rng, strategy):
    table = table_from_returns(0.01 * rng.normal(size=80))
    rep = run_backtest(table, BacktestConfig(lookback=20, strategy=strategy))
    assert all(np.array_equal(wv.weights, [1.0]) for wv in rep.weights)
    r = table.prices[1:, 0] / table.prices[:-1, 0] - 1
    np.testing.assert_allclose(rep.portfolio_returns, r[-len(rep.portfolio_returns):], rtol=0, atol=1e-15)


def test_insufficient_history():
    table = scripted_table()
    with pytest.raises(InsufficientHistoryError):
        run_backtest(table, BacktestConfig(lookback=100))


def test_early_start_names_first_feasible_date():
    table = scripted_table()
    with pytest.raises(InsufficientHistoryError, match="2020-02-03") as exc:
        run_backtest(table, BacktestConfig(lookback=20, strategy="rp", start=date(2020, 1, 15)))
    assert exc.value.first_feasible == date(2020, 2, 3)
    rep = run_backtest(table, BacktestConfig(lookback=20, strategy="rp", start=date(2020, 3, 1)))
    assert rep.rebalance_dates[0] == date(2020, 3, 2)


def test_solver_failure_carries_date():
    def failing(window, config):
        raise NonConvergenceError("no luck", report={"residual": 1.0})

    with pytest.raises(SolverFailure) as exc:
        run_backtest(scripted_table(), BacktestConfig(lookback=20), fit=failing)
    assert exc.value.date == date(2020, 2, 3)
    assert exc.value.report == {"residual": 1.0}


def test_config_validation():
    with pytest.raises(ValidationError):
        BacktestConfig(lookback=7)
    with pytest.raises(ValidationError):
        BacktestConfig(strategy="momentum")
    with pytest.raises(ValidationError):
        BacktestConfig(rebalance="weekly")


@pytest.fixture(scope="module")
def long_table():
    rng = np.random.default_rng(2024)
    r = rng.normal(0.0003, 0.01, size=(400, 4)) * [1.0, 2.0, 0.5, 3.0]
    return table_from_returns(r, assets=["A", "B", "C", "D"])


@pytest.mark.parametrize("strategy", ["rp", "mrd", "cvrd"])
def test_report_invariants(long_table, strategy):
    rep = run_backtest(long_table, BacktestConfig(lookback=120, strategy=strategy))
    r = long_table.prices[1:] / long_table.prices[:-1] - 1
    r = r[-len(rep.portfolio_returns):]
    np.testing.assert_allclose(np.sum(rep.weights_in_force * r, axis=1), rep.portfolio_returns, rtol=0, atol=1e-12)
    again = performance_metrics(rep.portfolio_returns)
    assert again == rep.summary
    assert rep.weight_paths().shape == (len(rep.rebalance_dates), 4)
    np.testing.assert_allclose(rep.weight_paths().sum(axis=1), 1.0, atol=1e-12)


def test_no_look_ahead(long_table):
    cfg = BacktestConfig(lookback=120, strategy="cvrd")
    full = run_backtest(long_table, cfg)
    for k in (0, 2, len(full.rebalance_dates) - 2):
        d = full.rebalance_dates[k]
        # keep one return past d so the truncated run still has a 2-point series to summarise
        nxt = full.period_dates[full.period_dates.index(d) + 1]
        cut = run_backtest(long_table.truncate(nxt), cfg)
        assert cut.rebalance_dates == full.rebalance_dates[:k + 1]
        for a, b in zip(cut.weights, full.weights):
            assert np.array_equal(a.weights, b.weights)


def test_determinism(long_table, tmp_path):
    cfg = BacktestConfig(lookback=120, strategy="cvrd")
    a, b = run_backtest(long_table, cfg), run_backtest(long_table, cfg)
    a.write(tmp_path / "a")
    b.write(tmp_path / "b")
    for name in ("summary.json", "weights.csv", "returns.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_drift_mode(long_table):
    cfg = BacktestConfig(lookback=120, strategy="rp", drift=True)
    rep = run_backtest(long_table, cfg)
    r = long_table.prices[1:] / long_table.prices[:-1] - 1
    r = r[-len(rep.portfolio_returns):]
    # between rebalances the held weights track value: w' = w (1 + r) / (1 + R)
    w, rr, R = rep.weights_in_force, r, rep.portfolio_returns
    starts = {rep.period_dates.index(d) for d in rep.rebalance_dates}
    for t in range(1, len(R)):
        if t not in starts:
            np.testing.assert_allclose(w[t], w[t - 1] * (1 + rr[t - 1]) / (1 + R[t - 1]), rtol=1e-12)


def test_serialised_artifacts_reparse(long_table):
    rep = run_backtest(long_table, BacktestConfig(lookback=120, strategy="mrd"))
    rows = list(csv.reader(io.StringIO(rep.weights_csv())))
    assert rows[0] == ["date", "A", "B", "C", "D"]
    back = np.array([[float(x) for x in row[1:]] for row in rows[1:]])
    assert np.array_equal(back, rep.weight_paths())
    # the weights file is itself a valid price-table-shaped CSV
    assert load_price_table(rep.weights_csv()).assets == ("A", "B", "C", "D")
    rrows = list(csv.DictReader(io.StringIO(rep.returns_csv())))
    assert [float(r["portfolio_return"]) for r in rrows] == rep.portfolio_returns.tolist()
    np.testing.assert_allclose([float(r["cumulative_return"]) for r in rrows], rep.cumulative_returns(), rtol=0)
    summary = json.loads(rep.summary_json())
    assert summary["summary"]["annual_return"] == rep.summary.annual_return


def test_rolling_annual_column(long_table):
    rep = run_backtest(long_table, BacktestConfig(lookback=120, strategy="rp", periods_per_year=50))
    roll = rep.rolling_annual_returns()
    assert np.all(np.isnan(roll[:49]))
    assert roll[49] == pytest.approx(math.fsum(rep.portfolio_returns[:50]), abs=0)
    assert roll[-1] == pytest.approx(np.mean(rep.portfolio_returns[-50:]) * 50, rel=1e-12)


def test_summary_table_layout(long_table):
    reps = {s: run_backtest(long_table, BacktestConfig(lookback=120, strategy=s)) for s in ("rp", "cvrd")}
    lines = summary_table(reps).splitlines()
    assert lines[0].split() == ["RP", "CVRD"]
    assert [ln.split()[0] for ln in lines[1:]] == ["Return", "Risk", "Sharpe"]


# metrics

@pytest.mark.parametrize("ret, risk, sharpe", [(1.340, 1.728, 0.7756), (1.621, 4.219, 0.384), (3.816, 6.152, 0.620)])
def test_published_sharpe_rows(ret, risk, sharpe):
    assert abs(sharpe_ratio(ret, risk) - sharpe) <= 5e-4
    mu, sd = ret / 252, risk / math.sqrt(252)
    s = performance_metrics([mu + sd, mu - sd])
    assert s.annual_return == pytest.approx(ret, abs=1e-12)
    assert s.annual_risk == pytest.approx(risk, abs=1e-12)
    assert abs(s.sharpe * s.annual_risk + s.risk_free_rate - s.annual_return) <= 1e-9


def test_constant_series_has_undefined_sharpe():
    s = performance_metrics([0.001] * 252)
    assert s.annual_return == 252 * 0.001
    assert s.annual_risk == 0.0
    assert math.isnan(s.sharpe) and not s.sharpe_defined
    assert s.to_dict()["sharpe"] is None


def test_symmetric_series_has_zero_sharpe():
    s = performance_metrics([0.01, -0.01] * 10)
    assert s.annual_return == 0.0 and s.sharpe == 0.0


def test_risk_free_rate_and_length_guard():
    s = performance_metrics([0.01, -0.005, 0.002], 12, 0.02)
    assert s.sharpe == (s.annual_return - 0.02) / s.annual_risk
    with pytest.raises(InsufficientDataError):
        performance_metrics([0.01])


def test_metrics_order_independent(rng):
    x = rng.normal(size=500) * 0.01
    a, b = performance_metrics(x), performance_metrics(x[rng.permutation(500)])
    assert a.annual_return == b.annual_return
