"""Command-line interface: ``cvrd describe|weights|backtest|selftest``.

Settings resolve as: command-line flag, then ``--config`` TOML file, then
built-in default. Set ``CVRD_LOG`` (e.g. ``DEBUG``) for log output on stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from datetime import date
from typing import List, Optional

from .allocation import SolverOptions
from .backtest import STRATEGIES, BacktestConfig, fit_strategy, run_backtest, summary_table
from .errors import CVRDError
from .market_data import compute_returns, describe, load_price_table

logger = logging.getLogger("cvrd")

DEFAULTS = {
    "strategy": "rp,mrd,cvrd",
    "lookback": 252,
    "rebalance": "monthly",
    "centering": "on",
    "rf": 0.0,
    "periods_per_year": 252,
    "seed": 42,
    "out": None,
    "format": "csv",
    "window": "last-252",
    "missing": "forward-fill",
    "start": None,
    "drift": False,
    "excess_kurtosis": False,
}


def _load_toml(path: str) -> dict:
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    return {k.replace("-", "_"): v for k, v in data.items()}


def _resolve(args: argparse.Namespace) -> dict:
    settings = dict(DEFAULTS)
    if getattr(args, "config", None):
        settings.update(_load_toml(args.config))
    for key, value in vars(args).items():
        if value is not None:
            settings[key] = value
    return settings


def _strategies(value) -> List[str]:
    names = value if isinstance(value, list) else [s.strip() for s in str(value).split(",") if s.strip()]
    bad = [n for n in names if n not in STRATEGIES]
    if bad or not names:
        raise CVRDError(f"unknown strategy {bad or value!r}; choose from {','.join(STRATEGIES)}")
    return names


def _config(settings: dict, strategy: str) -> BacktestConfig:
    centering = settings["centering"]
    if isinstance(centering, str):
        centering = centering.lower() in ("on", "true", "1", "yes")
    start = settings.get("start")
    if isinstance(start, str):
        start = date.fromisoformat(start)
    return BacktestConfig(
        lookback=int(settings["lookback"]),
        rebalance=settings["rebalance"],
        strategy=strategy,
        centering=bool(centering),
        solver=SolverOptions(seed=int(settings["seed"])),
        risk_free_rate=float(settings["rf"]),
        periods_per_year=int(settings["periods_per_year"]),
        drift=bool(settings["drift"]),
        start=start,
    )


def _emit(text: str, path: Optional[str]) -> None:
    if path:
        parent = os.path.dirname(path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _fmt(x: float) -> str:
    return "" if math.isnan(x) else repr(float(x))


def cmd_describe(s: dict) -> int:
    table = load_price_table(s["input"], missing=s["missing"])
    stats = describe(compute_returns(table), excess_kurtosis=bool(s["excess_kurtosis"]))
    if s["format"] == "json":
        payload = {
            "n_obs": stats.n_obs,
            "kurtosis": "excess" if stats.excess_kurtosis else "non-excess",
            "undefined": list(stats.undefined),
            "assets": {
                a: {"mean": m, "std": sd, "skewness": None if math.isnan(sk) else sk,
                    "kurtosis": None if math.isnan(k) else k}
                for a, m, sd, sk, k in ((a, float(m), float(sd), float(sk), float(k))
                                        for a, m, sd, sk, k in stats.rows())
            },
        }
        _emit(json.dumps(payload, indent=2) + "\n", s["out"])
    else:
        lines = ["asset,mean,std,skewness,kurtosis"]
        for a, m, sd, sk, k in stats.rows():
            lines.append(f"{a},{_fmt(m)},{_fmt(sd)},{_fmt(sk)},{_fmt(k)}")
        _emit("\n".join(lines) + "\n", s["out"])
    return 0


def _window(text: str, n: int) -> int:
    if text == "all":
        return n
    if text.startswith("last-"):
        k = int(text[5:])
        if k > n:
            raise CVRDError(f"window {text} exceeds the {n} available returns")
        return k
    raise CVRDError(f"window must be 'all' or 'last-N', got {text!r}")


def cmd_weights(s: dict) -> int:
    names = _strategies(s["strategy"])
    if len(names) != 1:
        raise CVRDError("weights takes exactly one --strategy")
    table = load_price_table(s["input"], missing=s["missing"])
    rets = compute_returns(table)
    k = _window(str(s["window"]), len(rets))
    wv = fit_strategy(rets.window(len(rets) - k, len(rets)), _config(s, names[0]))
    _emit(wv.to_json() + "\n" if s["format"] == "json" else wv.to_csv(), s["out"])
    return 0


def cmd_backtest(s: dict) -> int:
    names = _strategies(s["strategy"])
    table = load_price_table(s["input"], missing=s["missing"])
    out = s["out"] or "backtest_out"
    reports = {}
    for name in names:
        rep = run_backtest(table, _config(s, name))
        rep.write(os.path.join(out, name))
        reports[name] = rep
    combined = {name: rep.summary.to_dict() for name, rep in reports.items()}
    with open(os.path.join(out, "summary.json"), "w", encoding="utf-8", newline="") as fh:
        fh.write(json.dumps(combined, indent=2, sort_keys=True) + "\n")
    print(summary_table(reports))
    return 0


def cmd_selftest(s: dict) -> int:
    from .selftest import run_all

    results = run_all()
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
    return 0 if all(ok for _, ok, _ in results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cvrd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML file with default settings")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--out", help="output file (describe/weights) or directory (backtest)")
    common.add_argument("--missing", choices=("forward-fill", "drop-row", "error"))

    solve = argparse.ArgumentParser(add_help=False)
    solve.add_argument("--strategy", help="comma-separated subset of rp,mrd,cvrd")
    solve.add_argument("--lookback", type=int, help="window length in return observations")
    solve.add_argument("--rebalance", choices=("monthly", "quarterly", "annual"))
    solve.add_argument("--centering", choices=("on", "off"))
    solve.add_argument("--rf", type=float, help="annual risk-free rate")
    solve.add_argument("--periods-per-year", type=int)
    solve.add_argument("--seed", type=int)

    p = sub.add_parser("describe", parents=[common], help="per-asset return statistics")
    p.add_argument("--input", required=True)
    p.add_argument("--excess-kurtosis", action="store_const", const=True)

    p = sub.add_parser("weights", parents=[common, solve], help="single-window weights")
    p.add_argument("--input", required=True)
    p.add_argument("--window", help="'all' or 'last-N' returns (default last-252)")

    p = sub.add_parser("backtest", parents=[common, solve], help="rolling rebalance backtest")
    p.add_argument("--input", required=True)
    p.add_argument("--start", help="earliest rebalance date (YYYY-MM-DD)")
    p.add_argument("--drift", action="store_const", const=True,
                   help="let weights drift with prices between rebalances")

    sub.add_parser("selftest", help="run built-in oracle checks")
    return parser


COMMANDS = {
    "describe": cmd_describe,
    "weights": cmd_weights,
    "backtest": cmd_backtest,
    "selftest": cmd_selftest,
}


def main(argv: Optional[List[str]] = None) -> int:
    level = os.environ.get("CVRD_LOG")
    if level:
        logging.basicConfig(level=level.upper(), stream=sys.stderr,
                            format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        settings = _resolve(args)
        return COMMANDS[args.command](settings)
    except (CVRDError, OSError, ValueError) as exc:
        msg = " ".join(str(exc).split())
        print(f"cvrd {args.command}: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
