"""Price-table ingestion, simple returns and descriptive statistics.

CSV layout is ``date,ASSET1,ASSET2,...`` with ISO dates and plain decimal
prices. Dates are treated as opaque ordered labels (no calendar logic).
"""
from __future__ import annotations

import csv
import io
import logging
import math
import os
from dataclasses import dataclass, field
from datetime import date
from typing import IO, Sequence, Union

import numpy as np

from .errors import IngestionError, InsufficientDataError, ValidationError

logger = logging.getLogger(__name__)

MISSING_POLICIES = ("forward-fill", "drop-row", "error")
_MISSING_TOKENS = {"", "na", "nan", "null", "none"}

Source = Union[str, bytes, os.PathLike, IO[str], IO[bytes]]


def _frozen(a, dtype=float) -> np.ndarray:
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Repair:
    """One cell or row touched by the missing-data policy."""

    row: int  # 1-based line number in the source file
    column: str
    action: str  # "forward-fill" or "drop-row"


@dataclass(frozen=True, eq=False)
class PriceTable:
    """Dated matrix of strictly positive prices, one column per asset."""

    dates: tuple
    assets: tuple
    prices: np.ndarray
    repairs: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "assets", tuple(str(a) for a in self.assets))
        object.__setattr__(self, "prices", _frozen(self.prices))
        object.__setattr__(self, "repairs", tuple(self.repairs))
        p = self.prices
        if p.ndim != 2 or p.shape != (len(self.dates), len(self.assets)):
            raise ValidationError(
                f"prices shape {p.shape} does not match "
                f"{len(self.dates)} dates x {len(self.assets)} assets"
            )
        if len(set(self.assets)) != len(self.assets):
            raise ValidationError(f"duplicate asset identifiers in {self.assets}")
        for a, b in zip(self.dates, self.dates[1:]):
            if not a < b:
                raise ValidationError(f"dates not strictly increasing at {a} -> {b}")
        bad = np.argwhere(~np.isfinite(p) | (p <= 0))
        if len(bad):
            i, j = bad[0]
            raise ValidationError(
                f"price at date {self.dates[i]}, asset {self.assets[j]} "
                f"must be finite and > 0, got {p[i, j]!r}"
            )

    @property
    def n_assets(self) -> int:
        return len(self.assets)

    def __len__(self) -> int:
        return len(self.dates)

    def equals(self, other: "PriceTable") -> bool:
        return (
            self.dates == other.dates
            and self.assets == other.assets
            and np.array_equal(self.prices, other.prices)
        )

    def truncate(self, last_date) -> "PriceTable":
        """Rows with date <= ``last_date``."""
        n = sum(1 for d in self.dates if d <= last_date)
        return PriceTable(self.dates[:n], self.assets, self.prices[:n])

    def select(self, assets: Sequence[str]) -> "PriceTable":
        idx = [self.assets.index(a) for a in assets]
        return PriceTable(self.dates, assets, self.prices[:, idx])

    def to_csv(self, stream=None) -> str:
        """Write the table in the ingestion schema; floats use repr for exact round trips."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["date", *self.assets])
        for d, row in zip(self.dates, self.prices):
            w.writerow([d.isoformat(), *(repr(float(x)) for x in row)])
        text = buf.getvalue()
        if stream is not None:
            stream.write(text)
        return text


@dataclass(frozen=True, eq=False)
class ReturnMatrix:
    """Simple returns; row ``t`` is labelled with the date the return is realised."""

    assets: tuple
    returns: np.ndarray
    period_dates: tuple

    def __post_init__(self):
        object.__setattr__(self, "assets", tuple(self.assets))
        object.__setattr__(self, "period_dates", tuple(self.period_dates))
        r = _frozen(self.returns)
        if r.ndim == 1:
            r = _frozen(r.reshape(-1, 1))
        object.__setattr__(self, "returns", r)
        if r.shape != (len(self.period_dates), len(self.assets)):
            raise ValidationError(
                f"returns shape {r.shape} does not match "
                f"{len(self.period_dates)} dates x {len(self.assets)} assets"
            )
        if not np.all(np.isfinite(r)) or np.any(r <= -1.0):
            raise ValidationError("returns must be finite and > -1")

    def __len__(self) -> int:
        return self.returns.shape[0]

    @property
    def n_assets(self) -> int:
        return len(self.assets)

    def window(self, start: int, stop: int) -> "ReturnMatrix":
        return ReturnMatrix(
            self.assets, self.returns[start:stop], self.period_dates[start:stop]
        )


@dataclass(frozen=True, eq=False)
class AssetStats:
    """Per-asset moments. ``kurtosis`` is non-excess unless ``excess_kurtosis``."""

    assets: tuple
    mean: np.ndarray
    std: np.ndarray
    skewness: np.ndarray
    kurtosis: np.ndarray
    n_obs: int
    excess_kurtosis: bool = False
    undefined: tuple = ()  # assets with zero variance: skew/kurt are NaN

    def rows(self):
        for i, a in enumerate(self.assets):
            yield a, self.mean[i], self.std[i], self.skewness[i], self.kurtosis[i]


def _open_text(source: Source) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, (str, os.PathLike)):
        if isinstance(source, str) and "\n" in source:
            return source
        with open(source, encoding="utf-8", newline="") as fh:
            return fh.read()
    text = source.read()
    return text.decode("utf-8") if isinstance(text, bytes) else text


def _parse_date(raw: str, line: int) -> date:
    try:
        return date.fromisoformat(raw.strip())
    except ValueError:
        raise IngestionError(
            f"line {line}, column 'date': unparsable date {raw!r}", row=line, column="date"
        ) from None


def load_price_table(source: Source, missing: str = "forward-fill") -> PriceTable:
    """Parse a price CSV into a validated :class:`PriceTable`.

    Parameters
    ----------
    source : path, CSV text, bytes or file object
        UTF-8 CSV with a header row ``date,ASSET1,...``.
    missing : {"forward-fill", "drop-row", "error"}
        What to do with empty cells. Forward-fill copies the previous row's
        value; leading rows that cannot be filled are dropped.

    Returns
    -------
    PriceTable
        Rows sorted by date. ``repairs`` lists every filled cell or dropped row.
    """
    if missing not in MISSING_POLICIES:
        raise ValueError(f"missing policy must be one of {MISSING_POLICIES}, got {missing!r}")
    reader = csv.reader(io.StringIO(_open_text(source)))
    try:
        header = next(reader)
    except StopIteration:
        raise InsufficientDataError("empty price file") from None
    header = [h.strip() for h in header]
    if len(header) < 2 or header[0].lower() != "date":
        raise IngestionError("header must be 'date,ASSET1,...'", row=1)
    assets = header[1:]
    if len(set(assets)) != len(assets):
        raise ValidationError(f"duplicate asset identifiers in header: {assets}")

    records = []  # (date, line, values with None for missing)
    for line, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise IngestionError(
                f"line {line}: expected {len(header)} fields, got {len(row)}", row=line
            )
        d = _parse_date(row[0], line)
        values = []
        for name, cell in zip(assets, row[1:]):
            cell = cell.strip()
            if cell.lower() in _MISSING_TOKENS:
                values.append(None)
                continue
            try:
                values.append(float(cell))
            except ValueError:
                raise IngestionError(
                    f"line {line}, column {name!r}: unparsable number {cell!r}",
                    row=line,
                    column=name,
                ) from None
        records.append((d, line, values))

    records.sort(key=lambda r: r[0])
    repairs = []
    rows, dates = [], []
    prev = [None] * len(assets)
    for d, line, values in records:
        holes = [j for j, v in enumerate(values) if v is None]
        if holes:
            if missing == "error":
                raise IngestionError(
                    f"line {line}, column {assets[holes[0]]!r}: missing value",
                    row=line,
                    column=assets[holes[0]],
                )
            if missing == "drop-row" or any(prev[j] is None for j in holes):
                repairs.append(Repair(line, "*", "drop-row"))
                logger.info("dropped line %d (missing values)", line)
                continue
            for j in holes:
                values[j] = prev[j]
                repairs.append(Repair(line, assets[j], "forward-fill"))
        if dates and d == dates[-1]:
            raise ValidationError(f"duplicate date {d} (line {line})")
        dates.append(d)
        rows.append(values)
        prev = values

    if len(rows) < 2:
        raise InsufficientDataError(f"need at least 2 price rows, got {len(rows)}")
    prices = np.array(rows, dtype=float)
    bad = np.argwhere(~np.isfinite(prices) | (prices <= 0))
    if len(bad):
        i, j = bad[0]
        raise ValidationError(
            f"date {dates[i]}, column {assets[j]!r}: price must be finite and > 0, "
            f"got {prices[i, j]!r}"
        )
    return PriceTable(dates, assets, prices, repairs)


def compute_returns(table: PriceTable) -> ReturnMatrix:
    """Simple returns ``(p[t+1] - p[t]) / p[t]`` for every asset."""
    p = table.prices
    if p.shape[0] < 2:
        raise InsufficientDataError("need at least 2 price rows")
    r = (p[1:] - p[:-1]) / p[:-1]
    return ReturnMatrix(table.assets, r, table.dates[1:])


def describe(returns: Union[ReturnMatrix, np.ndarray], excess_kurtosis: bool = False,
             assets: Sequence[str] | None = None) -> AssetStats:
    """Mean, sample std (n-1), skewness and kurtosis for each column.

    Skewness and kurtosis are the biased standardized moments ``m3/m2**1.5``
    and ``m4/m2**2`` (population central moments). Kurtosis is non-excess
    by default. Zero-variance columns report NaN for both and are listed in
    ``undefined``.
    """
    if isinstance(returns, ReturnMatrix):
        x, assets = returns.returns, returns.assets
    else:
        x = np.asarray(returns, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        assets = tuple(assets) if assets is not None else tuple(f"A{i}" for i in range(x.shape[1]))
    n = x.shape[0]
    if n < 4:
        raise InsufficientDataError(f"describe needs at least 4 return rows, got {n}")
    flat = np.ptp(x, axis=0) == 0
    mean = np.array([c[0] if f else math.fsum(c) / n for c, f in zip(x.T, flat)])
    dev = x - mean
    d2 = dev * dev  # products rather than powers keep odd moments sign-symmetric
    m2 = np.array([math.fsum(c) / n for c in d2.T])
    m3 = np.array([math.fsum(c) / n for c in (d2 * dev).T])
    m4 = np.array([math.fsum(c) / n for c in (d2 * d2).T])
    std = np.sqrt(m2 * n / (n - 1))
    with np.errstate(divide="ignore", invalid="ignore"):
        skew = np.where(flat, np.nan, m3 / m2**1.5)
        kurt = np.where(flat, np.nan, m4 / m2**2)
    if excess_kurtosis:
        kurt = kurt - 3.0
    return AssetStats(
        assets=tuple(assets),
        mean=_frozen(mean),
        std=_frozen(std),
        skewness=_frozen(skew),
        kurtosis=_frozen(kurt),
        n_obs=n,
        excess_kurtosis=excess_kurtosis,
        undefined=tuple(a for a, f in zip(assets, flat) if f),
    )
