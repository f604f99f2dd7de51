"""Price panel ingestion, cleaning, train/test splitting, and daily returns.

Input data is one CSV per ticker (date column plus a close column) or a single
wide CSV (date column plus one close column per ticker). After loading, all
tickers share one calendar: by default the intersection of each ticker's
dates; a forward-fill mode is available for callers that prefer to carry the
last known price across gaps.
"""

from __future__ import annotations

import csv
import datetime as dt
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np


class DataError(Exception):
    """Price data could not be parsed or violates a panel invariant."""


def _parse_date(raw, path, line_no, column):
    try:
        return dt.date.fromisoformat(str(raw).strip())
    except ValueError:
        raise DataError(
            f"{path}: line {line_no}, column {column!r}: "
            f"unparsable date {raw!r} (expected YYYY-MM-DD)"
        ) from None


def _parse_price(raw, path, line_no, column):
    try:
        value = float(str(raw).strip())
    except (TypeError, ValueError):
        raise DataError(
            f"{path}: line {line_no}, column {column!r}: unparsable price {raw!r}"
        ) from None
    if not math.isfinite(value) or value <= 0.0:
        raise DataError(
            f"{path}: line {line_no}, column {column!r}: "
            f"price must be positive and finite, got {raw!r}"
        )
    return value


@dataclass(frozen=True)
class PriceTable:
    """Date-aligned close-price panel: one row per date, one column per ticker."""

    dates: tuple
    tickers: tuple
    closes: np.ndarray

    def __post_init__(self):
        dates = tuple(self.dates)
        tickers = tuple(self.tickers)
        closes = np.asarray(self.closes, dtype=float)
        if closes.shape != (len(dates), len(tickers)):
            raise DataError(
                f"close matrix shape {closes.shape} does not match "
                f"{len(dates)} dates x {len(tickers)} tickers"
            )
        if len(set(tickers)) != len(tickers):
            raise DataError("duplicate tickers in price table")
        for a, b in zip(dates, dates[1:]):
            if not a < b:
                raise DataError(f"dates not strictly increasing at {a} -> {b}")
        if closes.size and (not np.all(np.isfinite(closes)) or np.any(closes <= 0.0)):
            raise DataError("all prices must be strictly positive and finite")
        closes.setflags(write=False)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "tickers", tickers)
        object.__setattr__(self, "closes", closes)

    @property
    def n_dates(self):
        return len(self.dates)

    def restrict(self, start=None, end=None):
        """Return the sub-panel with start <= date <= end."""
        keep = [
            i
            for i, d in enumerate(self.dates)
            if (start is None or d >= start) and (end is None or d <= end)
        ]
        if not keep:
            raise DataError(f"no dates remain in range [{start}, {end}]")
        return PriceTable(
            tuple(self.dates[i] for i in keep), self.tickers, self.closes[keep, :]
        )


@dataclass(frozen=True)
class ReturnMatrix:
    """Daily simple returns; row t is the return from date t to date t+1."""

    dates: tuple
    tickers: tuple
    returns: np.ndarray

    def __post_init__(self):
        dates = tuple(self.dates)
        tickers = tuple(self.tickers)
        returns = np.asarray(self.returns, dtype=float)
        if returns.shape != (len(dates), len(tickers)):
            raise DataError(
                f"return matrix shape {returns.shape} does not match "
                f"{len(dates)} dates x {len(tickers)} tickers"
            )
        if returns.size and (
            not np.all(np.isfinite(returns)) or np.any(returns <= -1.0)
        ):
            raise DataError("all returns must be finite and greater than -1")
        returns.setflags(write=False)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "tickers", tickers)
        object.__setattr__(self, "returns", returns)


def _read_close_series(path, date_column, close_column):
    """Parse one per-ticker CSV into an ordered {date: close} mapping."""
    path = Path(path)
    try:
        handle = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{path}: cannot read file: {exc}") from None
    series = {}
    with handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            raise DataError(f"{path}: empty file (header row required)")
        for column in (date_column, close_column):
            if column not in reader.fieldnames:
                raise DataError(
                    f"{path}: missing column {column!r} "
                    f"(found {list(reader.fieldnames)})"
                )
        for row in reader:
            line_no = reader.line_num
            date = _parse_date(row[date_column], path, line_no, date_column)
            if date in series:
                raise DataError(f"{path}: line {line_no}: duplicate date {date}")
            series[date] = _parse_price(row[close_column], path, line_no, close_column)
    if not series:
        raise DataError(f"{path}: no data rows")
    return dict(sorted(series.items()))


def load_price_table(
    sources,
    *,
    date_column="Date",
    close_column="Close",
    align="intersect",
    require_start=None,
):
    """Load per-ticker CSVs into a single aligned PriceTable.

    sources maps ticker -> CSV path (or is an iterable of (ticker, path)
    pairs).  Column order follows the source order.  align='intersect' keeps
    only dates present for every ticker; align='ffill' keeps the union of
    dates and forward-fills gaps, rejecting tickers whose history starts after
    the first date of the union calendar.  When require_start is given, any
    ticker whose history begins after that date is rejected (insufficient
    history is a data-curation problem, not something to patch silently).
    """
    if isinstance(sources, Mapping):
        pairs = list(sources.items())
    else:
        pairs = list(sources)
    if not pairs:
        raise DataError("no price sources given")
    if align not in ("intersect", "ffill"):
        raise DataError(f"unknown alignment policy {align!r}")

    per_ticker = {}
    for ticker, path in pairs:
        if ticker in per_ticker:
            raise DataError(f"duplicate ticker {ticker!r} in sources")
        series = _read_close_series(path, date_column, close_column)
        if require_start is not None and min(series) > require_start:
            raise DataError(
                f"ticker {ticker!r} has no history on or before {require_start} "
                f"(first date {min(series)})"
            )
        per_ticker[ticker] = series

    if align == "intersect":
        common = None
        for series in per_ticker.values():
            keys = set(series)
            common = keys if common is None else common & keys
        if not common:
            raise DataError(
                "no common dates across tickers "
                f"({', '.join(per_ticker)}); empty overlap"
            )
        dates = sorted(common)
    else:
        union = set()
        for series in per_ticker.values():
            union |= set(series)
        dates = sorted(union)
        for ticker, series in per_ticker.items():
            if min(series) > dates[0]:
                raise DataError(
                    f"ticker {ticker!r} has no price on or before {dates[0]}; "
                    "insufficient history for forward-fill alignment"
                )

    tickers = list(per_ticker)
    closes = np.empty((len(dates), len(tickers)))
    for j, ticker in enumerate(tickers):
        series = per_ticker[ticker]
        last = None
        for i, date in enumerate(dates):
            if date in series:
                last = series[date]
            closes[i, j] = last
    return PriceTable(tuple(dates), tuple(tickers), closes)


def load_wide_csv(path, *, date_column="Date"):
    """Load a wide CSV (date column plus one close column per ticker)."""
    path = Path(path)
    try:
        handle = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{path}: cannot read file: {exc}") from None
    with handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file (header row required)") from None
        if not header or header[0] != date_column:
            raise DataError(
                f"{path}: first column must be {date_column!r}, got {header[:1]}"
            )
        tickers = tuple(header[1:])
        if not tickers:
            raise DataError(f"{path}: no ticker columns")
        dates, rows = [], []
        for row in reader:
            line_no = reader.line_num
            if len(row) != len(header):
                raise DataError(
                    f"{path}: line {line_no}: expected {len(header)} cells, "
                    f"got {len(row)}"
                )
            dates.append(_parse_date(row[0], path, line_no, date_column))
            rows.append(
                [
                    _parse_price(cell, path, line_no, ticker)
                    for cell, ticker in zip(row[1:], tickers)
                ]
            )
    if not rows:
        raise DataError(f"{path}: no data rows")
    return PriceTable(tuple(dates), tickers, np.array(rows))


def write_wide_csv(table, path, *, date_column="Date"):
    """Export a PriceTable as a wide CSV; output is bit-identical across runs."""
    lines = [",".join([date_column, *table.tickers])]
    for date, row in zip(table.dates, table.closes):
        lines.append(",".join([date.isoformat(), *(format(x, ".12g") for x in row)]))
    text = "\n".join(lines) + "\n"
    tmp = Path(str(path) + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def split_train_test(table, boundary):
    """Split a PriceTable at a boundary date: dates <= boundary vs dates after."""
    if table.n_dates < 2:
        raise DataError("price table too short to split")
    first, last = table.dates[0], table.dates[-1]
    if boundary < first or boundary >= last:
        raise DataError(
            f"boundary {boundary} must lie strictly inside [{first}, {last}]"
        )
    cut = sum(1 for d in table.dates if d <= boundary)
    if cut == 0 or cut == table.n_dates:
        raise DataError(f"boundary {boundary} leaves one side of the split empty")
    head = PriceTable(table.dates[:cut], table.tickers, table.closes[:cut, :])
    tail = PriceTable(table.dates[cut:], table.tickers, table.closes[cut:, :])
    return head, tail


def daily_returns(table):
    """Daily simple returns r[t][i] = closes[t+1][i] / closes[t][i] - 1."""
    if table.n_dates < 2:
        raise DataError("need at least 2 dates to compute returns")
    returns = table.closes[1:, :] / table.closes[:-1, :] - 1.0
    return ReturnMatrix(table.dates[1:], table.tickers, returns)
