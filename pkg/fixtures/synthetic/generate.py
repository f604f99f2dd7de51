"""Regenerate the synthetic two-sector price fixture.

Six tickers over 2020-2021 weekdays, geometric random walks with a common
factor per sector so clustering has real block structure.  Deterministic:
rerunning this script reproduces the CSVs byte for byte.

Usage: python3 generate.py  (writes into ./data next to this file)
"""

import datetime as dt
import math
from pathlib import Path

import numpy as np

HERE = Path(__file__).parent
SECTORS = {
    "alpha": ["AAA", "AAB", "AAC"],
    "beta": ["BBA", "BBB", "BBC"],
}
START = dt.date(2020, 1, 1)
END = dt.date(2021, 12, 31)
SEED = 20240101


def weekdays(start, end):
    day, out = start, []
    while day <= end:
        if day.weekday() < 5:
            out.append(day)
        day += dt.timedelta(days=1)
    return out


def main():
    dates = weekdays(START, END)
    t = len(dates)
    rng = np.random.default_rng(SEED)
    out_dir = HERE / "data"
    out_dir.mkdir(exist_ok=True)

    for s, (sector, tickers) in enumerate(sorted(SECTORS.items())):
        factor = rng.standard_normal(t)
        for j, ticker in enumerate(tickers):
            noise = rng.standard_normal(t)
            vol = 0.010 + 0.004 * j
            drift = 0.0002 + 0.0001 * s
            daily = drift + vol * (0.8 * factor + 0.6 * noise)
            prices = 100.0 * np.exp(np.cumsum(np.log1p(np.clip(daily, -0.5, 0.5))))
            lines = ["Date,Close"]
            for date, price in zip(dates, prices):
                lines.append(f"{date.isoformat()},{price:.4f}")
            (out_dir / f"{ticker}.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {sum(len(v) for v in SECTORS.values())} tickers x {t} dates to {out_dir}")


if __name__ == "__main__":
    main()
