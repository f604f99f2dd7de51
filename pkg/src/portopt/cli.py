"""Command-line entry point.

Subcommands:
    run         full pipeline: ingest -> allocate -> backtest -> summary
    ingest      validate and clean price data, export wide CSVs per sector
    optimize    compute weight files only
    backtest    evaluate an existing weights file on train and test periods
    frontier    Monte-Carlo mean-variance samples only
    dendrogram  linkage-tree JSON export only
    report      assemble summary tables from existing report JSONs

Every subcommand honors --config (default from $PORTOPT_CONFIG), --seed, and
--out.  Exit codes: 0 success, 1 validation error, 2 data error, 3 partial
sector failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from portopt._version import __version__
from portopt.allocators import (
    AllocationError,
    read_weights_csv,
    write_frontier_csv,
    write_weights_csv,
)
from portopt.backtest import (
    BacktestError,
    evaluate,
    summarize,
    summary_to_csv,
    summary_winners_dict,
    write_report_json,
)
from portopt.config import KNOWN_METHODS, ConfigError, load_config
from portopt.hierclust import ClusterError, dendrogram_export
from portopt.market_data import (
    DataError,
    daily_returns,
    load_price_table,
    split_train_test,
    write_wide_csv,
)
from portopt.pipeline import (
    METHOD_LABELS,
    fit_method,
    prepare_sector,
    run_pipeline,
    sector_prices,
)
from portopt.riskstats import PerfMetrics, StatsError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_PARTIAL = 3


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="portopt",
        description="Long-only sector portfolio construction and backtesting.",
    )
    parser.add_argument("--version", action="version", version=f"portopt {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument(
            "--config",
            default=os.environ.get("PORTOPT_CONFIG"),
            help="path to the YAML run configuration "
            "(default: $PORTOPT_CONFIG)",
        )
        p.add_argument("--seed", type=int, help="override every method seed")
        p.add_argument("--out", help="override the configured output directory")

    common(sub.add_parser("run", help="run the full pipeline"))
    common(sub.add_parser("ingest", help="validate/clean data, export wide CSVs"))

    p = sub.add_parser("optimize", help="compute portfolio weights only")
    common(p)
    p.add_argument("--method", required=True, choices=KNOWN_METHODS)
    p.add_argument("--sector", help="restrict to one sector")

    p = sub.add_parser("backtest", help="evaluate a weights file on both periods")
    common(p)
    p.add_argument("--weights", required=True, help="weights CSV (ticker,weight)")
    p.add_argument("--label", default="portfolio", help="portfolio label in reports")

    p = sub.add_parser("frontier", help="export MVP Monte-Carlo samples")
    common(p)
    p.add_argument("--sector", help="restrict to one sector")

    p = sub.add_parser("dendrogram", help="export linkage trees as JSON")
    common(p)
    p.add_argument("--sector", help="restrict to one sector")

    p = sub.add_parser("report", help="assemble summary tables from report JSONs")
    common(p)
    p.add_argument(
        "--reports-dir",
        help="directory holding <sector>/<method>_<period>_report.json "
        "(default: the configured output directory)",
    )
    return parser


def _load_config(args):
    if not args.config:
        raise ConfigError("no configuration given (use --config or $PORTOPT_CONFIG)")
    cfg = load_config(args.config)
    if args.out:
        cfg.output_dir = Path(args.out)
    if args.seed is not None:
        for params in cfg.methods.values():
            params["seed"] = args.seed
    return cfg


def _sectors(cfg, args):
    requested = getattr(args, "sector", None)
    if requested is None:
        return sorted(cfg.sectors)
    if requested not in cfg.sectors:
        raise ConfigError(f"unknown sector {requested!r}")
    return [requested]


def _cmd_run(cfg, args):
    manifest = run_pipeline(cfg)
    for sector, message in sorted(manifest.failures.items()):
        print(f"sector {sector!r} failed: {message}", file=sys.stderr)
    print(f"manifest: {manifest.manifest_path}")
    return EXIT_PARTIAL if manifest.failures else EXIT_OK


def _cmd_ingest(cfg, args):
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for sector in _sectors(cfg, args):
        table = sector_prices(cfg, sector)
        path = out / f"{sector}_prices.csv"
        write_wide_csv(table, path, date_column=cfg.date_column)
        print(f"{sector}: {table.n_dates} dates x {len(table.tickers)} tickers -> {path}")
    return EXIT_OK


def _cmd_optimize(cfg, args):
    if args.method not in cfg.methods:
        cfg.methods[args.method] = {}
        if args.seed is not None:
            cfg.methods[args.method]["seed"] = args.seed
    out = Path(cfg.output_dir)
    for sector in _sectors(cfg, args):
        data = prepare_sector(cfg, sector)
        weights, _ = fit_method(cfg, args.method, data)
        sector_dir = out / sector
        sector_dir.mkdir(parents=True, exist_ok=True)
        path = sector_dir / f"{args.method}_weights.csv"
        write_weights_csv(weights, path)
        print(f"{sector}/{args.method}: {path}")
    return EXIT_OK


def _cmd_backtest(cfg, args):
    weights = read_weights_csv(args.weights)
    sources = {t: Path(cfg.data_dir) / f"{t}.csv" for t in weights.tickers}
    table = load_price_table(
        sources,
        date_column=cfg.date_column,
        close_column=cfg.close_column,
        align=cfg.align,
        require_start=cfg.train_start,
    ).restrict(cfg.train_start, cfg.test_end)
    train, test = split_train_test(table, cfg.train_end)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for period, prices in (("train", train), ("test", test)):
        report = evaluate(
            weights,
            daily_returns(prices),
            cfg.risk_free_rate,
            portfolio=args.label,
            period=period,
            annualization_days=cfg.annualization_days,
        )
        path = out / f"{args.label}_{period}_report.json"
        write_report_json(report, path)
        sharpe = "undefined" if report.metrics.sharpe is None else f"{report.metrics.sharpe:.4f}"
        print(
            f"{period}: return {report.metrics.annual_return:.4%} "
            f"vol {report.metrics.annual_volatility:.4%} sharpe {sharpe} -> {path}"
        )
    return EXIT_OK


def _cmd_frontier(cfg, args):
    if "mvp" not in cfg.methods:
        cfg.methods["mvp"] = {}
        if args.seed is not None:
            cfg.methods["mvp"]["seed"] = args.seed
    out = Path(cfg.output_dir)
    for sector in _sectors(cfg, args):
        data = prepare_sector(cfg, sector)
        _, result = fit_method(cfg, "mvp", data)
        sector_dir = out / sector
        sector_dir.mkdir(parents=True, exist_ok=True)
        path = sector_dir / "mvp_frontier.csv"
        write_frontier_csv(result, path)
        print(f"{sector}: {len(result.samples)} samples -> {path}")
    return EXIT_OK


def _cmd_dendrogram(cfg, args):
    out = Path(cfg.output_dir)
    for sector in _sectors(cfg, args):
        data = prepare_sector(cfg, sector)
        sector_dir = out / sector
        sector_dir.mkdir(parents=True, exist_ok=True)
        path = sector_dir / "dendrogram.json"
        payload = dendrogram_export(data.tree, data.train_returns.tickers)
        tmp = Path(str(path) + ".tmp")
        tmp.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        os.replace(tmp, path)
        print(f"{sector}: {path}")
    return EXIT_OK


def _cmd_report(cfg, args):
    reports_dir = Path(args.reports_dir) if args.reports_dir else Path(cfg.output_dir)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    methods = list(cfg.methods)
    order = tuple(METHOD_LABELS[m] for m in methods)
    for period in ("train", "test"):
        metrics = {}
        for sector in sorted(cfg.sectors):
            metrics[sector] = {}
            for method in methods:
                path = reports_dir / sector / f"{method}_{period}_report.json"
                try:
                    payload = json.loads(path.read_text(encoding="utf-8"))
                except OSError:
                    raise DataError(f"missing report file: {path}") from None
                m = payload["metrics"]
                metrics[sector][METHOD_LABELS[method]] = PerfMetrics(
                    m["annual_return"],
                    m["annual_volatility"],
                    m["sharpe"],
                    m.get("risk_free_rate", 0.0),
                )
        table = summarize(metrics, order)
        csv_path = out / f"summary_{period}.csv"
        tmp = Path(str(csv_path) + ".tmp")
        tmp.write_text(summary_to_csv(table), encoding="utf-8")
        os.replace(tmp, csv_path)
        winners_path = out / f"summary_{period}_winners.json"
        tmp = Path(str(winners_path) + ".tmp")
        tmp.write_text(
            json.dumps(summary_winners_dict(table), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        os.replace(tmp, winners_path)
        print(f"{period}: {csv_path}")
    return EXIT_OK


_COMMANDS = {
    "run": _cmd_run,
    "ingest": _cmd_ingest,
    "optimize": _cmd_optimize,
    "backtest": _cmd_backtest,
    "frontier": _cmd_frontier,
    "dendrogram": _cmd_dendrogram,
    "report": _cmd_report,
}


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args)
        return _COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, AllocationError, ClusterError, StatsError, BacktestError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
