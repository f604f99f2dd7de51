"""End-to-end run: ingest prices, fit each allocator per sector on training
returns, evaluate on both periods, and write weights, plot data, reports, and
cross-sector summary tables plus a JSON manifest of every artifact.

Sectors are processed independently: a failure in one sector is recorded in
the manifest and does not abort the run.  All outputs are written atomically
(temp file + rename) and are byte-identical across reruns for fixed seeds.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

from portopt._version import __version__
from portopt.allocators import (
    AllocationError,
    HercParams,
    herc_allocate,
    hrp_allocate,
    mvp_optimize,
    write_frontier_csv,
    write_weights_csv,
)
from portopt.backtest import (
    evaluate,
    summarize,
    summary_to_csv,
    summary_winners_dict,
    write_report_json,
)
from portopt.hierclust import ClusterError, agglomerate, dendrogram_export
from portopt.market_data import (
    DataError,
    daily_returns,
    load_price_table,
    split_train_test,
)
from portopt.riskstats import (
    StatsError,
    corr_to_distance,
    correlation,
    covariance,
    expected_returns,
)

METHOD_LABELS = {"mvp": "MVP", "hrp": "HRP", "herc": "HERC"}

SECTOR_ERRORS = (AllocationError, ClusterError, DataError, StatsError)


class SectorData(NamedTuple):
    """Per-sector inputs shared by every allocator."""

    prices: object
    train_returns: object
    test_returns: object
    cov: object
    tree: object


@dataclass
class RunManifest:
    """Record of one pipeline run: config echo, seeds, artifact paths, failures."""

    version: str
    config: dict
    seeds: dict
    outputs: dict = field(default_factory=dict)
    summaries: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)
    manifest_path: str | None = None

    def to_dict(self):
        return {
            "version": self.version,
            "config": self.config,
            "seeds": self.seeds,
            "outputs": self.outputs,
            "summaries": self.summaries,
            "failures": self.failures,
        }


def sector_prices(cfg, sector):
    """Load and clean the price panel for one sector over the study window."""
    tickers = cfg.sectors[sector]
    sources = {t: Path(cfg.data_dir) / f"{t}.csv" for t in tickers}
    table = load_price_table(
        sources,
        date_column=cfg.date_column,
        close_column=cfg.close_column,
        align=cfg.align,
        require_start=cfg.train_start,
    )
    return table.restrict(cfg.train_start, cfg.test_end)


def prepare_sector(cfg, sector):
    """Load prices, split train/test, and precompute shared statistics."""
    prices = sector_prices(cfg, sector)
    train, test = split_train_test(prices, cfg.train_end)
    train_returns = daily_returns(train)
    test_returns = daily_returns(test)
    cov = covariance(train_returns)
    tree = agglomerate(corr_to_distance(correlation(train_returns)), cfg.linkage_rule)
    return SectorData(prices, train_returns, test_returns, cov, tree)


def method_seed(cfg, method):
    return int(cfg.methods.get(method, {}).get("seed", 0))


def fit_method(cfg, method, data):
    """Fit one allocator on the training data.

    Returns (weights, mvp_result) where mvp_result is None for hrp/herc.
    """
    params = cfg.methods.get(method, {})
    if method == "mvp":
        mu = expected_returns(data.train_returns, cfg.annualization_days)
        result = mvp_optimize(
            mu,
            data.cov,
            n_samples=int(params.get("n_samples", 10000)),
            risk_free_rate=cfg.risk_free_rate,
            seed=method_seed(cfg, "mvp"),
        )
        return result.max_sharpe.weights, result
    if method == "hrp":
        return hrp_allocate(data.cov, data.tree), None
    if method == "herc":
        herc = HercParams(
            k=params.get("k", "auto"),
            risk_measure=params.get("risk_measure", "std_dev"),
            cluster_weighting=params.get("cluster_weighting", "inverse"),
            gap_k_max=params.get("gap_k_max"),
            gap_b_refs=int(params.get("gap_b_refs", 100)),
            gap_seed=method_seed(cfg, "herc"),
        )
        return herc_allocate(data.cov, data.tree, herc, data.train_returns), None
    raise AllocationError(f"unknown method {method!r}")


def _write_json(path, payload):
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    tmp = Path(str(path) + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def run_pipeline(cfg):
    """Run the full study described by cfg and return the RunManifest."""
    out_root = Path(cfg.output_dir)
    out_root.mkdir(parents=True, exist_ok=True)
    methods = list(cfg.methods)

    manifest = RunManifest(
        version=__version__,
        config=cfg.echo(),
        seeds={m: method_seed(cfg, m) for m in methods},
    )
    train_metrics = {}
    test_metrics = {}

    for sector in sorted(cfg.sectors):
        sector_dir = out_root / sector
        try:
            data = prepare_sector(cfg, sector)
            sector_dir.mkdir(parents=True, exist_ok=True)
            sector_out = {}
            sector_train = {}
            sector_test = {}
            for method in methods:
                label = METHOD_LABELS[method]
                weights, mvp_result = fit_method(cfg, method, data)
                paths = {}

                weights_path = sector_dir / f"{method}_weights.csv"
                write_weights_csv(weights, weights_path)
                paths["weights"] = str(weights_path)

                if method == "mvp":
                    frontier_path = sector_dir / "mvp_frontier.csv"
                    write_frontier_csv(mvp_result, frontier_path)
                    paths["frontier"] = str(frontier_path)
                else:
                    dendro_path = sector_dir / f"{method}_dendrogram.json"
                    _write_json(
                        dendro_path,
                        dendrogram_export(data.tree, data.train_returns.tickers),
                    )
                    paths["dendrogram"] = str(dendro_path)

                for period, returns in (
                    ("train", data.train_returns),
                    ("test", data.test_returns),
                ):
                    report = evaluate(
                        weights,
                        returns,
                        cfg.risk_free_rate,
                        portfolio=f"{sector}/{label}",
                        period=period,
                        annualization_days=cfg.annualization_days,
                    )
                    report_path = sector_dir / f"{method}_{period}_report.json"
                    write_report_json(report, report_path)
                    paths[f"{period}_report"] = str(report_path)
                    if period == "train":
                        sector_train[label] = report.metrics
                    else:
                        sector_test[label] = report.metrics

                sector_out[method] = paths
            manifest.outputs[sector] = sector_out
            train_metrics[sector] = sector_train
            test_metrics[sector] = sector_test
        except SECTOR_ERRORS as exc:
            manifest.failures[sector] = str(exc)

    if train_metrics:
        order = tuple(METHOD_LABELS[m] for m in methods)
        for period, metrics in (("train", train_metrics), ("test", test_metrics)):
            table = summarize(metrics, order)
            csv_path = out_root / f"summary_{period}.csv"
            tmp = Path(str(csv_path) + ".tmp")
            tmp.write_text(summary_to_csv(table), encoding="utf-8")
            os.replace(tmp, csv_path)
            winners_path = out_root / f"summary_{period}_winners.json"
            _write_json(winners_path, summary_winners_dict(table))
            manifest.summaries[period] = {
                "table": str(csv_path),
                "winners": str(winners_path),
            }

    manifest_path = out_root / "manifest.json"
    _write_json(manifest_path, manifest.to_dict())
    manifest.manifest_path = str(manifest_path)
    return manifest
