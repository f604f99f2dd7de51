"""Long-only weight allocators: inverse variance, Monte-Carlo mean-variance,
HRP recursive bisection, and HERC top-down risk-contribution allocation.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from portopt.hierclust import gap_optimal_k, quasi_diagonalize
from portopt.riskstats import sharpe_ratio

RISK_MEASURES = ("std_dev", "variance")
CLUSTER_WEIGHTINGS = ("inverse", "paper_literal")


class AllocationError(Exception):
    """Allocator received degenerate or mismatched inputs."""


@dataclass(frozen=True)
class WeightVector:
    """Long-only allocation: non-negative weights summing to 1."""

    tickers: tuple
    weights: np.ndarray

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float)
        if weights.shape != (len(self.tickers),):
            raise AllocationError(
                f"{weights.shape[0] if weights.ndim == 1 else '?'} weights for "
                f"{len(self.tickers)} tickers"
            )
        if not np.all(np.isfinite(weights)):
            raise AllocationError("weights must be finite")
        if np.min(weights, initial=0.0) < -1e-12:
            raise AllocationError(f"negative weight {weights.min()}")
        if abs(weights.sum() - 1.0) > 1e-9:
            raise AllocationError(f"weights sum to {weights.sum()}, expected 1")
        weights = np.maximum(weights, 0.0)
        weights.setflags(write=False)
        object.__setattr__(self, "tickers", tuple(self.tickers))
        object.__setattr__(self, "weights", weights)

    def as_dict(self):
        return {t: float(w) for t, w in zip(self.tickers, self.weights)}


@dataclass(frozen=True)
class FrontierSample:
    """One random candidate portfolio with its annualized metrics."""

    weights: WeightVector
    annual_return: float
    annual_volatility: float
    sharpe: float | None


@dataclass(frozen=True)
class MvpResult:
    """All Monte-Carlo samples plus the max-Sharpe, min-vol, and Pareto subset."""

    samples: tuple
    max_sharpe: FrontierSample
    min_vol: FrontierSample
    frontier: tuple


@dataclass(frozen=True)
class HercParams:
    """HERC configuration: cluster count, risk measure, and split direction.

    cluster_weighting='inverse' gives the lower-risk subtree the larger
    weight (W1 = 1 - R1/(R1+R2)); 'paper_literal' uses W1 = R1/(R1+R2).
    k='auto' selects the cluster count with the gap statistic.
    """

    k: int | str = "auto"
    risk_measure: str = "std_dev"
    cluster_weighting: str = "inverse"
    gap_k_max: int | None = None
    gap_b_refs: int = 100
    gap_seed: int = 0

    def __post_init__(self):
        if self.k != "auto" and (not isinstance(self.k, int) or self.k < 1):
            raise AllocationError(f"k must be 'auto' or a positive int, got {self.k!r}")
        if self.risk_measure not in RISK_MEASURES:
            raise AllocationError(f"unknown risk measure {self.risk_measure!r}")
        if self.cluster_weighting not in CLUSTER_WEIGHTINGS:
            raise AllocationError(
                f"unknown cluster weighting {self.cluster_weighting!r}"
            )


def ivp_weights(cov):
    """Inverse-variance weights w_i = (1/s_i^2) / sum_j (1/s_j^2)."""
    variances = np.diag(cov.values)
    for ticker, v in zip(cov.tickers, variances):
        if v <= 0.0:
            raise AllocationError(f"ticker {ticker!r} has zero variance")
    inv = 1.0 / variances
    return WeightVector(cov.tickers, inv / inv.sum())


def cluster_variance(cov, members):
    """Variance of the inverse-variance allocation over a member subset."""
    members = list(members)
    if not members:
        raise AllocationError("empty member set")
    sub = cov.values[np.ix_(members, members)]
    variances = np.diag(sub)
    for idx, v in zip(members, variances):
        if v <= 0.0:
            raise AllocationError(f"ticker {cov.tickers[idx]!r} has zero variance")
    inv = 1.0 / variances
    w = inv / inv.sum()
    return float(w @ sub @ w)


def hrp_allocate(cov, tree):
    """Hierarchical risk parity via recursive bisection.

    Leaves are taken in quasi-diagonal order and recursively split into two
    contiguous halves (left half = ceil(m/2) leaves); each half's running
    weight scales inversely with its cluster variance.
    """
    n = len(cov.tickers)
    if tree.n_leaves != n:
        raise AllocationError(
            f"tree has {tree.n_leaves} leaves but covariance has {n} assets"
        )
    order = quasi_diagonalize(tree)
    weights = np.ones(n)
    groups = [order]
    while groups:
        next_groups = []
        for group in groups:
            if len(group) < 2:
                continue
            half = (len(group) + 1) // 2
            left, right = group[:half], group[half:]
            v_left = cluster_variance(cov, left)
            v_right = cluster_variance(cov, right)
            alpha = 1.0 - v_left / (v_left + v_right)
            weights[left] *= alpha
            weights[right] *= 1.0 - alpha
            next_groups += [left, right]
        groups = next_groups
    return WeightVector(cov.tickers, weights / weights.sum())


def _member_risks(cov, risk_measure):
    variances = np.diag(cov.values)
    for ticker, v in zip(cov.tickers, variances):
        if v <= 0.0:
            raise AllocationError(f"ticker {ticker!r} has zero risk")
    return np.sqrt(variances) if risk_measure == "std_dev" else variances.copy()


def herc_allocate(cov, tree, params=None, returns=None):
    """Hierarchical equal risk contribution allocation.

    Splits weight top-down through the k-1 highest merges in proportion to
    subtree risk (direction per params.cluster_weighting), then applies naive
    risk parity (weights proportional to 1/risk) inside each of the k final
    clusters; final asset weight = cluster weight x naive-parity weight.
    A cluster's risk is the sum of its members' risks.

    returns is required when params.k == 'auto' (the gap statistic runs on
    the training return panel).
    """
    params = params or HercParams()
    n = len(cov.tickers)
    if tree.n_leaves != n:
        raise AllocationError(
            f"tree has {tree.n_leaves} leaves but covariance has {n} assets"
        )

    if params.k == "auto":
        if returns is None:
            raise AllocationError("k='auto' needs the return panel for the gap statistic")
        k = gap_optimal_k(
            returns,
            k_max=params.gap_k_max,
            b_refs=params.gap_b_refs,
            seed=params.gap_seed,
        )
    else:
        k = params.k
    if not 1 <= k <= n:
        raise AllocationError(f"k={k} out of range 1..{n}")

    risks = _member_risks(cov, params.risk_measure)
    node_risk = {i: float(risks[i]) for i in range(n)}
    for m, merge in enumerate(tree.merges):
        node_risk[n + m] = node_risk[merge.left] + node_risk[merge.right]

    # walk the top k-1 merges root-first, splitting weight between subtrees
    cluster_weight = {tree.root: 1.0}
    for m in reversed(range(n - k, n - 1)):
        merge = tree.merges[m]
        total = cluster_weight.pop(n + m)
        r1, r2 = node_risk[merge.left], node_risk[merge.right]
        frac = r1 / (r1 + r2)
        if params.cluster_weighting == "inverse":
            frac = 1.0 - frac
        cluster_weight[merge.left] = total * frac
        cluster_weight[merge.right] = total * (1.0 - frac)

    weights = np.zeros(n)
    for node, cw in cluster_weight.items():
        members = tree.leaves_under(node)
        inv = 1.0 / risks[members]
        weights[members] = cw * inv / inv.sum()
    return WeightVector(cov.tickers, weights)


def mvp_optimize(mu, cov, n_samples=10000, risk_free_rate=0.0, seed=0):
    """Monte-Carlo mean-variance search over random simplex weights.

    Draws n_samples weight vectors (independent uniforms normalized by their
    sum), scores each with annualized return, volatility, and Sharpe ratio,
    and reports the max-Sharpe sample, the min-volatility sample, and the
    Pareto-nondominated frontier.  Deterministic for a fixed seed; argmax and
    argmin ties break on the lowest sample index.
    """
    if tuple(mu.tickers) != tuple(cov.tickers):
        raise AllocationError(
            f"return tickers {mu.tickers} do not match covariance tickers {cov.tickers}"
        )
    if n_samples < 1:
        raise AllocationError("n_samples must be at least 1")
    n = len(mu.tickers)

    rng = np.random.default_rng(seed)
    draws = rng.random((n_samples, n))
    weights = draws / draws.sum(axis=1, keepdims=True)

    rets = weights @ mu.mu_annual
    daily_var = np.einsum("ij,jk,ik->i", weights, cov.values, weights)
    vols = np.sqrt(mu.annualization_days * np.maximum(daily_var, 0.0))

    samples = tuple(
        FrontierSample(
            WeightVector(mu.tickers, w),
            float(r),
            float(v),
            sharpe_ratio(float(r), float(v), risk_free_rate),
        )
        for w, r, v in zip(weights, rets, vols)
    )

    sharpe_keys = np.array(
        [-math.inf if s.sharpe is None else s.sharpe for s in samples]
    )
    max_sharpe = samples[int(np.argmax(sharpe_keys))]
    min_vol = samples[int(np.argmin(vols))]

    # Pareto scan: dominated iff another sample has strictly lower volatility
    # and strictly higher return
    order = sorted(range(n_samples), key=lambda i: (vols[i], i))
    frontier_idx = []
    best_below = -math.inf
    pos = 0
    while pos < len(order):
        group = [order[pos]]
        while pos + 1 < len(order) and vols[order[pos + 1]] == vols[group[0]]:
            pos += 1
            group.append(order[pos])
        frontier_idx += [i for i in group if rets[i] >= best_below]
        best_below = max(best_below, max(rets[i] for i in group))
        pos += 1
    frontier = tuple(samples[i] for i in sorted(frontier_idx))

    return MvpResult(samples, max_sharpe, min_vol, frontier)


def write_weights_csv(weights, path):
    """Export a WeightVector as 'ticker,weight' CSV with 12 significant digits."""
    lines = ["ticker,weight"]
    for ticker, w in zip(weights.tickers, weights.weights):
        lines.append(f"{ticker},{format(w, '.12g')}")
    _atomic_write(path, "\n".join(lines) + "\n")


def read_weights_csv(path):
    """Load a 'ticker,weight' CSV written by write_weights_csv."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise AllocationError(f"{path}: cannot read weights file: {exc}") from None
    if not lines or lines[0] != "ticker,weight":
        raise AllocationError(f"{path}: expected 'ticker,weight' header")
    tickers, values = [], []
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            ticker, raw = line.split(",", 1)
            values.append(float(raw))
        except ValueError:
            raise AllocationError(f"{path}: line {line_no}: bad row {line!r}") from None
        tickers.append(ticker)
    return WeightVector(tuple(tickers), np.array(values))


def write_frontier_csv(result, path):
    """Export MVP samples as 'return,volatility,sharpe' CSV (one row per sample)."""
    lines = ["return,volatility,sharpe"]
    for s in result.samples:
        sharpe = "" if s.sharpe is None else format(s.sharpe, ".12g")
        lines.append(
            f"{format(s.annual_return, '.12g')},"
            f"{format(s.annual_volatility, '.12g')},{sharpe}"
        )
    _atomic_write(path, "\n".join(lines) + "\n")


def _atomic_write(path, text):
    tmp = Path(str(path) + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)
