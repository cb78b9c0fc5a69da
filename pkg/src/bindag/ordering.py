"""Greedy ordering by re-weighted overdispersion scores.

For a Binomial variable, var = mean - mean^2/T at the true conditioning set;
the re-weighting w = (1 - mean/T)^(-1) makes w^2 var - w mean vanish exactly,
so the candidate with the smallest score joins the ordering next. Moments are
kernel-smoothed across samples: theta is a row-normalized n x n weight
matrix, or None for uniform weights (the homogeneous baseline), where every
sample shares the pooled moments and scores collapse to per-pattern group
statistics.

Conditioning on already-ordered nodes runs over observed count patterns:
a pattern is kept when at least n0 samples match it, each kept pattern is
weighted by its sample share, and each sample's theta row renormalizes over
the matching samples only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import Dataset, _freeze

# Weights w = (1 - mean/T)^(-1) blow up as mean -> T; cap the mean just below.
MEAN_CLAMP = 1e-6


class OrderingError(RuntimeError):
    pass


@dataclass(frozen=True)
class ConditionalMoments:
    """Per-sample smoothed mean and variance of one node given a pattern."""

    mean: np.ndarray
    variance: np.ndarray
    support_count: int

    def __post_init__(self):
        object.__setattr__(self, "mean", _freeze(np.asarray(self.mean, dtype=float)))
        object.__setattr__(
            self, "variance", _freeze(np.asarray(self.variance, dtype=float))
        )
        if self.support_count < 0:
            raise ValueError("support count cannot be negative")
        if self.support_count > 0 and self.variance.min(initial=0.0) < 0:
            raise ValueError("variance cannot be negative")


@dataclass(frozen=True)
class ScoreTable:
    """Scores evaluated during the greedy sweep, keyed by (step, candidate).
    Infinite entries mark candidates skipped for lack of supported patterns."""

    entries: dict[tuple[int, int], float] = field(default_factory=dict)

    def score(self, step: int, candidate: int) -> float:
        return self.entries[(step, candidate)]


def _check_theta(theta, n: int):
    if theta is None:
        return None
    th = np.asarray(theta, dtype=float)
    if th.shape != (n, n):
        raise ValueError(f"weights must be {n} x {n}")
    return th


def _match_mask(counts: np.ndarray, cond: list[int], pattern) -> np.ndarray:
    if not cond:
        return np.ones(counts.shape[0], dtype=bool)
    want = np.asarray(pattern)
    return np.all(counts[:, cond] == want, axis=1)


def conditional_moments(
    dataset: Dataset, theta, j: int, cond, pattern
) -> ConditionalMoments:
    """Smoothed mean/variance of node j for each sample, conditioned on the
    nodes in cond taking the given count pattern. Zero matches flag the
    moments absent (NaN) for the support filter to drop."""
    cond = sorted(int(c) for c in cond)
    if j in cond:
        raise ValueError("conditioning set cannot contain the node itself")
    n = dataset.n
    theta = _check_theta(theta, n)
    mask = _match_mask(dataset.counts, cond, pattern)
    support = int(mask.sum())
    if support == 0:
        nan = np.full(n, np.nan)
        return ConditionalMoments(mean=nan, variance=nan, support_count=0)
    x = dataset.counts[mask, j].astype(float)
    if theta is None:
        mean = float(x.mean())
        var = float(np.mean((x - mean) ** 2))
        return ConditionalMoments(
            mean=np.full(n, mean), variance=np.full(n, var), support_count=support
        )
    sub = theta[:, mask]
    denom = sub.sum(axis=1)
    ok = denom > 0
    mean = np.zeros(n)
    m2 = np.zeros(n)
    mean[ok] = (sub[ok] @ x) / denom[ok]
    m2[ok] = (sub[ok] @ (x * x)) / denom[ok]
    var = np.maximum(m2 - mean * mean, 0.0)
    mean[~ok] = np.nan
    var[~ok] = np.nan
    return ConditionalMoments(mean=mean, variance=var, support_count=support)


def _score_from_moments(mean, variance, trials: int):
    """w^2 var - w mean with w = (1 - mean/T)^(-1), mean capped below T."""
    capped = np.minimum(mean, trials * (1.0 - MEAN_CLAMP))
    w = 1.0 / (1.0 - capped / trials)
    return w * w * variance - w * capped


def root_score(dataset: Dataset, theta, j: int) -> float:
    theta = _check_theta(theta, dataset.n)
    x = dataset.counts[:, j].astype(float)
    if theta is None:
        mean = x.mean()
        var = np.mean((x - mean) ** 2)
        return float(_score_from_moments(mean, var, dataset.trials))
    mean = theta @ x
    var = np.maximum(theta @ (x * x) - mean * mean, 0.0)
    return float(np.mean(_score_from_moments(mean, var, dataset.trials)))


def _grouped_pattern_terms(theta, order, bounds, xj, trials, chunk_rows):
    """For every sample row and every pattern group (columns of theta permuted
    into contiguous groups), the score term from the group-renormalized
    moments. Returns an (n, groups) matrix; rows with no weight on a group
    contribute zero."""
    n = theta.shape[0]
    xp = xj[order]
    xp2 = xp * xp
    terms = np.empty((n, len(bounds)))
    for lo in range(0, n, chunk_rows):
        hi = min(lo + chunk_rows, n)
        sub = theta[lo:hi][:, order]
        denom = np.add.reduceat(sub, bounds, axis=1)
        m1 = np.add.reduceat(sub * xp, bounds, axis=1)
        m2 = np.add.reduceat(sub * xp2, bounds, axis=1)
        ok = denom > 0
        mean = np.where(ok, m1 / np.where(ok, denom, 1.0), 0.0)
        var = np.maximum(np.where(ok, m2 / np.where(ok, denom, 1.0), 0.0)
                         - mean * mean, 0.0)
        vals = _score_from_moments(mean, var, trials)
        terms[lo:hi] = np.where(ok, vals, 0.0)
    return terms


def conditional_score(
    dataset: Dataset, theta, j: int, cond, n0: int = 2
) -> float:
    """Pattern-weighted overdispersion score; +inf when no pattern has n0
    matches, which skips the candidate."""
    if n0 < 1:
        raise ValueError("support threshold must be at least 1")
    cond = sorted(int(c) for c in cond)
    if not cond:
        return root_score(dataset, theta, j)
    if j in cond:
        raise ValueError("conditioning set cannot contain the node itself")
    theta = _check_theta(theta, dataset.n)

    sub = dataset.counts[:, cond]
    _, inverse, counts = np.unique(
        sub, axis=0, return_inverse=True, return_counts=True
    )
    inverse = inverse.reshape(-1)
    kept = np.flatnonzero(counts >= n0)
    if kept.size == 0:
        return math.inf
    n_cond = float(counts[kept].sum())
    xj = dataset.counts[:, j].astype(float)

    if theta is None:
        total = 0.0
        for g in kept:
            vals = xj[inverse == g]
            mean = vals.mean()
            var = np.mean((vals - mean) ** 2)
            term = float(_score_from_moments(mean, var, dataset.trials))
            total += (counts[g] / n_cond) * term
        return total

    keep_mask = np.isin(inverse, kept)
    order = np.argsort(inverse[keep_mask], kind="stable")
    order = np.flatnonzero(keep_mask)[order]
    group_sizes = counts[kept]
    bounds = np.concatenate(([0], np.cumsum(group_sizes)[:-1]))
    chunk_rows = max(1, int(5_000_000 / max(dataset.n, 1)))
    terms = _grouped_pattern_terms(
        theta, order, bounds, xj, dataset.trials, chunk_rows
    )
    per_pattern = terms.mean(axis=0)
    weights = group_sizes / n_cond
    return float(per_pattern @ weights)


def estimate_ordering_with_scores(
    dataset: Dataset, theta, neighborhoods: dict[int, set[int]], n0: int = 2
) -> tuple[tuple[int, ...], ScoreTable]:
    """Greedy minimum-score ordering. Step 1 compares marginal scores; later
    steps condition each candidate on its neighborhood's already-ordered
    part. Ties break to the smallest node index."""
    d = dataset.d_x
    if set(neighborhoods) != set(range(d)):
        raise ValueError("neighborhoods must cover every node")
    table: dict[tuple[int, int], float] = {}
    root = {j: root_score(dataset, theta, j) for j in range(d)}
    for j in range(d):
        table[(1, j)] = root[j]
    order = [min(range(d), key=lambda j: (root[j], j))]

    cache: dict[tuple[int, tuple[int, ...]], float] = {}
    while len(order) < d - 1:
        step = len(order) + 1
        placed = set(order)
        best = None
        for j in range(d):
            if j in placed:
                continue
            cond = tuple(sorted(set(neighborhoods[j]) & placed))
            key = (j, cond)
            if key not in cache:
                if not cond:
                    cache[key] = root[j]
                else:
                    cache[key] = conditional_score(dataset, theta, j, cond, n0)
            score = cache[key]
            table[(step, j)] = score
            if math.isfinite(score) and (best is None or score < best[0]):
                best = (score, j)
        if best is None:
            raise OrderingError(
                f"no candidate at step {step} has a pattern with {n0} matches"
            )
        order.append(best[1])

    if len(order) < d:
        leftover = (set(range(d)) - set(order)).pop()
        order.append(leftover)
    return tuple(order), ScoreTable(entries=table)


def estimate_ordering(
    dataset: Dataset, theta, neighborhoods: dict[int, set[int]], n0: int = 2
) -> tuple[int, ...]:
    order, _ = estimate_ordering_with_scores(dataset, theta, neighborhoods, n0)
    return order
