"""Kernel smoothing weights over embeddings and the clustering approximation.

The local kernel is K(u) = exp(-|u|) with bandwidth tau, so a sample's weight
decays exponentially in embedding distance. For large n, coefficients are
shared within k-means clusters of the embedding instead of per sample; the
cluster weights alpha re-weight every sample toward each cluster center.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .model import _freeze


@dataclass(frozen=True)
class KernelConfig:
    """Bandwidth of the exponential kernel, tau > 0."""

    bandwidth: float

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")


def default_bandwidth(n: int) -> float:
    """n^(-1/5), the default for both smoothing bandwidths."""
    return float(n) ** (-0.2)


def default_cluster_count(n: int) -> int:
    """min(n, max(20, ceil(sqrt(n)))): fidelity at small n, sqrt growth after."""
    return min(n, max(20, math.isqrt(n - 1) + 1 if n > 1 else 1))


def kernel_weight(u: float, config: KernelConfig):
    """exp(-|u| / tau)."""
    return np.exp(-np.abs(u) / config.bandwidth)


def normalized_weights(embeddings: np.ndarray, config: KernelConfig) -> np.ndarray:
    """Row-stochastic n x n smoothing matrix over embedding distances.

    theta[i, l] = K_tau(h_i - h_l) / sum_k K_tau(h_i - h_k). The i = l term
    contributes K(0) = 1, so denominators never vanish.
    """
    h = np.atleast_2d(np.asarray(embeddings, dtype=float))
    k = np.exp(-cdist(h, h) / config.bandwidth)
    return k / k.sum(axis=1, keepdims=True)


@dataclass(frozen=True)
class ClusterAssignment:
    """k-means output: centers (m x d0) and per-observation membership."""

    centers: np.ndarray
    membership: np.ndarray

    def __post_init__(self):
        centers = np.atleast_2d(np.asarray(self.centers, dtype=float))
        membership = np.asarray(self.membership, dtype=np.int64)
        m = centers.shape[0]
        n = membership.shape[0]
        if not 1 <= m <= n:
            raise ValueError(f"cluster count {m} outside [1, {n}]")
        if membership.min() < 0 or membership.max() >= m:
            raise ValueError("membership indices outside [0, m)")
        object.__setattr__(self, "centers", _freeze(centers))
        object.__setattr__(self, "membership", _freeze(membership))

    @property
    def m(self) -> int:
        return self.centers.shape[0]

    @property
    def n(self) -> int:
        return self.membership.shape[0]


@dataclass(frozen=True)
class ClusterWeights:
    """Per-cluster sample weights alpha (m x n); every row is a probability vector."""

    alpha: np.ndarray

    def __post_init__(self):
        alpha = np.atleast_2d(np.asarray(self.alpha, dtype=float))
        if alpha.min() < 0:
            raise ValueError("cluster weights must be nonnegative")
        sums = alpha.sum(axis=1)
        if np.any(sums <= 0):
            raise ValueError("every cluster weight row needs positive mass")
        if not np.allclose(sums, 1.0, rtol=0, atol=1e-9):
            raise ValueError("cluster weight rows must sum to 1")
        # kill residual drift so downstream row sums are exact to 1e-12
        alpha = alpha / sums[:, None]
        object.__setattr__(self, "alpha", _freeze(alpha))

    @property
    def m(self) -> int:
        return self.alpha.shape[0]

    @property
    def n(self) -> int:
        return self.alpha.shape[1]


def cluster_embeddings(embeddings: np.ndarray, m: int, seed) -> ClusterAssignment:
    """Lloyd's algorithm with k-means++ seeding, deterministic given seed.

    Converges when assignments stop changing (at most 100 iterations); an
    emptied cluster is reseeded to the point farthest from its assigned
    center. Final centers are member means.
    """
    h = np.atleast_2d(np.asarray(embeddings, dtype=float))
    n = h.shape[0]
    if not 1 <= m <= n:
        raise ValueError(f"cluster count {m} outside [1, {n}]")
    rng = np.random.default_rng(seed)

    centers = np.empty((m, h.shape[1]))
    centers[0] = h[rng.integers(n)]
    d2 = ((h - centers[0]) ** 2).sum(axis=1)
    for k in range(1, m):
        total = d2.sum()
        if total > 0:
            idx = rng.choice(n, p=d2 / total)
        else:  # all remaining points coincide with a chosen center
            idx = rng.integers(n)
        centers[k] = h[idx]
        d2 = np.minimum(d2, ((h - centers[k]) ** 2).sum(axis=1))

    membership = np.full(n, -1)
    for _ in range(100):
        dist = cdist(h, centers)
        new_membership = dist.argmin(axis=1)
        if np.array_equal(new_membership, membership):
            break
        membership = new_membership
        assigned_d = dist[np.arange(n), membership]
        for k in range(m):
            mask = membership == k
            if mask.any():
                centers[k] = h[mask].mean(axis=0)
            else:
                far = int(assigned_d.argmax())
                centers[k] = h[far]
                assigned_d[far] = -np.inf
    # post-condition: centers are member means of the final assignment
    for k in range(m):
        mask = membership == k
        if mask.any():
            centers[k] = h[mask].mean(axis=0)
    return ClusterAssignment(centers=centers, membership=membership)


def cluster_weights(
    embeddings: np.ndarray, clusters: ClusterAssignment, config: KernelConfig
) -> ClusterWeights:
    """alpha[m, i] = K_tau(||h_i - c_m||) / sum_l K_tau(||h_l - c_m||)."""
    h = np.atleast_2d(np.asarray(embeddings, dtype=float))
    if h.shape[0] != clusters.n:
        raise ValueError("embeddings and cluster assignment disagree on n")
    k = np.exp(-cdist(clusters.centers, h) / config.bandwidth)
    return ClusterWeights(alpha=k / k.sum(axis=1, keepdims=True))


def uniform_cluster_weights(n: int) -> ClusterWeights:
    """Homogeneous mode: one cluster, every sample weighted 1/n."""
    return ClusterWeights(alpha=np.full((1, n), 1.0 / n))


def trivial_clusters(embeddings: np.ndarray) -> ClusterAssignment:
    """Homogeneous mode: a single cluster centered at the grand mean."""
    h = np.atleast_2d(np.asarray(embeddings, dtype=float))
    return ClusterAssignment(
        centers=h.mean(axis=0, keepdims=True),
        membership=np.zeros(h.shape[0], dtype=np.int64),
    )
