"""Linear node embedding from covariates and the relationship network.

The embedding maximizes covariate dispersion across *non-connected*
observation pairs subject to an A-orthonormality constraint, so connected
observations land close together. The solution is the top eigenspace of the
symmetrically whitened pair-difference scatter matrix, mapped back through
A^{-1/2}. Embedded feature sets are plain (n, d0) float arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Dataset, RelationshipNetwork, _freeze

ORTHONORMALITY_TOL = 1e-8


@dataclass(frozen=True)
class LinearEmbedding:
    """Projection F (d_z x d0) with F' A F = I for the normalizer A."""

    projection: np.ndarray
    normalizer: np.ndarray

    def __post_init__(self):
        f = np.atleast_2d(np.asarray(self.projection, dtype=float))
        a = np.asarray(self.normalizer, dtype=float)
        gram = f.T @ a @ f
        if not np.allclose(gram, np.eye(f.shape[1]), atol=ORTHONORMALITY_TOL * 10):
            raise ValueError("projection is not A-orthonormal")
        object.__setattr__(self, "projection", _freeze(f))
        object.__setattr__(self, "normalizer", _freeze(a))

    @property
    def dim(self) -> int:
        return self.projection.shape[1]


def scatter_matrix(dataset: Dataset, network: RelationshipNetwork) -> np.ndarray:
    """Average pair-difference scatter over non-edges of the network."""
    return scatter_from_covariates(dataset.covariates, network)


def scatter_from_covariates(
    covariates: np.ndarray, network: RelationshipNetwork
) -> np.ndarray:
    """C = (1/(n(n-1))) sum_{i != j} (1 - w_ij) (Z_i - Z_j)(Z_i - Z_j)'.

    Evaluated through the Laplacian identity
    sum_{i,j} w_ij (Z_i - Z_j)(Z_i - Z_j)' = 2 Z'(D - W)Z,
    so the cost is O(n d_z^2 + |E| d_z) instead of O(n^2 d_z^2).
    """
    z = np.atleast_2d(np.asarray(covariates, dtype=float))
    n = z.shape[0]
    if n < 2:
        raise ValueError("need at least two observations")
    if network.n != n:
        raise ValueError(f"network has {network.n} nodes but data has {n} rows")
    gram = z.T @ z
    total = z.sum(axis=0)
    full = n * gram - np.outer(total, total)
    if network.edges:
        adj = network.adjacency()
        deg = np.asarray(adj.sum(axis=1)).ravel()
        edge_part = z.T @ (adj @ z) - (z * deg[:, None]).T @ z
    else:
        edge_part = 0.0
    c = (2.0 / (n * (n - 1))) * (full + edge_part)
    return (c + c.T) / 2.0


def default_normalizer(covariates: np.ndarray, ridge: float = 1e-8) -> np.ndarray:
    """Empirical covariance of Z, ridged to guarantee positive definiteness."""
    z = np.atleast_2d(np.asarray(covariates, dtype=float))
    cov = np.cov(z, rowvar=False)
    cov = np.atleast_2d(cov)
    return cov + ridge * np.eye(cov.shape[0])


def fit_linear_embedding(c: np.ndarray, a: np.ndarray, d0: int) -> LinearEmbedding:
    """Solve for the projection spanning the top-d0 whitened eigenspace.

    Eigenvectors of A^{-1/2} C A^{-1/2} are ordered by (eigenvalue desc,
    position asc) and mapped back through A^{-1/2}; each column's sign is
    fixed so its largest-magnitude coordinate is positive.
    """
    c = np.asarray(c, dtype=float)
    a = np.asarray(a, dtype=float)
    d_z = c.shape[0]
    if not 1 <= d0 <= d_z:
        raise ValueError(f"embedding dimension {d0} outside [1, {d_z}]")
    a_vals, a_vecs = np.linalg.eigh(a)
    if a_vals.min() <= 0:
        raise np.linalg.LinAlgError("normalizer is not positive definite")
    a_isqrt = (a_vecs / np.sqrt(a_vals)) @ a_vecs.T
    whitened = a_isqrt @ c @ a_isqrt
    vals, vecs = np.linalg.eigh((whitened + whitened.T) / 2.0)
    order = sorted(range(d_z), key=lambda k: (-vals[k], k))
    psi = vecs[:, order[:d0]]
    f = a_isqrt @ psi
    for k in range(d0):
        lead = np.argmax(np.abs(f[:, k]))
        if f[lead, k] < 0:
            f[:, k] = -f[:, k]
    return LinearEmbedding(projection=f, normalizer=a)


def embed(emb: LinearEmbedding, covariates: np.ndarray) -> np.ndarray:
    """Project covariate rows: row i of the result is F' Z_i."""
    z = np.atleast_2d(np.asarray(covariates, dtype=float))
    if z.shape[1] != emb.projection.shape[0]:
        raise ValueError(
            f"covariates have {z.shape[1]} columns, projection expects "
            f"{emb.projection.shape[0]}"
        )
    return z @ emb.projection


def fit_embedding(
    dataset: Dataset,
    network: RelationshipNetwork,
    d0: int,
    normalizer: np.ndarray | None = None,
) -> tuple[LinearEmbedding, np.ndarray]:
    """Convenience: scatter matrix -> fit -> embed the dataset's covariates."""
    return fit_embedding_from_covariates(
        dataset.covariates, network, d0, normalizer
    )


def fit_embedding_from_covariates(
    covariates: np.ndarray,
    network: RelationshipNetwork,
    d0: int,
    normalizer: np.ndarray | None = None,
) -> tuple[LinearEmbedding, np.ndarray]:
    z = np.atleast_2d(np.asarray(covariates, dtype=float))
    if normalizer is None:
        normalizer = default_normalizer(z)
    c = scatter_from_covariates(z, network)
    emb = fit_linear_embedding(c, normalizer, d0)
    return emb, embed(emb, z)
