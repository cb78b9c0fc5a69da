from __future__ import annotations

import numpy as np
import pytest

from bindag.embedding import (
    LinearEmbedding,
    default_normalizer,
    embed,
    fit_embedding,
    fit_linear_embedding,
    scatter_from_covariates,
    scatter_matrix,
)
from bindag.model import Dataset, RelationshipNetwork


def brute_force_scatter(z: np.ndarray, network: RelationshipNetwork) -> np.ndarray:
    """O(n^2) literal evaluation of the non-edge pair-difference average."""
    n = z.shape[0]
    w = network.adjacency().toarray()
    c = np.zeros((z.shape[1], z.shape[1]))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            diff = z[i] - z[j]
            c += (1.0 - w[i, j]) * np.outer(diff, diff)
    return c / (n * (n - 1))


class TestScatterMatrix:
    def test_two_nodes_with_edge_is_zero(self):
        z = np.array([[1.0, 0.0], [0.0, 0.0]])
        net = RelationshipNetwork(n=2, edges=frozenset({(0, 1)}))
        assert np.allclose(scatter_from_covariates(z, net), 0.0)

    def test_two_nodes_no_edge_worked_example(self):
        z = np.array([[1.0, 0.0], [0.0, 0.0]])
        net = RelationshipNetwork(n=2)
        expected = np.array([[1.0, 0.0], [0.0, 0.0]])
        assert np.allclose(scatter_from_covariates(z, net), expected)

    def test_complete_network_is_zero(self):
        rng = np.random.default_rng(0)
        z = rng.normal(size=(6, 3))
        edges = frozenset((i, j) for i in range(6) for j in range(i + 1, 6))
        net = RelationshipNetwork(n=6, edges=edges)
        assert np.allclose(scatter_from_covariates(z, net), 0.0, atol=1e-12)

    def test_matches_brute_force_pair_sum(self):
        for seed in range(5):
            rng = np.random.default_rng(seed)
            n = 30
            z = rng.normal(size=(n, 4))
            edges = frozenset(
                (i, j)
                for i in range(n)
                for j in range(i + 1, n)
                if rng.random() < 0.15
            )
            net = RelationshipNetwork(n=n, edges=edges)
            fast = scatter_from_covariates(z, net)
            assert np.allclose(fast, brute_force_scatter(z, net), atol=1e-10)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(3)
        n = 20
        z = rng.normal(size=(n, 3))
        edges = frozenset(
            (i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.2
        )
        net = RelationshipNetwork(n=n, edges=edges)
        perm = rng.permutation(n)
        z_p = z[perm]
        edges_p = frozenset(
            (min(int(perm_inv_a), int(perm_inv_b)), max(int(perm_inv_a), int(perm_inv_b)))
            for perm_inv_a, perm_inv_b in (
                (np.flatnonzero(perm == a)[0], np.flatnonzero(perm == b)[0])
                for a, b in edges
            )
        )
        net_p = RelationshipNetwork(n=n, edges=edges_p)
        assert np.allclose(
            scatter_from_covariates(z, net), scatter_from_covariates(z_p, net_p)
        )

    def test_symmetric_psd(self):
        rng = np.random.default_rng(9)
        z = rng.normal(size=(25, 5))
        net = RelationshipNetwork(n=25)
        c = scatter_from_covariates(z, net)
        assert np.allclose(c, c.T)
        assert np.linalg.eigvalsh(c).min() >= -1e-10

    def test_single_observation_rejected(self):
        with pytest.raises(ValueError, match="two observations"):
            scatter_from_covariates(np.zeros((1, 2)), RelationshipNetwork(n=1))

    def test_dataset_wrapper_agrees(self):
        rng = np.random.default_rng(1)
        counts = rng.integers(0, 5, size=(10, 2))
        z = rng.normal(size=(10, 3))
        ds = Dataset(counts=counts, covariates=z, trials=4)
        net = RelationshipNetwork(n=10, edges=frozenset({(0, 1), (4, 7)}))
        assert np.array_equal(scatter_matrix(ds, net), scatter_from_covariates(z, net))


class TestFitLinearEmbedding:
    def test_identity_normalizer_diagonal_scatter(self):
        emb = fit_linear_embedding(np.diag([4.0, 1.0]), np.eye(2), 1)
        assert np.allclose(emb.projection, [[1.0], [0.0]])

    def test_isotropic_scatter_deterministic_tiebreak(self):
        emb1 = fit_linear_embedding(np.eye(3), np.eye(3), 1)
        emb2 = fit_linear_embedding(np.eye(3), np.eye(3), 1)
        assert np.array_equal(emb1.projection, emb2.projection)
        assert np.allclose(np.linalg.norm(emb1.projection), 1.0)

    def test_sign_fix_largest_coordinate_positive(self):
        c = np.diag([5.0, 2.0, 1.0])
        emb = fit_linear_embedding(c, np.eye(3), 2)
        for k in range(2):
            col = emb.projection[:, k]
            assert col[np.argmax(np.abs(col))] > 0

    def test_orthonormality_invariant_random_instances(self):
        for seed in range(10):
            rng = np.random.default_rng(seed)
            d = 6
            b = rng.normal(size=(d, d))
            a = b @ b.T + d * np.eye(d)  # positive definite
            g = rng.normal(size=(d, d))
            c = g @ g.T  # PSD scatter
            emb = fit_linear_embedding(c, a, 3)
            gram = emb.projection.T @ a @ emb.projection
            assert np.allclose(gram, np.eye(3), atol=1e-8)

    def test_analytic_generalized_eigenproblem(self):
        # A = diag(4, 1), C = diag(4, 1): whitened matrix is diag(1, 1) so the
        # tie-break picks coordinate order; with C = diag(8, 1) the whitened
        # spectrum is (2, 1) and the top direction is e1 / 2.
        emb = fit_linear_embedding(np.diag([8.0, 1.0]), np.diag([4.0, 1.0]), 1)
        assert np.allclose(emb.projection, [[0.5], [0.0]])

    def test_rejects_bad_dimension(self):
        with pytest.raises(ValueError, match="dimension"):
            fit_linear_embedding(np.eye(2), np.eye(2), 3)
        with pytest.raises(ValueError, match="dimension"):
            fit_linear_embedding(np.eye(2), np.eye(2), 0)

    def test_rejects_singular_normalizer(self):
        with pytest.raises(np.linalg.LinAlgError):
            fit_linear_embedding(np.eye(2), np.zeros((2, 2)), 1)

    def test_constructor_rejects_non_orthonormal(self):
        with pytest.raises(ValueError, match="orthonormal"):
            LinearEmbedding(projection=np.array([[2.0], [0.0]]), normalizer=np.eye(2))


class TestEmbed:
    def test_coordinate_projection(self):
        emb = fit_linear_embedding(np.diag([4.0, 1.0]), np.eye(2), 1)
        assert embed(emb, np.array([[3.0, 5.0]]))[0, 0] == pytest.approx(3.0)

    def test_zero_maps_to_zero(self):
        emb = fit_linear_embedding(np.diag([4.0, 1.0]), np.eye(2), 1)
        assert embed(emb, np.zeros((1, 2)))[0, 0] == 0.0

    def test_linearity(self):
        rng = np.random.default_rng(4)
        a = np.eye(5)
        c = np.diag([5.0, 4.0, 3.0, 2.0, 1.0])
        emb = fit_linear_embedding(c, a, 2)
        z1, z2 = rng.normal(size=(2, 5))
        lhs = embed(emb, (2.0 * z1 - 3.0 * z2)[None, :])
        rhs = 2.0 * embed(emb, z1[None, :]) - 3.0 * embed(emb, z2[None, :])
        assert np.allclose(lhs, rhs, atol=1e-10)

    def test_dimension_mismatch(self):
        emb = fit_linear_embedding(np.eye(2), np.eye(2), 1)
        with pytest.raises(ValueError, match="columns"):
            embed(emb, np.zeros((1, 3)))


class TestFitEmbeddingPipeline:
    def test_default_normalizer_is_ridged_covariance(self):
        rng = np.random.default_rng(6)
        z = rng.normal(size=(40, 3))
        a = default_normalizer(z)
        assert np.allclose(a, np.cov(z, rowvar=False) + 1e-8 * np.eye(3))

    def test_fit_embedding_matches_manual_steps(self):
        rng = np.random.default_rng(8)
        n = 30
        counts = rng.integers(0, 5, size=(n, 3))
        z = rng.normal(size=(n, 4))
        edges = frozenset(
            (i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.1
        )
        ds = Dataset(counts=counts, covariates=z, trials=4)
        net = RelationshipNetwork(n=n, edges=edges)
        emb, values = fit_embedding(ds, net, 2)
        manual = fit_linear_embedding(
            scatter_from_covariates(z, net), default_normalizer(z), 2
        )
        assert np.allclose(emb.projection, manual.projection)
        assert np.allclose(values, z @ manual.projection)
