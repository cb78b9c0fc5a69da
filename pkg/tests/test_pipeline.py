from __future__ import annotations

import numpy as np
import pytest
from scipy.special import expit

from bindag.embedding import fit_embedding
from bindag.kernels import default_cluster_count
from bindag.model import Dataset, RelationshipNetwork
from bindag.pipeline import (
    PipelineConfig,
    LearnResult,
    learn,
    prepare_smoothing,
    stage_seed,
    tune_nodes,
)
from bindag.simulation import SimConfig, simulate

TRIALS = 4


def chain_dataset(n, d_x, weight, seed, covariates=None):
    rng = np.random.default_rng(seed)
    cols = [rng.binomial(TRIALS, 0.5, size=n)]
    for _ in range(1, d_x):
        cols.append(
            rng.binomial(TRIALS, expit(weight * (cols[-1] - TRIALS / 2.0)))
        )
    counts = np.column_stack(cols)
    if covariates is None:
        covariates = np.zeros((n, 1))
    return Dataset(counts=counts, covariates=covariates, trials=TRIALS)


class TestConfig:
    def test_resolved_threads(self):
        assert PipelineConfig(threads=1).resolved_threads() == 1
        assert PipelineConfig(threads=3).resolved_threads() == 3
        assert PipelineConfig(threads=0).resolved_threads() >= 1

    def test_stage_seed_deterministic_and_distinct(self):
        assert stage_seed(5, 1, 2) == stage_seed(5, 1, 2)
        seeds = {
            stage_seed(5, stage, node) for stage in range(3) for node in range(4)
        }
        assert len(seeds) == 12


class TestPrepareSmoothing:
    def test_homogeneous_parts(self):
        ds = chain_dataset(50, 2, 1.0, seed=0)
        parts = prepare_smoothing(ds, None, None, PipelineConfig(homogeneous=True))
        assert parts.clusters.m == 1
        assert np.allclose(parts.weights.alpha, 1.0 / 50)
        assert parts.theta is None
        assert parts.embeddings is None
        assert parts.fitted_embedding is None

    def test_personalized_needs_network_or_embeddings(self):
        ds = chain_dataset(50, 2, 1.0, seed=0)
        with pytest.raises(ValueError, match="network or precomputed"):
            prepare_smoothing(ds, None, None, PipelineConfig())

    def test_given_embeddings_bypass_fitting(self):
        ds = chain_dataset(60, 2, 1.0, seed=1)
        emb = np.linspace(-1, 1, 60)[:, None]
        parts = prepare_smoothing(ds, None, emb, PipelineConfig())
        assert parts.fitted_embedding is None
        assert np.array_equal(parts.embeddings, emb)
        assert parts.clusters.m == default_cluster_count(60)
        assert parts.theta.shape == (60, 60)
        assert np.allclose(parts.theta.sum(axis=1), 1.0)

    def test_embedding_shape_checked(self):
        ds = chain_dataset(60, 2, 1.0, seed=1)
        with pytest.raises(ValueError, match="one row per sample"):
            prepare_smoothing(ds, None, np.zeros((10, 1)), PipelineConfig())

    def test_network_fits_embedding(self):
        data = simulate(SimConfig(n=80, d_x=2, d_z=6, seed=3))
        parts = prepare_smoothing(
            data.dataset, data.network, None, PipelineConfig()
        )
        assert parts.fitted_embedding is not None
        assert parts.embeddings.shape == (80, 1)

    def test_need_theta_false_skips_dense_weights(self):
        ds = chain_dataset(60, 2, 1.0, seed=1)
        emb = np.linspace(-1, 1, 60)[:, None]
        parts = prepare_smoothing(
            ds, None, emb, PipelineConfig(), need_theta=False
        )
        assert parts.theta is None

    def test_cluster_count_override(self):
        ds = chain_dataset(60, 2, 1.0, seed=1)
        emb = np.linspace(-1, 1, 60)[:, None]
        parts = prepare_smoothing(ds, None, emb, PipelineConfig(clusters=7))
        assert parts.clusters.m == 7
        assert parts.weights.alpha.shape == (7, 60)

    def test_bandwidth_override_changes_weights(self):
        ds = chain_dataset(60, 2, 1.0, seed=1)
        emb = np.linspace(-1, 1, 60)[:, None]
        narrow = prepare_smoothing(ds, None, emb, PipelineConfig(tau1=0.05))
        wide = prepare_smoothing(ds, None, emb, PipelineConfig(tau1=5.0))
        assert not np.allclose(narrow.weights.alpha, wide.weights.alpha)


class TestLearn:
    def test_trials_mismatch(self):
        ds = chain_dataset(50, 2, 1.0, seed=0)
        with pytest.raises(ValueError, match="trials"):
            learn(ds, config=PipelineConfig(trials=7, homogeneous=True))

    def test_homogeneous_chain_end_to_end(self):
        ds = chain_dataset(1500, 3, 1.8, seed=5)
        result = learn(ds, config=PipelineConfig(homogeneous=True, seed=5))
        assert isinstance(result, LearnResult)
        assert result.estimate.ordering == (0, 1, 2)
        assert result.estimate.dag.directed_edges == frozenset({(0, 1), (1, 2)})
        assert set(result.neighborhood_lambdas) == {0, 1, 2}
        assert set(result.recovery_lambdas) == {1, 2}
        assert all(lam >= 0 for lam in result.neighborhood_lambdas.values())
        assert result.embedding is None

    def test_embeddings_bypass_equals_network_path(self):
        data = simulate(SimConfig(n=200, d_x=3, d_z=6, seed=11))
        cfg = PipelineConfig(seed=11)
        _, emb = fit_embedding(data.dataset, data.network, 1)
        via_network = learn(data.dataset, network=data.network, config=cfg)
        via_embeddings = learn(data.dataset, embeddings=emb, config=cfg)
        assert via_network.estimate.ordering == via_embeddings.estimate.ordering
        assert (
            via_network.estimate.dag.directed_edges
            == via_embeddings.estimate.dag.directed_edges
        )
        assert via_network.neighborhood_lambdas == via_embeddings.neighborhood_lambdas
        assert via_network.recovery_lambdas == via_embeddings.recovery_lambdas

    def test_deterministic_given_seed(self):
        data = simulate(SimConfig(n=200, d_x=3, d_z=6, seed=12))
        cfg = PipelineConfig(seed=4)
        a = learn(data.dataset, network=data.network, config=cfg)
        b = learn(data.dataset, network=data.network, config=cfg)
        assert a.estimate.ordering == b.estimate.ordering
        assert a.estimate.dag.directed_edges == b.estimate.dag.directed_edges
        assert a.neighborhood_lambdas == b.neighborhood_lambdas
        assert a.recovery_lambdas == b.recovery_lambdas
        for j, coef in a.estimate.coefficients.items():
            assert np.array_equal(coef, b.estimate.coefficients[j])

    def test_thread_count_invariance(self):
        data = simulate(SimConfig(n=150, d_x=3, d_z=6, seed=13))
        seq = learn(
            data.dataset, network=data.network, config=PipelineConfig(seed=2)
        )
        par = learn(
            data.dataset, network=data.network,
            config=PipelineConfig(seed=2, threads=2),
        )
        assert seq.estimate.ordering == par.estimate.ordering
        assert seq.estimate.dag.directed_edges == par.estimate.dag.directed_edges
        assert seq.neighborhood_lambdas == par.neighborhood_lambdas
        assert seq.recovery_lambdas == par.recovery_lambdas

    def test_restriction_limits_parents(self):
        ds = chain_dataset(1200, 3, 1.8, seed=6)
        restricted = learn(
            ds,
            config=PipelineConfig(
                homogeneous=True, seed=6, restrict_to_neighborhood=True
            ),
        )
        hoods = restricted.estimate.neighborhoods
        for u, v in restricted.estimate.dag.directed_edges:
            assert u in hoods[v]

    def test_single_node_dataset(self):
        rng = np.random.default_rng(0)
        ds = Dataset(
            counts=rng.binomial(TRIALS, 0.5, size=(120, 1)),
            covariates=np.zeros((120, 1)),
            trials=TRIALS,
        )
        result = learn(ds, config=PipelineConfig(homogeneous=True))
        assert result.estimate.ordering == (0,)
        assert result.estimate.dag.directed_edges == frozenset()
        assert result.recovery_lambdas == {}


class TestTuneNodes:
    def test_report_structure(self):
        ds = chain_dataset(300, 3, 1.5, seed=7)
        report = tune_nodes(ds, config=PipelineConfig(homogeneous=True, seed=7))
        assert set(report) == {0, 1, 2}
        for detail in report.values():
            assert detail["lambda_star"] in detail["lambdas"]
            assert len(detail["mean_mse"]) == len(detail["lambdas"]) == 20
            assert len(detail["se"]) == 20
            assert detail["lambdas"] == sorted(detail["lambdas"], reverse=True)

    def test_node_subset(self):
        ds = chain_dataset(300, 3, 1.5, seed=7)
        report = tune_nodes(
            ds, config=PipelineConfig(homogeneous=True, seed=7), nodes=[2]
        )
        assert set(report) == {2}

    def test_matches_learn_lambdas(self):
        ds = chain_dataset(400, 3, 1.5, seed=8)
        cfg = PipelineConfig(homogeneous=True, seed=8)
        report = tune_nodes(ds, config=cfg)
        result = learn(ds, config=cfg)
        for j in range(3):
            assert result.neighborhood_lambdas[j] == report[j]["lambda_star"]
