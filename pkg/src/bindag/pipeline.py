"""End-to-end structure learning: embed, tune, select, order, recover.

Two modes share every downstream step. Personalized mode embeds covariates
(or accepts precomputed embeddings), clusters them, and smooths both the
regressions and the ordering moments with exponential kernel weights.
Homogeneous mode is the pooled baseline: one cluster, uniform weights,
unsmoothed moments; it never touches covariates or the network.

Per-stage random seeds derive from (seed, stage, node), so results do not
depend on evaluation order or worker count.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .embedding import LinearEmbedding, fit_embedding
from .kernels import (
    ClusterAssignment,
    ClusterWeights,
    KernelConfig,
    cluster_embeddings,
    cluster_weights,
    default_bandwidth,
    default_cluster_count,
    normalized_weights,
    trivial_clusters,
    uniform_cluster_weights,
)
from .model import Dataset, RelationshipNetwork
from .neighborhood import node_problem, select_all_neighborhoods
from .ordering import estimate_ordering
from .recovery import DagEstimate, recover_dag
from .solver import SolverOptions
from .tuning import NodeRegression, cross_validate, lambda_grid, one_se_select

_STAGE_CLUSTERING = 0
_STAGE_NEIGHBOR_CV = 1
_STAGE_RECOVERY_CV = 2


@dataclass(frozen=True)
class PipelineConfig:
    trials: int | None = None
    clusters: int | None = None
    tau1: float | None = None
    tau2: float | None = None
    n0: int = 2
    cv_folds: int = 5
    grid_size: int = 20
    seed: int = 0
    homogeneous: bool = False
    threads: int = 1
    restrict_to_neighborhood: bool = False
    embed_dim: int = 1
    # standardized-effect floor for the post-selection cleaning pass;
    # None applies the n^(-1/5) default, non-positive disables cleaning
    effect_floor: float | None = None

    def resolved_threads(self) -> int:
        if self.threads >= 1:
            return self.threads
        return os.cpu_count() or 1


@dataclass(frozen=True)
class LearnResult:
    estimate: DagEstimate
    neighborhood_lambdas: dict[int, float]
    recovery_lambdas: dict[int, float]
    embedding: LinearEmbedding | None
    embeddings: np.ndarray | None
    config: PipelineConfig


@dataclass(frozen=True)
class Smoothing:
    """Everything mode-dependent: cluster structure for the regressions and
    (optionally) the dense per-sample weights for the ordering moments.
    Homogeneous mode carries uniform weights and theta None."""

    clusters: ClusterAssignment
    weights: ClusterWeights
    membership: np.ndarray
    embeddings: np.ndarray | None
    fitted_embedding: LinearEmbedding | None
    theta: np.ndarray | None


def prepare_smoothing(
    dataset: Dataset,
    network: RelationshipNetwork | None,
    embeddings: np.ndarray | None,
    config: PipelineConfig,
    need_theta: bool = True,
) -> Smoothing:
    n = dataset.n
    if config.homogeneous:
        return Smoothing(
            clusters=trivial_clusters(np.zeros((n, 1))),
            weights=uniform_cluster_weights(n),
            membership=np.zeros(n, dtype=np.int64),
            embeddings=None,
            fitted_embedding=None,
            theta=None,
        )
    fitted = None
    if embeddings is not None:
        emb = np.asarray(embeddings, dtype=float)
        if emb.ndim != 2 or emb.shape[0] != n:
            raise ValueError("embeddings must have one row per sample")
    elif network is not None:
        fitted, emb = fit_embedding(dataset, network, config.embed_dim)
    else:
        raise ValueError("personalized mode needs a network or precomputed embeddings")
    tau1 = config.tau1 if config.tau1 is not None else default_bandwidth(n)
    tau2 = config.tau2 if config.tau2 is not None else default_bandwidth(n)
    m = config.clusters if config.clusters is not None else default_cluster_count(n)
    clusters = cluster_embeddings(
        emb, m, seed=stage_seed(config.seed, _STAGE_CLUSTERING)
    )
    weights = cluster_weights(emb, clusters, KernelConfig(bandwidth=tau1))
    theta = (
        normalized_weights(emb, KernelConfig(bandwidth=tau2)) if need_theta else None
    )
    return Smoothing(
        clusters=clusters,
        weights=weights,
        membership=clusters.membership,
        embeddings=emb,
        fitted_embedding=fitted,
        theta=theta,
    )


def stage_seed(seed: int, stage: int, node: int = 0) -> int:
    ss = np.random.SeedSequence((seed, stage, node))
    return int(ss.generate_state(1)[0])


def _tune_one(
    dataset: Dataset,
    weights: ClusterWeights,
    membership: np.ndarray,
    target: int,
    predictor_nodes: list[int],
    config: PipelineConfig,
    stage: int,
    opts: SolverOptions,
) -> float:
    problem, _ = node_problem(dataset, weights, target, predictor_nodes)
    grid = lambda_grid(problem, config.grid_size)
    if grid.size == 1:
        return float(grid.values[0])
    regression = NodeRegression(problem=problem, membership=membership)
    report = cross_validate(
        regression,
        config.cv_folds,
        grid,
        seed=stage_seed(config.seed, stage, target),
        solver_options=opts,
    )
    return one_se_select(report)


def _tune_many(
    tasks: list[tuple[int, list[int], int]],
    dataset: Dataset,
    weights: ClusterWeights,
    membership: np.ndarray,
    config: PipelineConfig,
    opts: SolverOptions,
) -> dict[int, float]:
    """tasks: (target, predictors, stage). Parallel over tasks when asked;
    aggregation is keyed by target so ordering cannot drift."""
    threads = config.resolved_threads()
    if threads > 1 and len(tasks) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=threads) as pool:
            futures = {
                target: pool.submit(
                    _tune_one, dataset, weights, membership,
                    target, predictors, config, stage, opts,
                )
                for target, predictors, stage in tasks
            }
            return {t: f.result() for t, f in futures.items()}
    return {
        target: _tune_one(
            dataset, weights, membership, target, predictors, config, stage, opts
        )
        for target, predictors, stage in tasks
    }


def tune_nodes(
    dataset: Dataset,
    network: RelationshipNetwork | None = None,
    embeddings: np.ndarray | None = None,
    config: PipelineConfig = PipelineConfig(),
    nodes=None,
    solver_options: SolverOptions | None = None,
) -> dict[int, dict]:
    """Neighborhood-stage cross-validation detail per node: the grid, fold
    mean errors, standard errors, and the one-SE choice."""
    opts = solver_options or SolverOptions()
    parts = prepare_smoothing(dataset, network, embeddings, config, need_theta=False)
    targets = sorted(int(j) for j in nodes) if nodes is not None else range(dataset.d_x)
    out: dict[int, dict] = {}
    for j in targets:
        others = [v for v in range(dataset.d_x) if v != j]
        problem, _ = node_problem(dataset, parts.weights, j, others)
        grid = lambda_grid(problem, config.grid_size)
        if grid.size == 1:
            out[j] = {
                "lambda_star": float(grid.values[0]),
                "lambdas": [float(grid.values[0])],
                "mean_mse": [],
                "se": [],
            }
            continue
        regression = NodeRegression(problem=problem, membership=parts.membership)
        report = cross_validate(
            regression,
            config.cv_folds,
            grid,
            seed=stage_seed(config.seed, _STAGE_NEIGHBOR_CV, j),
            solver_options=opts,
        )
        out[j] = {
            "lambda_star": one_se_select(report),
            "lambdas": [float(v) for v in report.lambdas],
            "mean_mse": [float(v) for v in report.mean_mse],
            "se": [float(v) for v in report.se],
        }
    return out


def learn(
    dataset: Dataset,
    network: RelationshipNetwork | None = None,
    embeddings: np.ndarray | None = None,
    config: PipelineConfig = PipelineConfig(),
    solver_options: SolverOptions | None = None,
) -> LearnResult:
    """Run the full procedure on one dataset.

    Personalized mode needs either a relationship network (a linear embedding
    is fitted) or precomputed embeddings, which skip the embedding step.
    """
    if config.trials is not None and config.trials != dataset.trials:
        raise ValueError(
            f"config trials {config.trials} != dataset trials {dataset.trials}"
        )
    d = dataset.d_x
    opts = solver_options or SolverOptions()
    parts = prepare_smoothing(dataset, network, embeddings, config)
    weights, membership = parts.weights, parts.membership

    neighbor_tasks = [
        (j, [v for v in range(d) if v != j], _STAGE_NEIGHBOR_CV) for j in range(d)
    ]
    neigh_lams = _tune_many(neighbor_tasks, dataset, weights, membership, config, opts)
    lam_vector = np.array([neigh_lams[j] for j in range(d)])
    neighborhoods = select_all_neighborhoods(
        dataset, parts.clusters, weights, lam_vector, opts,
        effect_floor=config.effect_floor,
    )

    ordering = estimate_ordering(dataset, parts.theta, neighborhoods, config.n0)
    parts = Smoothing(  # release the dense ordering weights
        clusters=parts.clusters,
        weights=parts.weights,
        membership=parts.membership,
        embeddings=parts.embeddings,
        fitted_embedding=parts.fitted_embedding,
        theta=None,
    )

    recovery_tasks = []
    for v in range(2, d + 1):
        target = ordering[v - 1]
        predecessors = list(ordering[: v - 1])
        if config.restrict_to_neighborhood:
            predecessors = [u for u in predecessors if u in neighborhoods[target]]
        recovery_tasks.append((target, predecessors, _STAGE_RECOVERY_CV))
    rec_lams = _tune_many(recovery_tasks, dataset, weights, membership, config, opts)

    estimate = recover_dag(
        dataset,
        parts.clusters,
        weights,
        ordering,
        rec_lams,
        opts,
        neighborhoods=neighborhoods,
        restrict_to_neighborhood=config.restrict_to_neighborhood,
        effect_floor=config.effect_floor,
    )
    return LearnResult(
        estimate=estimate,
        neighborhood_lambdas={j: float(neigh_lams[j]) for j in range(d)},
        recovery_lambdas={t: float(v) for t, v in rec_lams.items()},
        embedding=parts.fitted_embedding,
        embeddings=parts.embeddings,
        config=config,
    )
