"""Shared-structure DAG learning from multivariate count data, with
per-observation edge weights driven by embedded covariates."""

__version__ = "0.1.0"

from .embedding import (
    LinearEmbedding,
    embed,
    fit_embedding,
    fit_linear_embedding,
    scatter_matrix,
)
from .kernels import (
    ClusterAssignment,
    ClusterWeights,
    KernelConfig,
    cluster_embeddings,
    cluster_weights,
    normalized_weights,
)
from .model import (
    DagStructure,
    Dataset,
    RelationshipNetwork,
    check_acyclic,
    moralize,
)
from .neighborhood import select_all_neighborhoods, select_neighborhood
from .ordering import conditional_score, estimate_ordering, root_score
from .pipeline import LearnResult, PipelineConfig, learn
from .recovery import DagEstimate, recover_dag, recover_parents
from .simulation import (
    GroundTruth,
    MetricsRow,
    SimConfig,
    eval_metrics,
    run_benchmark,
    simulate,
)
from .solver import GroupLassoProblem, SolverOptions, loss_and_grad, solve
from .tuning import LambdaGrid, cross_validate, lambda_grid, one_se_select

__all__ = [
    "__version__",
    "ClusterAssignment",
    "ClusterWeights",
    "DagEstimate",
    "DagStructure",
    "Dataset",
    "GroundTruth",
    "GroupLassoProblem",
    "KernelConfig",
    "LambdaGrid",
    "LearnResult",
    "LinearEmbedding",
    "MetricsRow",
    "PipelineConfig",
    "RelationshipNetwork",
    "SimConfig",
    "SolverOptions",
    "check_acyclic",
    "cluster_embeddings",
    "cluster_weights",
    "conditional_score",
    "cross_validate",
    "embed",
    "estimate_ordering",
    "eval_metrics",
    "fit_embedding",
    "fit_linear_embedding",
    "lambda_grid",
    "learn",
    "loss_and_grad",
    "moralize",
    "normalized_weights",
    "one_se_select",
    "recover_dag",
    "recover_parents",
    "root_score",
    "run_benchmark",
    "scatter_matrix",
    "select_all_neighborhoods",
    "select_neighborhood",
    "simulate",
    "solve",
]
