"""Per-node neighborhood selection.

Each node's counts are regressed on every other node's counts with the
group-row penalty; the penalized support is a screening set with high
recall. Row norms from the proximal solver are exactly zero at dropped
rows, so the nonzero tolerance only guards float drift.

Screening alone over-selects: cross-validated error is nearly flat once
the strong predictors are in, so weakly informative rows ride along, and
in count regimes pinned near the trial ceiling whole blocks of columns
turn almost constant and the row penalty spreads mass over them at will
without the held-out error noticing. A cleaning pass fixes that: refit
the selected columns nearly unpenalized, then keep a predictor only when
its cluster-mass-weighted standardized effect, sum_m pi_m |b_lm| sd_m(x_l),
clears a floor that shrinks at the smoothing-bandwidth rate n^(-1/5).
The effect statistic is scale-free and its noise decays at root-n, so the
floor separates real conditional dependence from ride-alongs.
"""

from __future__ import annotations

import warnings

import numpy as np

from .kernels import ClusterAssignment, ClusterWeights
from .model import Dataset
from .solver import ConvergenceError, GroupLassoProblem, SolverOptions, solve
from .tuning import NodeRegression, lambda_grid


def node_problem(
    dataset: Dataset,
    weights: ClusterWeights,
    target: int,
    predictor_nodes,
) -> tuple[GroupLassoProblem, list[int]]:
    """Regression of one node's counts on selected other nodes.

    Predictor column order: intercept first, then the given nodes in the
    given order. Returns the problem and the node behind each penalized row.
    """
    nodes = [int(v) for v in predictor_nodes]
    if target in nodes:
        raise ValueError("target cannot predict itself")
    n = dataset.n
    u = np.empty((n, 1 + len(nodes)))
    u[:, 0] = 1.0
    if nodes:
        u[:, 1:] = dataset.counts[:, nodes]
    problem = GroupLassoProblem(
        targets=dataset.counts[:, target],
        predictors=u,
        trials=dataset.trials,
        cluster_weights=weights,
        penalized_rows=frozenset(range(1, 1 + len(nodes))),
    )
    return problem, nodes


def nonzero_rows(coef: np.ndarray, penalized_rows) -> list[int]:
    """Penalized rows whose norm exceeds 1e-8 * max(1, ||B||_F)."""
    rows = sorted(penalized_rows)
    if not rows:
        return []
    tol = 1e-8 * max(1.0, float(np.linalg.norm(coef)))
    norms = np.linalg.norm(coef[rows], axis=1)
    return [r for r, nrm in zip(rows, norms) if nrm > tol]


def default_effect_floor(n: int) -> float:
    """Standardized-effect floor for the cleaning pass: n^(-1/5), the same
    rate as the kernel bandwidths, so it vanishes slower than estimation
    noise and true fixed effects always clear it eventually."""
    if n < 1:
        raise ValueError("need at least one sample")
    return float(n) ** -0.2


def standardized_effects(
    counts: np.ndarray,
    clusters: ClusterAssignment,
    weights: ClusterWeights,
    coef: np.ndarray,
    nodes: list[int],
) -> np.ndarray:
    """Cluster-mass-weighted standardized effect of each predictor node.

    For predictor l with coefficient row (b_l1..b_lM):
    sum_m pi_m * |b_lm| * sd_m(x_l), where pi_m is the fraction of samples
    assigned to cluster m and sd_m is the alpha-weighted standard deviation
    of column l under cluster m's local weights. Measures log-odds change
    per local standard deviation of the predictor, averaged over clusters.
    """
    if coef.shape[0] != 1 + len(nodes):
        raise ValueError("coefficient table does not match predictor count")
    alpha = weights.alpha  # (m, n), rows sum to 1
    x = np.asarray(counts, dtype=float)[:, nodes]  # (n, p)
    mean = alpha @ x  # (m, p)
    var = alpha @ (x * x) - mean * mean
    sd = np.sqrt(np.clip(var, 0.0, None))
    pi = np.bincount(clusters.membership, minlength=weights.m) / x.shape[0]
    return np.einsum("m,pm,mp->p", pi, np.abs(coef[1:]), sd)


def clean_support(
    dataset: Dataset,
    clusters: ClusterAssignment,
    weights: ClusterWeights,
    j: int,
    support: set[int],
    floor: float,
    opts: SolverOptions | None = None,
) -> tuple[set[int], np.ndarray, list[int]]:
    """Refit the screened predictors nearly unpenalized and keep the ones
    whose standardized effect clears the floor.

    The refit uses the grid's smallest penalty rather than zero: pinned
    columns can make the unpenalized optimum diverge, and a vanishing
    group penalty keeps it finite without moving the effect estimates.
    Returns the kept nodes, the refit coefficients, and the node behind
    each refit row past the intercept.
    """
    nodes = sorted(support)
    problem, nodes = node_problem(dataset, weights, j, nodes)
    lam = lambda_grid(problem).lam_min
    try:
        coef = solve(problem, lam, opts)
    except ConvergenceError as err:
        warnings.warn(f"cleaning refit for node {j} did not converge; "
                      f"using last iterate (KKT residual {err.residual:.3g})")
        coef = err.coefficients
    if not nodes:
        return set(), coef, nodes
    effects = standardized_effects(
        dataset.counts, clusters, weights, coef, nodes
    )
    kept = {v for v, e in zip(nodes, effects) if e > floor}
    return kept, coef, nodes


def embed_rows(coef: np.ndarray, support: list[int], all_nodes: list[int]) -> np.ndarray:
    """Spread a refit table over the full candidate list: row 0 keeps the
    intercept, row 1 + all_nodes.index(v) gets support node v's row, and
    candidates outside the support get exact zeros."""
    full = np.zeros((1 + len(all_nodes), coef.shape[1]))
    full[0] = coef[0]
    position = {node: i for i, node in enumerate(all_nodes)}
    for i, node in enumerate(support):
        full[1 + position[node]] = coef[1 + i]
    return full


def node_regression(
    dataset: Dataset,
    clusters: ClusterAssignment,
    weights: ClusterWeights,
    target: int,
    predictor_nodes,
) -> NodeRegression:
    """Bundle a node problem with per-sample cluster membership so the tuning
    module can score held-out predictions."""
    problem, _ = node_problem(dataset, weights, target, predictor_nodes)
    return NodeRegression(problem=problem, membership=clusters.membership)


def select_neighborhood(
    dataset: Dataset,
    clusters: ClusterAssignment,
    weights: ClusterWeights,
    j: int,
    lam: float,
    opts: SolverOptions | None = None,
    warm_start: np.ndarray | None = None,
    effect_floor: float | None = None,
) -> tuple[set[int], np.ndarray]:
    """Screen with the penalized fit at lam, then clean the survivors.

    effect_floor None applies the default n^(-1/5) floor; a non-positive
    value skips cleaning and returns the raw screened support with the
    penalized coefficient table.
    """
    if not 0 <= j < dataset.d_x:
        raise ValueError(f"node {j} outside [0, {dataset.d_x})")
    if lam < 0:
        raise ValueError("penalty must be nonnegative")
    if clusters.m != weights.m:
        raise ValueError("cluster assignment and weights disagree on m")
    others = [v for v in range(dataset.d_x) if v != j]
    problem, nodes = node_problem(dataset, weights, j, others)
    coef = solve(problem, lam, opts, warm_start=warm_start)
    selected = {nodes[r - 1] for r in nonzero_rows(coef, problem.penalized_rows)}
    floor = default_effect_floor(dataset.n) if effect_floor is None else effect_floor
    if floor <= 0 or not selected:
        return selected, coef
    kept, refit, support = clean_support(
        dataset, clusters, weights, j, selected, floor, opts
    )
    return kept, embed_rows(refit, support, nodes)


def select_all_neighborhoods(
    dataset: Dataset,
    clusters: ClusterAssignment,
    weights: ClusterWeights,
    lams,
    opts: SolverOptions | None = None,
    effect_floor: float | None = None,
) -> dict[int, set[int]]:
    lams = np.asarray(lams, dtype=float)
    if lams.shape != (dataset.d_x,):
        raise ValueError("need one penalty per node")
    out: dict[int, set[int]] = {}
    for j in range(dataset.d_x):
        try:
            out[j], _ = select_neighborhood(
                dataset, clusters, weights, j, float(lams[j]), opts,
                effect_floor=effect_floor,
            )
        except ConvergenceError as err:
            raise ConvergenceError(
                f"neighborhood of node {j}: {err}", err.coefficients, err.residual
            ) from err
    return out
