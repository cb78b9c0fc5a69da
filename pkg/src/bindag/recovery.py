"""Parent-set recovery along an estimated ordering.

Each node at position v is regressed on all nodes ordered before it; the
surviving coefficient rows are its parents, cleaned by the same refit and
standardized-effect floor as the neighborhood stage. Edges therefore
always point from an earlier position to a later one and the result is
acyclic by construction. An optional restriction intersects the
predecessor list with the node's neighborhood to shrink the regression.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernels import ClusterAssignment, ClusterWeights
from .model import DagStructure, Dataset, check_ordering
from .neighborhood import (
    clean_support,
    default_effect_floor,
    node_problem,
    nonzero_rows,
)
from .solver import ConvergenceError, SolverOptions, solve


@dataclass(frozen=True)
class DagEstimate:
    """Everything the pipeline learned: the ordering, per-node neighborhoods,
    the directed structure, and the fitted coefficient tables by target."""

    ordering: tuple[int, ...]
    neighborhoods: dict[int, set[int]]
    dag: DagStructure
    coefficients: dict[int, np.ndarray] = field(default_factory=dict)


def recover_parents(
    dataset: Dataset,
    clusters: ClusterAssignment,
    weights: ClusterWeights,
    ordering,
    v: int,
    lam: float,
    opts: SolverOptions | None = None,
    allowed: set[int] | None = None,
    effect_floor: float | None = None,
) -> tuple[set[int], np.ndarray]:
    """Parents of the node at (1-based) position v among positions 1..v-1.
    allowed, when given, filters the predecessor candidates first.
    effect_floor None applies the default n^(-1/5) cleaning floor; a
    non-positive value keeps the raw screened parents."""
    order = check_ordering(ordering, dataset.d_x)
    if not 2 <= v <= dataset.d_x:
        raise ValueError(f"position {v} outside [2, {dataset.d_x}]")
    target = order[v - 1]
    predecessors = [u for u in order[: v - 1]]
    if allowed is not None:
        predecessors = [u for u in predecessors if u in allowed]
    problem, nodes = node_problem(dataset, weights, target, predecessors)
    coef = solve(problem, lam, opts)
    parents = {nodes[r - 1] for r in nonzero_rows(coef, problem.penalized_rows)}
    floor = default_effect_floor(dataset.n) if effect_floor is None else effect_floor
    if floor <= 0 or not parents:
        return parents, coef
    kept, refit, support = clean_support(
        dataset, clusters, weights, target, parents, floor, opts
    )
    return kept, embed_rows(refit, support, nodes)


def recover_dag(
    dataset: Dataset,
    clusters: ClusterAssignment,
    weights: ClusterWeights,
    ordering,
    lams,
    opts: SolverOptions | None = None,
    neighborhoods: dict[int, set[int]] | None = None,
    restrict_to_neighborhood: bool = False,
    effect_floor: float | None = None,
) -> DagEstimate:
    """Union of per-position parent sets as directed edges parent -> node.
    lams supplies one penalty per position 2..d_X, indexed by target node."""
    order = check_ordering(ordering, dataset.d_x)
    d = dataset.d_x
    lams = dict(lams)
    missing = [order[v - 1] for v in range(2, d + 1) if order[v - 1] not in lams]
    if missing:
        raise ValueError(f"no penalty for target nodes {missing}")
    if restrict_to_neighborhood and neighborhoods is None:
        raise ValueError("restriction requires neighborhoods")

    edges: set[tuple[int, int]] = set()
    coef_tables: dict[int, np.ndarray] = {}
    for v in range(2, d + 1):
        target = order[v - 1]
        allowed = neighborhoods[target] if restrict_to_neighborhood else None
        try:
            parents, coef = recover_parents(
                dataset, clusters, weights, order, v,
                float(lams[target]), opts, allowed=allowed,
                effect_floor=effect_floor,
            )
        except ConvergenceError as err:
            raise ConvergenceError(
                f"parents of node {target}: {err}", err.coefficients, err.residual
            ) from err
        coef_tables[target] = coef
        edges.update((u, target) for u in parents)

    dag = DagStructure(d_x=d, directed_edges=frozenset(edges))
    return DagEstimate(
        ordering=order,
        neighborhoods={k: set(v) for k, v in (neighborhoods or {}).items()},
        dag=dag,
        coefficients=coef_tables,
    )
