"""Shared data types and graph utilities.

Count observations live alongside covariates and an undirected relationship
network over the observations; the object of inference is a directed acyclic
graph over the count variables. All node and observation indices are 0-based.
Instances are immutable after construction and safe to share across workers.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

Edge = tuple[int, int]


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Dataset:
    """Count matrix (n x d_x, entries in 0..trials) with per-row covariates."""

    counts: np.ndarray
    covariates: np.ndarray
    trials: int

    def __post_init__(self):
        counts = np.asarray(self.counts)
        covariates = np.asarray(self.covariates, dtype=float)
        if counts.ndim != 2 or covariates.ndim != 2:
            raise ValueError("counts and covariates must be 2-D matrices")
        if not np.issubdtype(counts.dtype, np.integer):
            if not np.all(counts == np.round(counts)):
                raise ValueError("counts must be integers")
            counts = counts.astype(np.int64)
        if self.trials < 1:
            raise ValueError("trials must be a positive integer")
        if counts.shape[0] != covariates.shape[0]:
            raise ValueError(
                f"counts has {counts.shape[0]} rows but covariates has "
                f"{covariates.shape[0]}"
            )
        if counts.shape[0] < 2:
            raise ValueError("need at least two observations")
        if counts.min(initial=0) < 0 or counts.max(initial=0) > self.trials:
            raise ValueError(f"counts must lie in [0, {self.trials}]")
        object.__setattr__(self, "counts", _freeze(counts))
        object.__setattr__(self, "covariates", _freeze(covariates))

    @property
    def n(self) -> int:
        return self.counts.shape[0]

    @property
    def d_x(self) -> int:
        return self.counts.shape[1]

    @property
    def d_z(self) -> int:
        return self.covariates.shape[1]


@dataclass(frozen=True)
class RelationshipNetwork:
    """Undirected simple graph on the n observations."""

    n: int
    edges: frozenset[Edge] = field(default_factory=frozenset)

    def __post_init__(self):
        canon = set()
        for i, j in self.edges:
            if i == j:
                raise ValueError(f"self-loop on observation {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"edge ({i}, {j}) outside [0, {self.n})")
            canon.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(canon))

    def adjacency(self):
        """Sparse symmetric 0/1 adjacency matrix."""
        from scipy import sparse

        if not self.edges:
            return sparse.csr_matrix((self.n, self.n))
        rows, cols = np.array(sorted(self.edges)).T
        data = np.ones(len(rows))
        a = sparse.coo_matrix((data, (rows, cols)), shape=(self.n, self.n))
        return (a + a.T).tocsr()


def check_acyclic(edges, d_x: int) -> bool:
    """True iff the directed edge set admits a topological order (Kahn)."""
    return _topological_order(edges, d_x) is not None


def _topological_order(edges, d_x: int):
    indeg = np.zeros(d_x, dtype=int)
    children: list[list[int]] = [[] for _ in range(d_x)]
    for l, j in edges:
        if not (0 <= l < d_x and 0 <= j < d_x):
            raise ValueError(f"edge ({l}, {j}) outside [0, {d_x})")
        if l == j:
            return None
        children[l].append(j)
        indeg[j] += 1
    queue = deque(np.flatnonzero(indeg == 0).tolist())
    order = []
    while queue:
        v = queue.popleft()
        order.append(v)
        for c in children[v]:
            indeg[c] -= 1
            if indeg[c] == 0:
                queue.append(c)
    return order if len(order) == d_x else None


@dataclass(frozen=True)
class DagStructure:
    """Directed acyclic graph over the d_x count variables."""

    d_x: int
    directed_edges: frozenset[Edge] = field(default_factory=frozenset)

    def __post_init__(self):
        edges = frozenset((int(l), int(j)) for l, j in self.directed_edges)
        object.__setattr__(self, "directed_edges", edges)
        if not check_acyclic(edges, self.d_x):
            raise ValueError("directed edge set contains a cycle or self-loop")

    def parents(self, j: int) -> frozenset[int]:
        return frozenset(l for l, k in self.directed_edges if k == j)

    def topological_order(self) -> tuple[int, ...]:
        order = _topological_order(self.directed_edges, self.d_x)
        assert order is not None  # guaranteed by the constructor
        return tuple(order)


def moralize(dag: DagStructure) -> set[Edge]:
    """Moral graph of a DAG: skeleton plus married co-parents of each child.

    Edges are undirected, returned as (a, b) pairs with a < b.
    """
    moral = {(min(l, j), max(l, j)) for l, j in dag.directed_edges}
    for j in range(dag.d_x):
        pa = sorted(dag.parents(j))
        for a_idx in range(len(pa)):
            for b_idx in range(a_idx + 1, len(pa)):
                moral.add((pa[a_idx], pa[b_idx]))
    return moral


def check_ordering(order, d_x: int) -> tuple[int, ...]:
    """Validate that `order` is a permutation of range(d_x)."""
    order = tuple(int(v) for v in order)
    if sorted(order) != list(range(d_x)):
        raise ValueError(f"not a permutation of range({d_x}): {order}")
    return order


def check_neighborhoods(neighborhoods: dict, d_x: int) -> dict[int, frozenset[int]]:
    """Validate per-node neighbor sets: j never contains itself."""
    out = {}
    for j in range(d_x):
        nb = frozenset(int(l) for l in neighborhoods.get(j, ()))
        if j in nb:
            raise ValueError(f"node {j} appears in its own neighborhood")
        if nb and (min(nb) < 0 or max(nb) >= d_x):
            raise ValueError(f"neighborhood of {j} has out-of-range nodes")
        out[j] = nb
    return out
