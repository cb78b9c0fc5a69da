from __future__ import annotations

import numpy as np
import pytest

from bindag.model import (
    Dataset,
    DagStructure,
    RelationshipNetwork,
    check_acyclic,
    check_neighborhoods,
    check_ordering,
    moralize,
)


def small_dataset(n=5, d_x=3, trials=4, seed=0):
    rng = np.random.default_rng(seed)
    counts = rng.integers(0, trials + 1, size=(n, d_x))
    covariates = rng.normal(size=(n, 2))
    return Dataset(counts=counts, covariates=covariates, trials=trials)


class TestDataset:
    def test_shapes_and_properties(self):
        ds = small_dataset(n=7, d_x=4)
        assert (ds.n, ds.d_x, ds.d_z) == (7, 4, 2)

    def test_rejects_counts_above_trials(self):
        with pytest.raises(ValueError, match=r"\[0, 4\]"):
            Dataset(counts=[[5, 0], [1, 2]], covariates=np.zeros((2, 1)), trials=4)

    def test_rejects_negative_counts(self):
        with pytest.raises(ValueError):
            Dataset(counts=[[-1, 0], [1, 2]], covariates=np.zeros((2, 1)), trials=4)

    def test_rejects_fractional_counts(self):
        with pytest.raises(ValueError, match="integers"):
            Dataset(counts=[[0.5, 0], [1, 2]], covariates=np.zeros((2, 1)), trials=4)

    def test_accepts_integral_floats(self):
        ds = Dataset(counts=[[1.0, 0.0], [2.0, 3.0]], covariates=np.zeros((2, 1)), trials=4)
        assert np.issubdtype(ds.counts.dtype, np.integer)

    def test_rejects_row_mismatch(self):
        with pytest.raises(ValueError, match="rows"):
            Dataset(counts=np.zeros((3, 2), dtype=int), covariates=np.zeros((2, 1)), trials=4)

    def test_rejects_single_observation(self):
        with pytest.raises(ValueError, match="two observations"):
            Dataset(counts=np.zeros((1, 2), dtype=int), covariates=np.zeros((1, 1)), trials=4)

    def test_rejects_nonpositive_trials(self):
        with pytest.raises(ValueError, match="trials"):
            Dataset(counts=np.zeros((2, 2), dtype=int), covariates=np.zeros((2, 1)), trials=0)

    def test_arrays_are_immutable(self):
        ds = small_dataset()
        with pytest.raises(ValueError):
            ds.counts[0, 0] = 1


class TestRelationshipNetwork:
    def test_canonicalizes_edge_direction(self):
        net = RelationshipNetwork(n=4, edges=frozenset({(2, 1), (1, 2), (0, 3)}))
        assert net.edges == frozenset({(1, 2), (0, 3)})

    def test_rejects_self_loop(self):
        with pytest.raises(ValueError, match="self-loop"):
            RelationshipNetwork(n=3, edges=frozenset({(1, 1)}))

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError, match="outside"):
            RelationshipNetwork(n=3, edges=frozenset({(0, 3)}))

    def test_adjacency_symmetric_zero_diagonal(self):
        net = RelationshipNetwork(n=4, edges=frozenset({(0, 1), (2, 3), (1, 3)}))
        a = net.adjacency().toarray()
        assert np.array_equal(a, a.T)
        assert np.all(np.diag(a) == 0)
        assert a.sum() == 2 * len(net.edges)

    def test_empty_adjacency(self):
        a = RelationshipNetwork(n=3).adjacency()
        assert a.shape == (3, 3) and a.nnz == 0


class TestAcyclicity:
    def test_chain_is_acyclic(self):
        assert check_acyclic({(0, 1), (1, 2)}, 3)

    def test_triangle_cycle(self):
        assert not check_acyclic({(0, 1), (1, 2), (2, 0)}, 3)

    def test_two_cycle(self):
        assert not check_acyclic({(0, 1), (1, 0)}, 2)

    def test_self_loop(self):
        assert not check_acyclic({(1, 1)}, 2)

    def test_empty_graph(self):
        assert check_acyclic(set(), 4)

    def test_out_of_range_edge_raises(self):
        with pytest.raises(ValueError):
            check_acyclic({(0, 5)}, 3)

    def test_random_dags_by_construction(self):
        # edges drawn forward along a random permutation are always acyclic
        for seed in range(20):
            rng = np.random.default_rng(seed)
            d = int(rng.integers(3, 9))
            perm = rng.permutation(d)
            edges = set()
            for a in range(d):
                for b in range(a + 1, d):
                    if rng.random() < 0.4:
                        edges.add((int(perm[a]), int(perm[b])))
            assert check_acyclic(edges, d)
            if edges:
                l, j = next(iter(edges))
                assert not check_acyclic(edges | {(j, l)}, d) or (j, l) in edges


class TestDagStructure:
    def test_rejects_cycle(self):
        with pytest.raises(ValueError, match="cycle"):
            DagStructure(d_x=3, directed_edges=frozenset({(0, 1), (1, 2), (2, 0)}))

    def test_parents(self):
        dag = DagStructure(d_x=4, directed_edges=frozenset({(0, 2), (1, 2), (2, 3)}))
        assert dag.parents(2) == frozenset({0, 1})
        assert dag.parents(0) == frozenset()

    def test_topological_order_respects_edges(self):
        dag = DagStructure(d_x=5, directed_edges=frozenset({(3, 1), (1, 0), (4, 0)}))
        order = dag.topological_order()
        pos = {v: k for k, v in enumerate(order)}
        for l, j in dag.directed_edges:
            assert pos[l] < pos[j]


class TestMoralize:
    def test_chain_moral_graph_is_skeleton(self):
        dag = DagStructure(d_x=3, directed_edges=frozenset({(0, 1), (1, 2)}))
        assert moralize(dag) == {(0, 1), (1, 2)}

    def test_collider_marries_parents(self):
        dag = DagStructure(d_x=3, directed_edges=frozenset({(0, 2), (1, 2)}))
        assert moralize(dag) == {(0, 2), (1, 2), (0, 1)}

    def test_three_parents_fully_married(self):
        # hand-worked: skeleton (0,3),(1,3),(2,3),(0,1) plus pairs {0,1},{0,2},{1,2}
        dag = DagStructure(
            d_x=4, directed_edges=frozenset({(0, 3), (1, 3), (2, 3), (0, 1)})
        )
        assert moralize(dag) == {(0, 3), (1, 3), (2, 3), (0, 1), (0, 2), (1, 2)}

    def test_empty_dag(self):
        assert moralize(DagStructure(d_x=3)) == set()


class TestValidators:
    def test_check_ordering_accepts_permutation(self):
        assert check_ordering([2, 0, 1], 3) == (2, 0, 1)

    def test_check_ordering_rejects_repeat(self):
        with pytest.raises(ValueError, match="permutation"):
            check_ordering([0, 0, 1], 3)

    def test_check_neighborhoods_rejects_self(self):
        with pytest.raises(ValueError, match="own neighborhood"):
            check_neighborhoods({0: {0, 1}}, 2)

    def test_check_neighborhoods_fills_missing(self):
        out = check_neighborhoods({1: {0}}, 3)
        assert out == {0: frozenset(), 1: frozenset({0}), 2: frozenset()}
