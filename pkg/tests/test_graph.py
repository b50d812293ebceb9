"""Graph containers, edge-set algebra, homophily, and Dirichlet energy."""

import itertools
import random
from fractions import Fraction

import numpy as np
import pytest

from refine.errors import (
    EmptyGraph,
    NoLabeledEdges,
    NonFiniteFeatures,
    ShapeMismatch,
    UniverseMismatch,
)
from refine.graph import (
    EdgeSet,
    LabeledGraph,
    dirichlet_energy,
    edge_homophily,
    induced_subgraph,
    ordered_pair,
)


def all_pairs(n):
    return [(u, v) for u in range(n) for v in range(u + 1, n)]


class TestEdgeSet:
    def test_normalization_and_self_loop_rejection(self):
        es = EdgeSet.build(4, [(2, 1), (0, 3)])
        assert (1, 2) in es and (2, 1) in es
        with pytest.raises(ValueError):
            EdgeSet.build(4, [(1, 1)])
        with pytest.raises(ValueError):
            EdgeSet(3, frozenset({(0, 5)}))

    def test_residual_example(self):
        a = EdgeSet.build(3, [(0, 1)])
        b = EdgeSet.build(3, [(0, 1), (1, 2)])
        assert b.residual(a).pairs == {(1, 2)}

    def test_complement_example(self):
        a = EdgeSet.build(3, [(0, 1)])
        assert a.complement().pairs == {(0, 2), (1, 2)}

    def test_intersection_with_complement_empty(self):
        a = EdgeSet.build(5, [(0, 1), (2, 3), (1, 4)])
        assert len(a.intersection(a.complement())) == 0

    def test_universe_mismatch(self):
        with pytest.raises(UniverseMismatch):
            EdgeSet.build(3, [(0, 1)]).union(EdgeSet.build(4, [(0, 1)]))

    def test_inclusion_exclusion_cardinality(self):
        rng = random.Random(0)
        for _ in range(200):
            n = rng.randint(2, 7)
            pairs = all_pairs(n)
            a = EdgeSet.build(n, [p for p in pairs if rng.random() < 0.5])
            b = EdgeSet.build(n, [p for p in pairs if rng.random() < 0.5])
            assert len(a.union(b)) + len(a.intersection(b)) == len(a) + len(b)

    def test_residual_equals_intersection_with_complement(self):
        # Exhaustive on n <= 4; sampled against full enumeration at n = 5.
        for n in (2, 3, 4):
            pairs = all_pairs(n)
            subsets = list(itertools.product([0, 1], repeat=len(pairs)))
            sets = [
                EdgeSet.build(n, [p for p, keep in zip(pairs, mask) if keep])
                for mask in subsets
            ]
            for a in sets:
                for b in sets:
                    assert a.residual(b).pairs == a.intersection(b.complement()).pairs
        rng = random.Random(1)
        pairs = all_pairs(5)
        for _ in range(300):
            a = EdgeSet.build(5, [p for p in pairs if rng.random() < 0.5])
            b = EdgeSet.build(5, [p for p in pairs if rng.random() < 0.5])
            assert a.residual(b).pairs == a.intersection(b.complement()).pairs

    def test_sorted_iteration(self):
        es = EdgeSet.build(5, [(3, 4), (0, 2), (0, 1)])
        assert list(es) == [(0, 1), (0, 2), (3, 4)]


class TestLabeledGraph:
    def test_train_requires_label(self):
        with pytest.raises(ValueError):
            LabeledGraph.build(2, [(0, 1)], labels=[None, 0], split=["train", "none"])

    def test_feature_shape_and_finiteness(self):
        with pytest.raises(ShapeMismatch):
            LabeledGraph.build(3, [(0, 1)], features=np.zeros((2, 2)))
        with pytest.raises(NonFiniteFeatures):
            LabeledGraph.build(2, [(0, 1)], features=[[np.nan], [0.0]])

    def test_immutability(self):
        g = LabeledGraph.build(2, [(0, 1)], features=[[1.0], [2.0]])
        with pytest.raises(ValueError):
            g.features[0, 0] = 5.0

    def test_induced_subgraph(self):
        g = LabeledGraph.build(
            5, [(0, 1), (1, 2), (3, 4)], labels=[0, 0, 1, 1, 1],
            split=["train", "val", "none", "test", "none"],
        )
        sub, index = induced_subgraph(g, [1, 2, 4])
        assert sub.n == 3
        assert sub.edges.pairs == {(0, 1)}
        assert sub.labels == (0, 1, 1)
        assert sub.split == ("val", "none", "none")
        assert index == {1: 0, 2: 1, 4: 2}


class TestEdgeHomophily:
    def test_hand_example(self):
        g = LabeledGraph.build(4, [(0, 1), (1, 2), (2, 3)], labels=[0, 0, 1, 1])
        rep = edge_homophily(g)
        assert rep.homophily == Fraction(2, 3)
        assert rep.edge_count == 3 and rep.same_label_edges == 2

    def test_all_same_label(self):
        g = LabeledGraph.build(4, [(0, 1), (2, 3), (1, 3)], labels=["a"] * 4)
        assert edge_homophily(g).homophily == 1

    def test_complete_bipartite_between_classes(self):
        edges = [(u, v) for u in range(3) for v in range(3, 6)]
        g = LabeledGraph.build(6, edges, labels=[0, 0, 0, 1, 1, 1])
        assert edge_homophily(g).homophily == 0

    def test_unknown_endpoints_excluded_both_sides(self):
        g = LabeledGraph.build(4, [(0, 1), (1, 2), (2, 3)], labels=[0, 0, None, 1])
        rep = edge_homophily(g)
        assert rep.unknown_label_edges == 2
        assert rep.homophily == Fraction(1, 1)

    def test_empty_graph_and_no_labeled_edges(self):
        with pytest.raises(EmptyGraph):
            edge_homophily(LabeledGraph.build(3, [], labels=[0, 0, 1]))
        with pytest.raises(NoLabeledEdges):
            edge_homophily(LabeledGraph.build(3, [(0, 1)], labels=[None, None, 1]))

    def test_relabeling_invariance(self):
        rng = random.Random(2)
        for _ in range(50):
            n = rng.randint(3, 8)
            labels = [rng.randrange(3) for _ in range(n)]
            edges = [p for p in all_pairs(n) if rng.random() < 0.5]
            if not edges:
                continue
            g1 = LabeledGraph.build(n, edges, labels=labels)
            permuted = {0: "x", 1: "y", 2: "z"}
            g2 = LabeledGraph.build(n, edges, labels=[permuted[l] for l in labels])
            assert edge_homophily(g1).homophily == edge_homophily(g2).homophily

    def test_label_source_override(self):
        g = LabeledGraph.build(3, [(0, 1), (1, 2)], labels=[0, 1, 2])
        rep = edge_homophily(g, {0: "a", 1: "a", 2: "b"})
        assert rep.homophily == Fraction(1, 2)


class TestDirichletEnergy:
    def test_constant_embedding_is_zero(self):
        g = LabeledGraph.build(4, [(0, 1), (1, 2), (2, 3)], labels=[0] * 4)
        assert dirichlet_energy(g, np.full((4, 3), 2.5)) == 0.0

    def test_single_edge_hand_value(self):
        g = LabeledGraph.build(2, [(0, 1)], labels=[0, 1])
        assert dirichlet_energy(g, np.array([[0.0], [2.0]])) == 4.0

    def test_matches_dense_laplacian(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            n = int(rng.integers(2, 9))
            d = int(rng.integers(1, 4))
            pairs = [p for p in all_pairs(n) if rng.random() < 0.5]
            g = LabeledGraph.build(n, pairs, labels=[0] * n)
            z = rng.normal(size=(n, d))
            adj = np.zeros((n, n))
            for u, v in pairs:
                adj[u, v] = adj[v, u] = 1.0
            lap = np.diag(adj.sum(axis=1)) - adj
            dense = float(np.trace(z.T @ lap @ z))
            edgewise = dirichlet_energy(g, z)
            assert abs(edgewise - dense) <= 1e-10 * max(1.0, abs(dense))

    def test_zero_iff_constant_per_component(self):
        rng = random.Random(4)
        for _ in range(60):
            n = rng.randint(2, 6)
            pairs = [p for p in all_pairs(n) if rng.random() < 0.4]
            g = LabeledGraph.build(n, pairs, labels=[0] * n)
            comp = list(range(n))

            def find(x):
                while comp[x] != x:
                    comp[x] = comp[comp[x]]
                    x = comp[x]
                return x

            for u, v in pairs:
                comp[find(u)] = find(v)
            z = np.array([[float(find(u))] for u in range(n)])
            assert dirichlet_energy(g, z) == 0.0
            if pairs:
                u, v = pairs[0]
                z2 = z.copy()
                z2[u, 0] += 1.0
                assert dirichlet_energy(g, z2) > 0.0

    def test_shape_mismatch(self):
        g = LabeledGraph.build(3, [(0, 1)], labels=[0, 0, 0])
        with pytest.raises(ShapeMismatch):
            dirichlet_energy(g, np.zeros((2, 2)))

    def test_nonnegative(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            n = int(rng.integers(2, 8))
            pairs = [p for p in all_pairs(n) if rng.random() < 0.6]
            g = LabeledGraph.build(n, pairs, labels=[0] * n)
            assert dirichlet_energy(g, rng.normal(size=(n, 2))) >= 0.0


def test_ordered_pair():
    assert ordered_pair(3, 1) == (1, 3)
    with pytest.raises(ValueError):
        ordered_pair(2, 2)
