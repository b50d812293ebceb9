"""Graph containers, edge-set algebra, and label-based metrics.

Graphs are undirected and unweighted throughout; directed input is
symmetrized at ingestion. All types are immutable after construction, so
values can be shared freely across worker threads. Homophily is computed
in exact integer/rational arithmetic so that strict-inequality checks
downstream never depend on float tolerances.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import (
    EmptyGraph,
    NoLabeledEdges,
    NonFiniteFeatures,
    ShapeMismatch,
    UniverseMismatch,
)

Label = Hashable
Pair = tuple[int, int]

SPLIT_TAGS = ("train", "val", "test", "none")


def ordered_pair(u: int, v: int) -> Pair:
    """Normalize an undirected edge to (min, max). Rejects self-loops."""
    if u == v:
        raise ValueError(f"self-loop ({u},{v}) is not a valid edge")
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class EdgeSet:
    """A set of unordered node pairs over a node universe of size n.

    Pairs are stored normalized (u < v). Iteration yields pairs in sorted
    order so that downstream seeded sampling is reproducible.
    """

    n: int
    pairs: frozenset[Pair] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("node universe must have at least one node")
        for u, v in self.pairs:
            if not (0 <= u < v < self.n):
                raise ValueError(f"edge ({u},{v}) out of range for n={self.n}")

    @classmethod
    def build(cls, n: int, pairs: Iterable[tuple[int, int]]) -> "EdgeSet":
        """Build from possibly unnormalized pairs; self-loops are rejected."""
        return cls(n, frozenset(ordered_pair(u, v) for u, v in pairs))

    def __len__(self) -> int:
        return len(self.pairs)

    def __contains__(self, pair: tuple[int, int]) -> bool:
        u, v = pair
        if u == v:
            return False
        return ordered_pair(u, v) in self.pairs

    def __iter__(self):
        return iter(sorted(self.pairs))

    def _check_universe(self, other: "EdgeSet") -> None:
        if self.n != other.n:
            raise UniverseMismatch(f"node universes differ: {self.n} vs {other.n}")

    def union(self, other: "EdgeSet") -> "EdgeSet":
        self._check_universe(other)
        return EdgeSet(self.n, self.pairs | other.pairs)

    def intersection(self, other: "EdgeSet") -> "EdgeSet":
        self._check_universe(other)
        return EdgeSet(self.n, self.pairs & other.pairs)

    def residual(self, other: "EdgeSet") -> "EdgeSet":
        """Pairs present here but absent from `other`."""
        self._check_universe(other)
        return EdgeSet(self.n, self.pairs - other.pairs)

    def complement(self) -> "EdgeSet":
        """All unordered pairs (no self-loops) not in this set; O(n^2)."""
        missing = frozenset(
            (u, v) for u in range(self.n) for v in range(u + 1, self.n) if (u, v) not in self.pairs
        )
        return EdgeSet(self.n, missing)


@dataclass(frozen=True, eq=False)
class LabeledGraph:
    """An undirected graph with per-node labels, features, and split tags.

    labels[i] is None when node i's label is unknown. features, when
    present, is an (n, d) float matrix. split[i] is one of
    'train', 'val', 'test', 'none'; every train node must carry a label.
    """

    n: int
    edges: EdgeSet
    labels: tuple[Optional[Label], ...]
    features: Optional[np.ndarray] = None
    split: tuple[str, ...] = ()

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("graph needs at least one node")
        if self.edges.n != self.n:
            raise UniverseMismatch(f"edge universe {self.edges.n} != node count {self.n}")
        if len(self.labels) != self.n:
            raise ShapeMismatch(f"labels has {len(self.labels)} entries for {self.n} nodes")
        if not self.split:
            object.__setattr__(self, "split", ("none",) * self.n)
        if len(self.split) != self.n:
            raise ShapeMismatch(f"split has {len(self.split)} entries for {self.n} nodes")
        for tag in self.split:
            if tag not in SPLIT_TAGS:
                raise ValueError(f"unknown split tag {tag!r}")
        for i, (tag, label) in enumerate(zip(self.split, self.labels)):
            if tag == "train" and label is None:
                raise ValueError(f"train node {i} has unknown label")
        if self.features is not None:
            feats = np.asarray(self.features, dtype=np.float64)
            if feats.ndim != 2 or feats.shape[0] != self.n:
                raise ShapeMismatch(
                    f"features shape {feats.shape} does not match {self.n} nodes"
                )
            if not np.all(np.isfinite(feats)):
                raise NonFiniteFeatures("features contain NaN or infinite entries")
            feats.setflags(write=False)
            object.__setattr__(self, "features", feats)

    @classmethod
    def build(
        cls,
        n: int,
        edges: Iterable[tuple[int, int]],
        labels: Optional[Sequence[Optional[Label]]] = None,
        features=None,
        split: Optional[Sequence[str]] = None,
    ) -> "LabeledGraph":
        return cls(
            n=n,
            edges=EdgeSet.build(n, edges),
            labels=tuple(labels) if labels is not None else (None,) * n,
            features=None if features is None else np.asarray(features, dtype=np.float64),
            split=tuple(split) if split is not None else ("none",) * n,
        )

    def with_edges(self, edges: EdgeSet) -> "LabeledGraph":
        """Same nodes/labels/features/split, different edge set."""
        if edges.n != self.n:
            raise UniverseMismatch(f"edge universe {edges.n} != node count {self.n}")
        return LabeledGraph(self.n, edges, self.labels, self.features, self.split)

    def nodes_with_split(self, tag: str) -> list[int]:
        return [i for i, t in enumerate(self.split) if t == tag]

    def labeled_nodes(self) -> list[int]:
        return [i for i, l in enumerate(self.labels) if l is not None]


@dataclass(frozen=True)
class HomophilyReport:
    """Edge homophily of a graph, counted over fully labeled edges only.

    Edges with an unknown-label endpoint are excluded from both the
    numerator and the denominator.
    """

    edge_count: int
    same_label_edges: int
    unknown_label_edges: int
    homophily: Fraction

    def __post_init__(self):
        decidable = self.edge_count - self.unknown_label_edges
        if decidable > 0 and self.homophily != Fraction(self.same_label_edges, decidable):
            raise ValueError("inconsistent homophily report")

    @property
    def value(self) -> float:
        return float(self.homophily)


def _resolve_labels(
    g: LabeledGraph, label_source: Optional[Mapping[int, Label] | Sequence[Optional[Label]]]
) -> Sequence[Optional[Label]]:
    if label_source is None:
        return g.labels
    if isinstance(label_source, Mapping):
        return [label_source.get(i) for i in range(g.n)]
    if len(label_source) != g.n:
        raise ShapeMismatch(f"label source has {len(label_source)} entries for {g.n} nodes")
    return label_source


def edge_homophily(
    g: LabeledGraph,
    label_source: Optional[Mapping[int, Label] | Sequence[Optional[Label]]] = None,
) -> HomophilyReport:
    """Fraction of fully labeled edges whose endpoints share a label.

    Exact rational arithmetic; raises EmptyGraph on an empty edge set and
    NoLabeledEdges when no edge has both endpoints labeled.
    """
    if len(g.edges) == 0:
        raise EmptyGraph("graph has no edges")
    labels = _resolve_labels(g, label_source)
    same = 0
    unknown = 0
    for u, v in g.edges.pairs:
        lu, lv = labels[u], labels[v]
        if lu is None or lv is None:
            unknown += 1
        elif lu == lv:
            same += 1
    total = len(g.edges)
    if unknown == total:
        raise NoLabeledEdges("every edge has an unknown-label endpoint")
    return HomophilyReport(
        edge_count=total,
        same_label_edges=same,
        unknown_label_edges=unknown,
        homophily=Fraction(same, total - unknown),
    )


def count_labeled_edges(
    edges: EdgeSet, labels: Sequence[Optional[Label]]
) -> tuple[int, int]:
    """(same-label count, different-label count) over fully labeled pairs."""
    same = 0
    diff = 0
    for u, v in edges.pairs:
        lu, lv = labels[u], labels[v]
        if lu is None or lv is None:
            continue
        if lu == lv:
            same += 1
        else:
            diff += 1
    return same, diff


def dirichlet_energy(g: LabeledGraph, z) -> float:
    """Sum of squared embedding differences across edges.

    Computed edge-wise (the dense Laplacian is never materialized), which
    equals tr(Z^T L Z) for the unweighted Laplacian L = D - A.
    """
    z = np.asarray(z, dtype=np.float64)
    if z.ndim == 1:
        z = z[:, None]
    if z.ndim != 2 or z.shape[0] != g.n:
        raise ShapeMismatch(f"embedding shape {z.shape} does not match {g.n} nodes")
    if not np.all(np.isfinite(z)):
        raise NonFiniteFeatures("embedding contains NaN or infinite entries")
    if len(g.edges) == 0:
        return 0.0
    pairs = np.array(sorted(g.edges.pairs), dtype=np.int64)
    diff = z[pairs[:, 0]] - z[pairs[:, 1]]
    return float(np.sum(diff * diff))


def induced_subgraph(g: LabeledGraph, nodes: Sequence[int]) -> tuple[LabeledGraph, dict[int, int]]:
    """Subgraph on `nodes` (kept in the given order) plus old->new index map."""
    index = {node: i for i, node in enumerate(nodes)}
    if len(index) != len(nodes):
        raise ValueError("duplicate nodes in subgraph selection")
    pairs = []
    for u, v in g.edges.pairs:
        iu = index.get(u)
        iv = index.get(v)
        if iu is not None and iv is not None:
            pairs.append(ordered_pair(iu, iv))
    sub = LabeledGraph(
        n=len(nodes),
        edges=EdgeSet(len(nodes), frozenset(pairs)),
        labels=tuple(g.labels[node] for node in nodes),
        features=None if g.features is None else g.features[np.asarray(nodes, dtype=np.int64)],
        split=tuple(g.split[node] for node in nodes),
    )
    return sub, index


def induce_edges(edges: EdgeSet, index: Mapping[int, int], new_n: int) -> EdgeSet:
    """Restrict an edge set to the nodes in `index`, reindexed."""
    pairs = []
    for u, v in edges.pairs:
        iu = index.get(u)
        iv = index.get(v)
        if iu is not None and iv is not None:
            pairs.append(ordered_pair(iu, iv))
    return EdgeSet(new_n, frozenset(pairs))
