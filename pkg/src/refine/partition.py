"""Balanced graph partitioning and the full per-cluster rewiring pipeline.

The partitioner is a self-contained multilevel heuristic with a METIS-like
contract: greedy heavy-edge matching coarsening, balanced BFS seeding for
the initial assignment, and boundary Kernighan-Lin refinement while
uncoarsening. It guarantees ceil(n/c) nonempty clusters with a hard size
cap of 1.25*c and is deterministic given its seed.

The pipeline rewires each cluster independently (reference construction,
plan, execution) and reconstructs the full graph, preserving every
original inter-cluster edge. Per-cluster seeds are derived with
SplitMix64(global_seed XOR cluster_id), so results are identical for any
worker count.
"""

from __future__ import annotations

import math
import random
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .config import RunConfig, resolve_cluster_size
from .errors import (
    EmptyGraph,
    EmptyPool,
    InsufficientSplit,
    NoLabeledEdges,
    RefineError,
    ZeroRowSum,
)
from .graph import (
    EdgeSet,
    HomophilyReport,
    LabeledGraph,
    edge_homophily,
    ordered_pair,
)
from .kernels import KernelConfig
from .reference import (
    ConditionReport,
    ReferenceGraph,
    check_addition_condition,
    check_deletion_condition,
    reference_from_data,
    select_epsilon,
)
from .rewiring import RewiredGraph, build_plan, execute
from .seeding import cluster_seed, splitmix64

_EPSILON_SALT = 0x5E1EC7E5
_CONDITION_SALT = 0xC0DECADE
_MAX_EPSILON_SAMPLE = 2000


@dataclass(frozen=True)
class Partition:
    """Assignment of nodes to balanced clusters plus the cut edge set."""

    assignment: tuple[int, ...]
    clusters: tuple[tuple[int, ...], ...]
    inter_cluster_edges: EdgeSet

    def __post_init__(self):
        n = len(self.assignment)
        seen = [False] * n
        for cid, members in enumerate(self.clusters):
            if not members:
                raise ValueError(f"cluster {cid} is empty")
            for u in members:
                if seen[u]:
                    raise ValueError(f"node {u} appears in two clusters")
                seen[u] = True
                if self.assignment[u] != cid:
                    raise ValueError(f"assignment[{u}] disagrees with cluster lists")
        if not all(seen):
            raise ValueError("clusters do not cover every node")

    @property
    def num_clusters(self) -> int:
        return len(self.clusters)


def _build_adjacency(n: int, pairs) -> list[dict[int, int]]:
    adj: list[dict[int, int]] = [dict() for _ in range(n)]
    for u, v in pairs:
        adj[u][v] = adj[u].get(v, 0) + 1
        adj[v][u] = adj[v].get(u, 0) + 1
    return adj


def _match_and_contract(adj, weights, w_limit, rng):
    """One heavy-edge matching pass; returns (fine->coarse map, adj, weights)."""
    n = len(adj)
    order = list(range(n))
    rng.shuffle(order)
    match = [-1] * n
    for u in order:
        if match[u] != -1:
            continue
        best = -1
        best_w = -1
        for v, w in adj[u].items():
            if match[v] != -1:
                continue
            if weights[u] + weights[v] > w_limit:
                continue
            if w > best_w or (w == best_w and (best == -1 or v < best)):
                best, best_w = v, w
        if best != -1:
            match[u] = best
            match[best] = u
    mapping = [-1] * n
    next_id = 0
    for u in range(n):
        if mapping[u] != -1:
            continue
        mapping[u] = next_id
        if match[u] != -1:
            mapping[match[u]] = next_id
        next_id += 1
    new_weights = [0] * next_id
    for u in range(n):
        new_weights[mapping[u]] += weights[u]
    new_adj: list[dict[int, int]] = [dict() for _ in range(next_id)]
    for u in range(n):
        cu = mapping[u]
        row = new_adj[cu]
        for v, w in adj[u].items():
            cv = mapping[v]
            if cv != cu:
                row[cv] = row.get(cv, 0) + w
    return mapping, new_adj, new_weights


def _initial_assignment(adj, weights, num_clusters, cap):
    """Grow one balanced BFS region per cluster from low-degree seeds."""
    n = len(adj)
    assign = [-1] * n
    deg = [sum(row.values()) for row in adj]
    unassigned = set(range(n))
    remaining_w = sum(weights)
    for cl in range(num_clusters):
        left_after = num_clusters - cl - 1
        target = math.ceil(remaining_w / (num_clusters - cl))
        cw = 0
        frontier: deque[int] = deque()
        while cw < target and len(unassigned) > left_after:
            if not frontier:
                seed = min(unassigned, key=lambda u: (deg[u], u))
                unassigned.discard(seed)
                assign[seed] = cl
                cw += weights[seed]
                frontier.append(seed)
                continue
            u = frontier.popleft()
            for v in sorted(adj[u]):
                if assign[v] != -1:
                    continue
                if cw >= target or len(unassigned) <= left_after:
                    break
                if cw + weights[v] > cap:
                    continue
                unassigned.discard(v)
                assign[v] = cl
                cw += weights[v]
                frontier.append(v)
        remaining_w -= cw
    # Anything left over (disconnection corner cases) joins the lightest cluster.
    if unassigned:
        cluster_w = [0] * num_clusters
        for u in range(n):
            if assign[u] != -1:
                cluster_w[assign[u]] += weights[u]
        for u in sorted(unassigned):
            cl = min(range(num_clusters), key=lambda c_: (cluster_w[c_], c_))
            assign[u] = cl
            cluster_w[cl] += weights[u]
    return assign


def _cluster_weights(assign, weights, num_clusters):
    cluster_w = [0] * num_clusters
    for u, cl in enumerate(assign):
        cluster_w[cl] += weights[u]
    return cluster_w


def _force_balance(adj, weights, assign, num_clusters, cap):
    """Safety net: push nodes out of over-cap clusters into light ones."""
    cluster_w = _cluster_weights(assign, weights, num_clusters)
    for cl in range(num_clusters):
        if cluster_w[cl] <= cap:
            continue
        members = [u for u, a in enumerate(assign) if a == cl]
        # Shed loosely connected nodes first.
        members.sort(key=lambda u: (sum(w for v, w in adj[u].items() if assign[v] == cl), u))
        for u in members:
            if cluster_w[cl] <= cap:
                break
            dest = min(
                (d for d in range(num_clusters) if d != cl and cluster_w[d] + weights[u] <= cap),
                key=lambda d: (cluster_w[d], d),
                default=None,
            )
            if dest is None:
                continue
            assign[u] = dest
            cluster_w[cl] -= weights[u]
            cluster_w[dest] += weights[u]
    return assign


def _refine_level(adj, weights, assign, num_clusters, cap, rng, passes=3):
    """Boundary Kernighan-Lin: greedy single-node moves that cut the cut."""
    n = len(adj)
    cluster_w = _cluster_weights(assign, weights, num_clusters)
    for _ in range(passes):
        boundary = [
            u for u in range(n) if any(assign[v] != assign[u] for v in adj[u])
        ]
        rng.shuffle(boundary)
        moved = 0
        for u in boundary:
            cu = assign[u]
            if cluster_w[cu] - weights[u] < 1:
                continue
            conn: dict[int, int] = {}
            for v, w in adj[u].items():
                conn[assign[v]] = conn.get(assign[v], 0) + w
            internal = conn.get(cu, 0)
            best = None
            best_key = None
            for dest in sorted(conn):
                if dest == cu:
                    continue
                if cluster_w[dest] + weights[u] > cap:
                    continue
                gain = conn[dest] - internal
                improves_balance = cluster_w[dest] + weights[u] < cluster_w[cu]
                if gain > 0 or (gain == 0 and improves_balance):
                    key = (gain, cluster_w[cu] - cluster_w[dest], -dest)
                    if best_key is None or key > best_key:
                        best, best_key = dest, key
            if best is not None:
                assign[u] = best
                cluster_w[cu] -= weights[u]
                cluster_w[best] += weights[u]
                moved += 1
        if moved == 0:
            break
    return assign


def partition(g: LabeledGraph, c: int, seed: int = 0) -> Partition:
    """Split into ceil(n/c) balanced clusters (single cluster when n <= c).

    Deterministic given (graph, c, seed). Cluster sizes never exceed
    1.25*c; disconnected components are handled by reseeding the BFS and
    folding leftovers into the lightest cluster.
    """
    if c < 2:
        raise ValueError(f"target cluster size must be >= 2, got {c}")
    n = g.n
    if n <= c:
        return Partition(
            assignment=(0,) * n,
            clusters=(tuple(range(n)),),
            inter_cluster_edges=EdgeSet(n, frozenset()),
        )
    num_clusters = math.ceil(n / c)
    cap = max(int(1.25 * c), math.ceil(n / num_clusters))
    rng = random.Random(seed)
    adj = _build_adjacency(n, g.edges.pairs)
    weights = [1] * n
    levels: list[tuple[list[dict[int, int]], list[int]]] = []
    maps: list[list[int]] = []
    w_limit = max(1, c // 4)
    coarse_target = max(4 * num_clusters, 64)
    while len(adj) > coarse_target:
        mapping, new_adj, new_weights = _match_and_contract(adj, weights, w_limit, rng)
        if len(new_adj) >= 0.95 * len(adj):
            break
        levels.append((adj, weights))
        maps.append(mapping)
        adj, weights = new_adj, new_weights
    assign = _initial_assignment(adj, weights, num_clusters, cap)
    assign = _force_balance(adj, weights, assign, num_clusters, cap)
    assign = _refine_level(adj, weights, assign, num_clusters, cap, rng)
    while maps:
        mapping = maps.pop()
        fine_adj, fine_weights = levels.pop()
        assign = [assign[mapping[u]] for u in range(len(mapping))]
        assign = _refine_level(fine_adj, fine_weights, assign, num_clusters, cap, rng)
        adj, weights = fine_adj, fine_weights
    assign = _force_balance(adj, weights, assign, num_clusters, cap)

    # Relabel cluster ids by first appearance so output is stable.
    relabel: dict[int, int] = {}
    for u in range(n):
        relabel.setdefault(assign[u], len(relabel))
    assign = [relabel[a] for a in assign]
    clusters: list[list[int]] = [[] for _ in range(len(relabel))]
    for u, cl in enumerate(assign):
        clusters[cl].append(u)
    inter = frozenset(
        (u, v) for u, v in g.edges.pairs if assign[u] != assign[v]
    )
    return Partition(
        assignment=tuple(assign),
        clusters=tuple(tuple(members) for members in clusters),
        inter_cluster_edges=EdgeSet(n, inter),
    )


@dataclass(frozen=True, eq=False)
class ClusterOutcome:
    """Per-cluster pipeline result; edge indices are cluster-local."""

    cluster_id: int
    nodes: tuple[int, ...]
    reference: Optional[ReferenceGraph]
    rewired: Optional[RewiredGraph]
    report: Optional[HomophilyReport]
    condition: Optional[ConditionReport]
    status: str  # "rewired" | "pass_through"
    reason: Optional[str] = None

    @property
    def expected_homophily(self) -> Optional[Fraction]:
        if self.rewired is None:
            return None
        return self.rewired.plan.predicted_expectation


@dataclass(frozen=True, eq=False)
class RefineRun:
    """Output of the full pipeline over a partitioned graph."""

    input_graph: LabeledGraph
    rewired_graph: LabeledGraph
    partition: Partition
    clusters: tuple[ClusterOutcome, ...]
    reference_union: Optional[ReferenceGraph]
    epsilon: float
    conditions: dict[str, ConditionReport]

    @property
    def degraded(self) -> bool:
        return any(c.status == "pass_through" for c in self.clusters)


def _cluster_graph(g: LabeledGraph, nodes: tuple[int, ...], pairs) -> LabeledGraph:
    index = {node: i for i, node in enumerate(nodes)}
    local = frozenset(ordered_pair(index[u], index[v]) for u, v in pairs)
    return LabeledGraph(
        n=len(nodes),
        edges=EdgeSet(len(nodes), local),
        labels=tuple(g.labels[u] for u in nodes),
        features=None if g.features is None else g.features[np.asarray(nodes, dtype=np.int64)],
        split=tuple(g.split[u] for u in nodes),
    )


def rewire_cluster(
    sub: LabeledGraph,
    cfg: RunConfig,
    epsilon: float,
    cluster_id: int,
    nodes: tuple[int, ...],
) -> ClusterOutcome:
    """Reference construction + Eq-style rewiring for one cluster.

    Any pipeline failure (no candidates, unusable kernel, missing splits)
    degrades to pass-through of the cluster's original edges with the
    reason recorded; it never aborts the run.
    """
    seed = cluster_seed(cfg.seed, cluster_id)
    reference = None
    try:
        if cfg.kernel == "pdp":
            train_map = {
                i: sub.labels[i] for i, tag in enumerate(sub.split) if tag == "train"
            }
            if not train_map:
                raise InsufficientSplit("cluster has no train-labeled node")
        else:
            train_map = {}
        if sub.n < 2:
            raise EmptyPool("cluster too small for a reference kernel")
        reference, _ = reference_from_data(
            sub.features,
            train_map,
            KernelConfig(epsilon, cfg.metric),
            kind=cfg.kernel,
            clip_mode=cfg.clip_mode,
        )
        condition = _cluster_condition(sub, reference, cfg, seed)
        plan = build_plan(sub, reference, cfg.direction, cfg.k, seed)
        rewired = execute(plan, sub)
        try:
            report = edge_homophily(rewired.graph)
        except (EmptyGraph, NoLabeledEdges):
            report = None
        return ClusterOutcome(
            cluster_id=cluster_id,
            nodes=nodes,
            reference=reference,
            rewired=rewired,
            report=report,
            condition=condition,
            status="rewired",
        )
    except RefineError as exc:
        return ClusterOutcome(
            cluster_id=cluster_id,
            nodes=nodes,
            reference=reference,
            rewired=None,
            report=None,
            condition=None,
            status="pass_through",
            reason=f"{type(exc).__name__}: {exc}",
        )


def _cluster_condition(
    sub: LabeledGraph, reference: ReferenceGraph, cfg: RunConfig, seed: int
) -> Optional[ConditionReport]:
    check = check_addition_condition if cfg.direction == "add" else check_deletion_condition
    try:
        return check(
            sub,
            reference,
            mode=cfg.condition_mode,
            seed=splitmix64(seed ^ _CONDITION_SALT),
        )
    except InsufficientSplit as exc:
        return ConditionReport(
            direction=cfg.direction,
            holds=None,
            margin=None,
            graph_homophily=None,
            pool_homophily=None,
            pool_size=0,
            estimator=cfg.condition_mode,
            reason=str(exc),
        )


def _resolve_epsilon(g: LabeledGraph, cfg: RunConfig) -> float:
    """A single epsilon shared by every cluster.

    Grid selection runs on a bounded node subsample so that it stays dense-
    kernel tractable on large graphs.
    """
    if isinstance(cfg.epsilon, (int, float)):
        return float(cfg.epsilon)
    grid = tuple(cfg.epsilon)
    if g.n <= _MAX_EPSILON_SAMPLE:
        nodes = list(range(g.n))
    else:
        rng = random.Random(splitmix64(cfg.seed ^ _EPSILON_SALT))
        nodes = sorted(rng.sample(range(g.n), _MAX_EPSILON_SAMPLE))
    feats = g.features[np.asarray(nodes, dtype=np.int64)]
    labels = [g.labels[u] for u in nodes]
    splits = [g.split[u] for u in nodes]
    return select_epsilon(
        feats,
        labels,
        splits,
        grid,
        kind=cfg.kernel,
        metric=cfg.metric,
        clip_mode=cfg.clip_mode,
        seed=splitmix64(cfg.seed ^ _EPSILON_SALT),
    )


def run_refine(g: LabeledGraph, cfg: RunConfig, threads: int = 1) -> RefineRun:
    """Partition, rewire every cluster independently, and reconstruct.

    The output edge set is the union of the rewired within-cluster edge
    sets and all original inter-cluster edges. Deterministic in
    (graph, config); `threads` only controls parallelism.
    """
    if g.features is None:
        raise ValueError("pipeline requires node features")
    if cfg.kernel == "pdp" and not any(
        tag == "train" and lab is not None for tag, lab in zip(g.split, g.labels)
    ):
        raise InsufficientSplit("label-driven kernel requires train-labeled nodes")
    epsilon = _resolve_epsilon(g, cfg)
    c_eff = max(2, resolve_cluster_size(cfg.cluster_size, g.n))
    part = partition(g, c_eff, seed=cfg.seed)

    within: list[list[tuple[int, int]]] = [[] for _ in part.clusters]
    for u, v in g.edges.pairs:
        cu = part.assignment[u]
        if cu == part.assignment[v]:
            within[cu].append((u, v))

    def job(cluster_id: int) -> ClusterOutcome:
        nodes = part.clusters[cluster_id]
        sub = _cluster_graph(g, nodes, within[cluster_id])
        return rewire_cluster(sub, cfg, epsilon, cluster_id, nodes)

    ids = range(part.num_clusters)
    if threads > 1 and part.num_clusters > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(job, ids))
    else:
        outcomes = [job(i) for i in ids]

    merged: set[tuple[int, int]] = set(part.inter_cluster_edges.pairs)
    ref_pairs: set[tuple[int, int]] = set()
    any_reference = False
    for outcome in outcomes:
        nodes = outcome.nodes
        if outcome.rewired is not None:
            merged.update(
                ordered_pair(nodes[a], nodes[b])
                for a, b in outcome.rewired.graph.edges.pairs
            )
        else:
            merged.update(ordered_pair(u, v) for u, v in within[outcome.cluster_id])
        if outcome.reference is not None:
            any_reference = True
            ref_pairs.update(
                ordered_pair(nodes[a], nodes[b]) for a, b in outcome.reference.edges.pairs
            )
    rewired_graph = g.with_edges(EdgeSet(g.n, frozenset(merged)))
    reference_union = (
        ReferenceGraph(EdgeSet(g.n, frozenset(ref_pairs)), cfg.kernel)
        if any_reference
        else None
    )
    conditions: dict[str, ConditionReport] = {}
    if reference_union is not None and len(reference_union.edges) > 0:
        cond_seed = splitmix64(cfg.seed ^ _CONDITION_SALT)
        try:
            conditions["add"] = check_addition_condition(
                g, reference_union, mode=cfg.condition_mode, seed=cond_seed
            )
            conditions["delete"] = check_deletion_condition(
                g, reference_union, mode=cfg.condition_mode, seed=cond_seed
            )
        except InsufficientSplit:
            conditions = {}
    return RefineRun(
        input_graph=g,
        rewired_graph=rewired_graph,
        partition=part,
        clusters=tuple(outcomes),
        reference_union=reference_union,
        epsilon=epsilon,
        conditions=conditions,
    )
