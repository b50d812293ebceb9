"""Edge addition/deletion against a reference graph, with exact expectations.

A rewire plan fixes the direction, the budget k, the candidate pool
(reference-minus-graph for addition, graph-minus-reference for deletion),
and a seed. Executing a plan samples k pool edges uniformly without
replacement and applies them. The expected homophily of the result has a
closed form, exact in rational arithmetic; sampling without replacement
leaves the expectation unchanged (the hypergeometric mean equals
k * same/(same+diff)).
"""

from __future__ import annotations

import math
import random
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .errors import (
    BudgetClampedWarning,
    DivisionByZero,
    EmptyPool,
    OverDeletion,
)
from .graph import EdgeSet, LabeledGraph, count_labeled_edges
from .reference import ReferenceGraph

DIRECTIONS = ("add", "delete")


@dataclass(frozen=True)
class RewirePlan:
    direction: str
    k: int
    candidate_pool: EdgeSet
    seed: int
    predicted_expectation: Optional[Fraction] = None

    def __post_init__(self):
        if self.direction not in DIRECTIONS:
            raise ValueError(f"unknown direction {self.direction!r}")
        if not (1 <= self.k <= len(self.candidate_pool)):
            raise ValueError(
                f"k={self.k} outside [1, {len(self.candidate_pool)}] for this pool"
            )


@dataclass(frozen=True, eq=False)
class RewiredGraph:
    graph: LabeledGraph
    applied: EdgeSet
    plan: RewirePlan


def resolve_budget(k: int | float, pool_size: int) -> int:
    """Absolute budget from an int or a fraction of the pool.

    Fractions round half-up; results are clamped into [1, pool_size]
    (a warning is emitted when an absolute k must be clamped down).
    """
    if pool_size < 1:
        raise EmptyPool("candidate pool is empty")
    if isinstance(k, float):
        # Any float is a fraction of the pool; 1.0 means the whole pool.
        if not (0.0 < k <= 1.0):
            raise ValueError(f"fractional budget {k} outside (0, 1]")
        return min(pool_size, max(1, math.floor(k * pool_size + 0.5)))
    k = int(k)
    if k < 1:
        raise ValueError(f"budget must be at least 1, got {k}")
    if k > pool_size:
        warnings.warn(
            f"budget {k} exceeds pool size {pool_size}; clamped", BudgetClampedWarning
        )
        return pool_size
    return k


def candidate_pool(g: LabeledGraph, ref: ReferenceGraph, direction: str) -> EdgeSet:
    """Reference-minus-graph edges for 'add'; graph-minus-reference for 'delete'."""
    if direction == "add":
        return ref.edges.residual(g.edges)
    if direction == "delete":
        return g.edges.residual(ref.edges)
    raise ValueError(f"unknown direction {direction!r}")


def build_plan(
    g: LabeledGraph,
    ref: ReferenceGraph,
    direction: str,
    k: int | float,
    seed: int,
) -> RewirePlan:
    """Materialize the candidate pool and attach the predicted expectation.

    The prediction is attached only when every pool edge is fully labeled
    (and, for deletion, at least one labeled edge survives).
    """
    pool = candidate_pool(g, ref, direction)
    if len(pool) == 0:
        raise EmptyPool(f"no candidates for direction {direction!r}")
    budget = resolve_budget(k, len(pool))
    predicted = None
    pool_same, pool_diff = count_labeled_edges(pool, g.labels)
    if pool_same + pool_diff == len(pool):
        n_same, m_diff = count_labeled_edges(g.edges, g.labels)
        if direction == "add" and n_same + m_diff >= 1:
            predicted = expected_homophily_add(n_same, m_diff, pool_same, pool_diff, budget)
        elif direction == "delete" and n_same + m_diff - budget >= 1:
            predicted = expected_homophily_delete(n_same, m_diff, pool_same, pool_diff, budget)
    return RewirePlan(direction, budget, pool, seed, predicted)


def sample_pool(pool: EdgeSet, k: int, seed: int) -> list[tuple[int, int]]:
    """k pool edges, uniform without replacement.

    Partial Fisher-Yates over the sorted candidate list, so the draw is
    deterministic in (pool, k, seed) and independent of set iteration
    order.
    """
    candidates = sorted(pool.pairs)
    if not (0 <= k <= len(candidates)):
        raise ValueError(f"cannot sample {k} of {len(candidates)} candidates")
    rng = random.Random(seed)
    last = len(candidates)
    for i in range(k):
        j = rng.randrange(i, last)
        candidates[i], candidates[j] = candidates[j], candidates[i]
    return candidates[:k]


def execute(plan: RewirePlan, g: LabeledGraph) -> RewiredGraph:
    """Apply a plan: union with the sample for add, difference for delete."""
    pool = plan.candidate_pool
    if plan.direction == "add":
        if pool.pairs & g.edges.pairs:
            raise ValueError("addition pool overlaps the existing edge set")
    else:
        if not pool.pairs <= g.edges.pairs:
            raise ValueError("deletion pool contains edges absent from the graph")
    sampled = frozenset(sample_pool(pool, plan.k, plan.seed))
    if plan.direction == "add":
        new_pairs = g.edges.pairs | sampled
    else:
        new_pairs = g.edges.pairs - sampled
    new_graph = g.with_edges(EdgeSet(g.n, new_pairs))
    return RewiredGraph(new_graph, EdgeSet(g.n, sampled), plan)


def expected_homophily_add(
    n_same: int, m_diff: int, n_prime: int, m_prime: int, k: int
) -> Fraction:
    """E[H] after adding k uniform pool edges:
    (n_same + k * n'/(n'+m')) / (n_same + m_diff + k).
    """
    if min(n_same, m_diff, n_prime, m_prime, k) < 0:
        raise ValueError("edge counts and k must be nonnegative")
    if n_prime + m_prime == 0:
        raise DivisionByZero("empty addition pool")
    if n_same + m_diff + k == 0:
        raise DivisionByZero("graph has no labeled edges and k=0")
    hit_rate = Fraction(n_prime, n_prime + m_prime)
    return (n_same + k * hit_rate) / (n_same + m_diff + k)


def expected_homophily_delete(
    n_same: int, m_diff: int, n_star: int, m_star: int, k: int
) -> Fraction:
    """E[H] after deleting k uniform pool edges:
    (n_same - k * n*/(n*+m*)) / (n_same + m_diff - k).
    """
    if min(n_same, m_diff, n_star, m_star, k) < 0:
        raise ValueError("edge counts and k must be nonnegative")
    if n_star + m_star == 0:
        raise DivisionByZero("empty deletion pool")
    if k > n_star + m_star:
        raise OverDeletion(f"k={k} exceeds pool size {n_star + m_star}")
    if k >= n_same + m_diff:
        raise DivisionByZero(f"deleting k={k} of {n_same + m_diff} edges leaves none")
    hit_rate = Fraction(n_star, n_star + m_star)
    return (n_same - k * hit_rate) / (n_same + m_diff - k)


@dataclass(frozen=True)
class MonotonicityReport:
    """Closed-form expectation sequence for k = 0..k_max and its trend."""

    direction: str
    entries: tuple[tuple[int, Fraction], ...]
    trend: str  # strict-increase | strict-decrease | constant


def monotonicity_report(
    g: LabeledGraph, ref: ReferenceGraph, direction: str, k_max: int
) -> MonotonicityReport:
    """Expectation sequence; requires fully labeled graph and pool edges."""
    pool = candidate_pool(g, ref, direction)
    if len(pool) == 0:
        raise EmptyPool(f"no candidates for direction {direction!r}")
    pool_same, pool_diff = count_labeled_edges(pool, g.labels)
    if pool_same + pool_diff != len(pool):
        raise ValueError("monotonicity report needs labels on every pool edge")
    n_same, m_diff = count_labeled_edges(g.edges, g.labels)
    if n_same + m_diff != len(g.edges):
        raise ValueError("monotonicity report needs labels on every graph edge")
    limit = min(k_max, len(pool))
    if direction == "delete":
        limit = min(limit, n_same + m_diff - 1)
    entries = []
    for k in range(0, limit + 1):
        if k == 0:
            value = Fraction(n_same, n_same + m_diff)
        elif direction == "add":
            value = expected_homophily_add(n_same, m_diff, pool_same, pool_diff, k)
        else:
            value = expected_homophily_delete(n_same, m_diff, pool_same, pool_diff, k)
        entries.append((k, value))
    values = [v for _, v in entries]
    if len(values) >= 2 and all(b > a for a, b in zip(values, values[1:])):
        trend = "strict-increase"
    elif len(values) >= 2 and all(b < a for a, b in zip(values, values[1:])):
        trend = "strict-decrease"
    else:
        trend = "constant"
    return MonotonicityReport(direction, tuple(entries), trend)
