"""Synthetic graphs, perturbed ideal references, and validation harnesses.

Everything here backs desk-scale validation: stochastic block model
generators with Gaussian class features, ideal/perturbed reference graphs
with dialed-in homophily, homophily-vs-budget sweep curves, an exhaustive
subset-enumeration oracle for the closed-form expectations, and the
embedding-smoothness lower-bound check.
"""

from __future__ import annotations

import itertools
import math
import random
import statistics
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateResultWarning, EmptyPool, PreconditionViolated
from .graph import (
    EdgeSet,
    LabeledGraph,
    dirichlet_energy,
    edge_homophily,
)
from .reference import ReferenceGraph
from .rewiring import (
    build_plan,
    candidate_pool,
    execute,
    expected_homophily_add,
    expected_homophily_delete,
)
from .seeding import splitmix64, trial_seed

RESIDUAL_TOLERANCE = 1e-8


@dataclass(frozen=True)
class PerturbedReferenceSpec:
    """Flip rate for degrading an ideal reference graph."""

    p: float
    seed: int
    mode: str = "flip"

    def __post_init__(self):
        if not (0.0 < self.p < 1.0):
            raise ValueError(f"flip probability must be in (0,1), got {self.p}")
        if self.mode != "flip":
            raise ValueError(f"unknown perturbation mode {self.mode!r}")


@dataclass(frozen=True)
class SbmSpec:
    """Stochastic block model with per-class Gaussian features."""

    class_sizes: tuple[int, ...]
    intra_p: float
    inter_p: float
    seed: int
    feature_dim: Optional[int] = None
    class_means: Optional[tuple[tuple[float, ...], ...]] = None
    feature_scale: float = 1.0
    split_fracs: tuple[float, float, float] = (0.6, 0.2, 0.2)

    def __post_init__(self):
        if not self.class_sizes or any(s < 1 for s in self.class_sizes):
            raise ValueError("class sizes must all be >= 1")
        for p in (self.intra_p, self.inter_p):
            if not (0.0 <= p <= 1.0):
                raise ValueError(f"edge probability {p} outside [0,1]")
        if self.feature_scale <= 0:
            raise ValueError("feature scale must be positive")
        if abs(sum(self.split_fracs) - 1.0) > 1e-9 or any(f < 0 for f in self.split_fracs):
            raise ValueError(f"split fractions must be nonnegative and sum to 1")

    @property
    def n(self) -> int:
        return sum(self.class_sizes)


@dataclass(frozen=True, eq=False)
class SeparabilityCheck:
    """Embeddings Z, a linear classifier W with Y = Z @ W, and the residual."""

    embeddings: np.ndarray
    classifier: np.ndarray
    labels_onehot: np.ndarray
    alpha_m: float
    residual: float


@dataclass(frozen=True)
class BoundCheck:
    energy: float
    bound: float
    satisfied: bool
    slack: float


@dataclass(frozen=True)
class CurvePoint:
    k: int
    mean_h: Fraction
    expected_h: Fraction
    std_h: float
    trials: int


def ideal_reference(labels: Sequence) -> ReferenceGraph:
    """Union of per-class cliques; homophily exactly 1 when nonempty."""
    if any(l is None for l in labels):
        raise ValueError("ideal reference requires a label for every node")
    n = len(labels)
    pairs = frozenset(
        (u, v) for u in range(n) for v in range(u + 1, n) if labels[u] == labels[v]
    )
    estimated = Fraction(1) if pairs else None
    return ReferenceGraph(EdgeSet(n, pairs), "synthetic", estimated)


def perturb_reference(
    ideal: ReferenceGraph, labels: Sequence, spec: PerturbedReferenceSpec
) -> ReferenceGraph:
    """Independently drop same-class edges and add cross-class pairs at rate p.

    Deterministic given the spec seed. Warns (DegenerateResultWarning) if
    the perturbed edge set comes out empty.
    """
    if any(l is None for l in labels):
        raise ValueError("perturbation requires a label for every node")
    n = len(labels)
    rng = random.Random(spec.seed)
    kept = set()
    for u, v in sorted(ideal.edges.pairs):
        if rng.random() >= spec.p:
            kept.add((u, v))
    for u in range(n):
        for v in range(u + 1, n):
            if labels[u] == labels[v] or (u, v) in ideal.edges.pairs:
                continue
            if rng.random() < spec.p:
                kept.add((u, v))
    if not kept:
        warnings.warn(
            f"perturbation at p={spec.p} produced an empty reference", DegenerateResultWarning
        )
    edges = EdgeSet(n, frozenset(kept))
    same = sum(1 for u, v in kept if labels[u] == labels[v])
    estimated = Fraction(same, len(kept)) if kept else None
    return ReferenceGraph(edges, "synthetic", estimated)


def homophily_curve(
    g: LabeledGraph,
    ref: ReferenceGraph,
    direction: str,
    k_grid: Sequence[int],
    trials: int,
    seed: int,
) -> list[CurvePoint]:
    """Mean realized vs expected homophily per budget, over seeded trials.

    Requires a fully labeled graph; realized homophily per trial is exact,
    and the mean over trials stays a rational.
    """
    if any(l is None for l in g.labels):
        raise ValueError("homophily curve requires a fully labeled graph")
    if trials < 1:
        raise ValueError("need at least one trial")
    base_h = edge_homophily(g).homophily
    points = []
    for ki, k in enumerate(sorted(set(int(k) for k in k_grid))):
        if k < 0:
            raise ValueError(f"budget {k} must be nonnegative")
        if k == 0:
            points.append(CurvePoint(0, base_h, base_h, 0.0, trials))
            continue
        realized: list[Fraction] = []
        expected = None
        for t in range(trials):
            plan = build_plan(g, ref, direction, k, trial_seed(seed, ki, t))
            expected = plan.predicted_expectation
            rewired = execute(plan, g)
            realized.append(edge_homophily(rewired.graph).homophily)
        mean_h = sum(realized) / len(realized)
        std_h = statistics.stdev(float(h) for h in realized) if trials > 1 else 0.0
        if expected is None:
            raise ValueError("expected homophily undefined for this pool")
        points.append(CurvePoint(k, mean_h, expected, std_h, trials))
    return points


def write_curve_csv(points: Sequence[CurvePoint], path) -> None:
    """CSV emission for a sweep: header k,mean_H,expected_H,std_H,trials."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("k,mean_H,expected_H,std_H,trials\n")
        for pt in points:
            fh.write(
                f"{pt.k},{float(pt.mean_h)!r},{float(pt.expected_h)!r},"
                f"{pt.std_h!r},{pt.trials}\n"
            )


def one_hot_labels(labels: Sequence) -> np.ndarray:
    """One-hot label matrix with classes ordered by sorted label value."""
    classes = sorted(set(labels), key=repr)
    index = {c: i for i, c in enumerate(classes)}
    y = np.zeros((len(labels), len(classes)))
    for i, label in enumerate(labels):
        y[i, index[label]] = 1.0
    return y


def separability_check(
    embeddings, classifier, labels_onehot, alpha_m: float = 1.0
) -> SeparabilityCheck:
    """Package (Z, W, Y) with the max-entry residual of Y - Z @ W."""
    z = np.asarray(embeddings, dtype=np.float64)
    w = np.asarray(classifier, dtype=np.float64)
    y = np.asarray(labels_onehot, dtype=np.float64)
    residual = float(np.abs(y - z @ w).max()) if y.size else 0.0
    return SeparabilityCheck(z, w, y, alpha_m, residual)


def theorem1_bound_check(g: LabeledGraph, check: SeparabilityCheck) -> BoundCheck:
    """Smoothness lower bound for linearly separable embeddings.

    energy = tr(Z^T L Z); bound = alpha_m * |E| * (1 - H) / (2 * ||W||_F^2).
    The precondition Y = Z @ W must hold to within RESIDUAL_TOLERANCE.
    """
    if check.residual > RESIDUAL_TOLERANCE:
        raise PreconditionViolated(
            f"labels are not an exact linear readout of the embeddings "
            f"(residual {check.residual:.3e})"
        )
    energy = dirichlet_energy(g, check.embeddings)
    h = edge_homophily(g).homophily
    w_sq = float(np.sum(check.classifier * check.classifier))
    if w_sq == 0.0:
        raise PreconditionViolated("classifier matrix is zero")
    bound = check.alpha_m * len(g.edges) * float(1 - h) / (2.0 * w_sq)
    return BoundCheck(energy=energy, bound=bound, satisfied=energy >= bound, slack=energy - bound)


def _decode_triangular(t: np.ndarray, s: int) -> tuple[np.ndarray, np.ndarray]:
    """Index in [0, s*(s-1)/2) -> pair (i, j) with i < j, lexicographic."""
    row_counts = np.arange(s - 1, 0, -1)
    cum = np.cumsum(row_counts)
    i = np.searchsorted(cum, t, side="right")
    prev = np.where(i > 0, cum[i - 1], 0)
    j = t - prev + i + 1
    return i, j


def generate_sbm(spec: SbmSpec) -> LabeledGraph:
    """Block-model edges, Gaussian class features, labels, and splits.

    Nodes are numbered class by class; edge counts per block are binomial
    and the edges inside each block are uniform without replacement, which
    matches independent per-pair sampling in distribution.
    """
    sizes = spec.class_sizes
    offsets = [0]
    for s in sizes:
        offsets.append(offsets[-1] + s)
    n = spec.n
    npgen = np.random.Generator(np.random.PCG64(spec.seed))
    idx_rng = random.Random(splitmix64(spec.seed ^ 0x5B3D))
    pairs: set[tuple[int, int]] = set()
    for a in range(len(sizes)):
        for b in range(a, len(sizes)):
            if a == b:
                m_pairs = sizes[a] * (sizes[a] - 1) // 2
                p = spec.intra_p
            else:
                m_pairs = sizes[a] * sizes[b]
                p = spec.inter_p
            if m_pairs == 0 or p == 0.0:
                continue
            count = int(npgen.binomial(m_pairs, p)) if p < 1.0 else m_pairs
            if count == 0:
                continue
            chosen = np.asarray(sorted(idx_rng.sample(range(m_pairs), count)), dtype=np.int64)
            if a == b:
                ii, jj = _decode_triangular(chosen, sizes[a])
                us = ii + offsets[a]
                vs = jj + offsets[a]
            else:
                us = chosen // sizes[b] + offsets[a]
                vs = chosen % sizes[b] + offsets[b]
            pairs.update(zip(us.tolist(), vs.tolist()))
    labels: list[int] = []
    for cls, s in enumerate(sizes):
        labels.extend([cls] * s)
    dim = spec.feature_dim if spec.feature_dim is not None else len(sizes)
    if spec.class_means is not None:
        means = np.asarray(spec.class_means, dtype=np.float64)
        if means.shape != (len(sizes), dim):
            raise ValueError(f"class means shape {means.shape} != ({len(sizes)}, {dim})")
    else:
        means = np.zeros((len(sizes), dim))
        for cls in range(len(sizes)):
            means[cls, cls % dim] = 4.0 * spec.feature_scale
    features = np.empty((n, dim))
    for cls, s in enumerate(sizes):
        block = npgen.normal(0.0, spec.feature_scale, size=(s, dim)) + means[cls]
        features[offsets[cls] : offsets[cls] + s] = block
    order = list(range(n))
    idx_rng.shuffle(order)
    n_train = int(spec.split_fracs[0] * n)
    n_val = int(spec.split_fracs[1] * n)
    split = ["none"] * n
    for pos, node in enumerate(order):
        if pos < n_train:
            split[node] = "train"
        elif pos < n_train + n_val:
            split[node] = "val"
        else:
            split[node] = "test"
    return LabeledGraph(
        n=n,
        edges=EdgeSet(n, frozenset(pairs)),
        labels=tuple(labels),
        features=features,
        split=tuple(split),
    )


def exhaustive_expected_homophily(
    g: LabeledGraph, ref: ReferenceGraph, direction: str, k: int
) -> Fraction:
    """Brute-force oracle: average H over ALL k-subsets of the pool.

    Enumerates every C(|pool|, k) subset, applies it, and recounts the
    label agreement of the resulting edge set from scratch. Exact
    rational; exponential, so only for small pools.
    """
    if any(l is None for l in g.labels):
        raise ValueError("oracle requires a fully labeled graph")
    pool = sorted(candidate_pool(g, ref, direction).pairs)
    if not (1 <= k <= len(pool)):
        raise ValueError(f"k={k} invalid for pool of {len(pool)}")
    if direction == "delete" and k >= len(g.edges):
        raise ValueError("deleting every edge leaves homophily undefined")
    base = g.edges.pairs
    total = Fraction(0)
    count = 0
    for subset in itertools.combinations(pool, k):
        if direction == "add":
            edges = base | frozenset(subset)
        else:
            edges = base - frozenset(subset)
        same = sum(1 for u, v in edges if g.labels[u] == g.labels[v])
        total += Fraction(same, len(edges))
        count += 1
    return total / count


@dataclass(frozen=True)
class ValidationSummary:
    cases: int
    failures: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.failures


def _random_case(rng: random.Random, n_max: int, direction: str):
    """A random labeled graph + reference pair with a usable pool."""
    while True:
        n = rng.randint(4, n_max)
        num_classes = rng.randint(2, 3)
        labels = [rng.randrange(num_classes) for _ in range(n)]
        all_pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
        edges = {pair for pair in all_pairs if rng.random() < rng.uniform(0.3, 0.7)}
        if direction == "add":
            pool = [pair for pair in all_pairs if pair not in edges and rng.random() < 0.5]
            ref_pairs = set(pool) | {p for p in edges if rng.random() < 0.5}
        else:
            pool = [pair for pair in edges if rng.random() < 0.5]
            ref_pairs = (edges - set(pool)) | {
                p for p in all_pairs if p not in edges and rng.random() < 0.3
            }
        if not edges or not pool:
            continue
        if direction == "delete" and len(pool) >= len(edges):
            continue
        g = LabeledGraph.build(n, edges, labels=labels)
        ref = ReferenceGraph(EdgeSet.build(n, ref_pairs), "synthetic")
        return g, ref, pool


def run_proposition_validation(
    n_max: int = 8, cases: int = 200, seed: int = 0, max_subsets: int = 400
) -> ValidationSummary:
    """Closed-form expectations vs the exhaustive oracle, plus monotonicity.

    For every random case the closed form must equal the subset-average
    exactly, and the expectation sequence must be strictly increasing,
    strictly decreasing, or constant exactly as the sign of
    (pool homophily - graph homophily) dictates.
    """
    rng = random.Random(seed)
    failures: list[str] = []
    done = 0
    while done < cases:
        direction = "add" if done % 2 == 0 else "delete"
        g, ref, pool = _random_case(rng, n_max, direction)
        n_same = sum(1 for u, v in g.edges.pairs if g.labels[u] == g.labels[v])
        m_diff = len(g.edges) - n_same
        p_same = sum(1 for u, v in pool if g.labels[u] == g.labels[v])
        p_diff = len(pool) - p_same
        k_options = sorted(
            {
                k
                for k in (1, 2, len(pool) // 2, len(pool))
                if 1 <= k <= len(pool) and math.comb(len(pool), k) <= max_subsets
            }
        )
        if direction == "delete":
            k_options = [k for k in k_options if k < n_same + m_diff]
        if not k_options:
            continue
        for k in k_options:
            if direction == "add":
                closed = expected_homophily_add(n_same, m_diff, p_same, p_diff, k)
            else:
                closed = expected_homophily_delete(n_same, m_diff, p_same, p_diff, k)
            oracle = exhaustive_expected_homophily(g, ref, direction, k)
            if closed != oracle:
                failures.append(
                    f"case {done} ({direction}, k={k}): closed form {closed} != oracle {oracle}"
                )
        trend_error = _check_monotonic_trend(
            direction, n_same, m_diff, p_same, p_diff, len(pool), done
        )
        if trend_error:
            failures.append(trend_error)
        done += 1
    return ValidationSummary(done, tuple(failures))


def _check_monotonic_trend(direction, n_same, m_diff, p_same, p_diff, pool_size, case_id):
    h_graph = Fraction(n_same, n_same + m_diff)
    h_pool = Fraction(p_same, p_same + p_diff)
    limit = pool_size if direction == "add" else min(pool_size, n_same + m_diff - 1)
    seq = [h_graph]
    for k in range(1, limit + 1):
        if direction == "add":
            seq.append(expected_homophily_add(n_same, m_diff, p_same, p_diff, k))
        else:
            seq.append(expected_homophily_delete(n_same, m_diff, p_same, p_diff, k))
    if len(seq) < 2:
        return None
    rising = all(b > a for a, b in zip(seq, seq[1:]))
    falling = all(b < a for a, b in zip(seq, seq[1:]))
    flat = all(b == a for a, b in zip(seq, seq[1:]))
    condition_improves = h_pool > h_graph if direction == "add" else h_pool < h_graph
    condition_degrades = h_pool < h_graph if direction == "add" else h_pool > h_graph
    if condition_improves and not rising:
        return f"case {case_id} ({direction}): condition holds but sequence not rising"
    if condition_degrades and not falling:
        return f"case {case_id} ({direction}): reverse condition holds but sequence not falling"
    if not condition_improves and not condition_degrades and not flat:
        return f"case {case_id} ({direction}): equality case but sequence not constant"
    return None


def run_theorem_validation(trials: int = 1000, n_max: int = 10, seed: int = 0) -> ValidationSummary:
    """Randomized check of the smoothness lower bound with Z = Y, W = I."""
    rng = random.Random(seed)
    failures: list[str] = []
    done = 0
    while done < trials:
        n = rng.randint(2, n_max)
        num_classes = rng.randint(1, min(3, n))
        labels = [rng.randrange(num_classes) for _ in range(n)]
        pairs = {
            (u, v)
            for u in range(n)
            for v in range(u + 1, n)
            if rng.random() < rng.uniform(0.2, 0.8)
        }
        if not pairs:
            continue
        g = LabeledGraph.build(n, pairs, labels=labels)
        y = one_hot_labels(labels)
        check = separability_check(y, np.eye(y.shape[1]), y)
        result = theorem1_bound_check(g, check)
        if not result.satisfied:
            failures.append(
                f"trial {done}: energy {result.energy} below bound {result.bound}"
            )
        done += 1
    return ValidationSummary(done, tuple(failures))
