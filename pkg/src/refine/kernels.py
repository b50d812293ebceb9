"""Dense kernel construction: feature affinity, label affinity, and products.

Kernels are built per cluster, so dense O(n^2) storage is the intended
regime. Every stage keeps the matrix symmetric and entrywise nonnegative.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Hashable, Mapping, Optional, Sequence

import numpy as np

from .errors import (
    DegenerateScaleWarning,
    NonFiniteFeatures,
    ShapeMismatch,
    ZeroRowSum,
)

KERNEL_STAGES = ("raw_affinity", "normalized", "product")
METRICS = ("euclidean", "cosine_distance")

SYMMETRY_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class DenseKernel:
    """A symmetric nonnegative n-by-n matrix with a pipeline-stage tag."""

    values: np.ndarray
    stage: str

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 2 or vals.shape[0] != vals.shape[1]:
            raise ShapeMismatch(f"kernel must be square, got shape {vals.shape}")
        if self.stage not in KERNEL_STAGES:
            raise ValueError(f"unknown kernel stage {self.stage!r}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("kernel contains NaN or infinite entries")
        if np.any(vals < 0):
            raise ValueError("kernel contains negative entries")
        scale = max(float(np.abs(vals).max()), 1.0)
        if float(np.abs(vals - vals.T).max()) > SYMMETRY_RTOL * scale:
            raise ValueError("kernel is not symmetric within tolerance")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class KernelConfig:
    """Scale and metric for the feature affinity kernel."""

    epsilon: float
    metric: str = "euclidean"

    def __post_init__(self):
        if not (self.epsilon > 0):
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")


def _squared_distances(x: np.ndarray, metric: str) -> np.ndarray:
    if metric == "euclidean":
        # Expanded form; one matrix multiply dominates. Round-off can push
        # tiny distances negative, so clamp at zero.
        sq_norms = np.einsum("ij,ij->i", x, x)
        d2 = sq_norms[:, None] + sq_norms[None, :] - 2.0 * (x @ x.T)
        np.maximum(d2, 0.0, out=d2)
    else:
        norms = np.linalg.norm(x, axis=1)
        safe = np.where(norms > 0, norms, 1.0)
        unit = x / safe[:, None]
        cos = np.clip(unit @ unit.T, -1.0, 1.0)
        d2 = (1.0 - cos) ** 2
    # Exact symmetry regardless of BLAS summation order.
    d2 = 0.5 * (d2 + d2.T)
    np.fill_diagonal(d2, 0.0)
    return d2


def gaussian_affinity(features, cfg: KernelConfig) -> DenseKernel:
    """exp(-d^2(x_i, x_j) / epsilon) feature affinities with unit diagonal.

    Warns (DegenerateScaleWarning) when epsilon underflows every
    off-diagonal affinity to zero; the kernel is still returned.
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ShapeMismatch(f"need an (n>=2, d) feature matrix, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NonFiniteFeatures("features contain NaN or infinite entries")
    w = np.exp(-_squared_distances(x, cfg.metric) / cfg.epsilon)
    np.fill_diagonal(w, 1.0)
    off_diag_max = float((w - np.eye(w.shape[0])).max())
    if off_diag_max == 0.0:
        warnings.warn(
            f"epsilon={cfg.epsilon} underflows all off-diagonal affinities to zero",
            DegenerateScaleWarning,
        )
    return DenseKernel(w, "raw_affinity")


def label_affinity(
    labels: Mapping[int, Hashable] | Sequence[Hashable], n: int
) -> DenseKernel:
    """Binary label affinity: 1 iff both nodes are labeled and agree, or i=j.

    `labels` is either a mapping node->label over the labeled nodes, or a
    sequence covering a labeled prefix 0..len(labels)-1 of the universe.
    """
    if isinstance(labels, Mapping):
        items = sorted(labels.items())
    else:
        items = list(enumerate(labels))
    w = np.eye(n, dtype=np.float64)
    by_label: dict[Hashable, list[int]] = {}
    for node, label in items:
        if not (0 <= node < n):
            raise ShapeMismatch(f"labeled node {node} out of range for n={n}")
        if label is None:
            continue
        by_label.setdefault(label, []).append(node)
    for group in by_label.values():
        idx = np.asarray(group, dtype=np.int64)
        w[np.ix_(idx, idx)] = 1.0
    return DenseKernel(w, "raw_affinity")


def normalize(w: DenseKernel) -> DenseKernel:
    """Two-step kernel normalization.

    D1 = diag(row sums of W); Wt = D1^-1 W D1^-1;
    D2 = diag(row sums of Wt); result = D2^-1/2 Wt D2^-1/2.
    Scaling is applied as division by sqrt of the outer product, which
    preserves exact float symmetry.
    """
    vals = w.values
    d1 = vals.sum(axis=1)
    bad = np.flatnonzero(d1 <= 0.0)
    if bad.size:
        raise ZeroRowSum(int(bad[0]))
    wt = vals / np.outer(d1, d1)
    d2 = wt.sum(axis=1)
    bad = np.flatnonzero(d2 <= 0.0)
    if bad.size:
        raise ZeroRowSum(int(bad[0]))
    out = wt / np.sqrt(np.outer(d2, d2))
    return DenseKernel(out, "normalized")


def pdp_product(p: DenseKernel, d: DenseKernel) -> DenseKernel:
    """Three-step diffusion product P @ D @ P."""
    if p.stage != "normalized" or d.stage != "normalized":
        raise ValueError("pdp_product expects normalized-stage kernels")
    if p.n != d.n:
        raise ShapeMismatch(f"kernel sizes differ: {p.n} vs {d.n}")
    gamma = p.values @ d.values @ p.values
    gamma = 0.5 * (gamma + gamma.T)
    return DenseKernel(gamma, "product")


def dump_kernel(kernel: DenseKernel, bin_path, meta_path, epsilon: Optional[float] = None) -> None:
    """Row-major little-endian float64 dump plus a sidecar text header."""
    with open(bin_path, "wb") as fh:
        fh.write(np.ascontiguousarray(kernel.values, dtype="<f8").tobytes())
    with open(meta_path, "w", encoding="ascii") as fh:
        fh.write(f"n={kernel.n}\n")
        fh.write(f"stage={kernel.stage}\n")
        fh.write(f"epsilon={'' if epsilon is None else repr(float(epsilon))}\n")


def load_kernel_dump(bin_path, meta_path) -> tuple[DenseKernel, Optional[float]]:
    """Inverse of dump_kernel; mainly for tests and inspection tooling."""
    meta: dict[str, str] = {}
    with open(meta_path, "r", encoding="ascii") as fh:
        for line in fh:
            key, _, value = line.strip().partition("=")
            meta[key] = value
    n = int(meta["n"])
    values = np.frombuffer(open(bin_path, "rb").read(), dtype="<f8").reshape(n, n)
    epsilon = float(meta["epsilon"]) if meta.get("epsilon") else None
    return DenseKernel(values.copy(), meta["stage"]), epsilon
