"""Run configuration: hyperparameter defaults, grids, and validation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

# Default scale grid searched when epsilon is not fixed.
DEFAULT_EPSILON_GRID = (1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e0, 1e1, 1e2)

# Default fractional budget grid, resolved against each cluster's pool.
DEFAULT_K_FRACTIONS = (0.1, 0.3, 0.5, 0.7, 0.9, 1.0)

KERNEL_KINDS = ("pdp", "d_only")
DIRECTIONS = ("add", "delete")
METRICS = ("euclidean", "cosine_distance")
CLIP_MODES = ("or", "and")
CONDITION_MODES = ("exact", "sampled")


def resolve_cluster_size(cluster_size: Optional[int], n: int) -> int:
    """Explicit size, or the size-threshold policy when None.

    Policy: no clustering below 1000 nodes, clusters of 500 up to 25000
    nodes, clusters of 100 above that.
    """
    if cluster_size is not None:
        if cluster_size < 2:
            raise ValueError(f"cluster size must be >= 2, got {cluster_size}")
        return cluster_size
    if n < 1000:
        return max(2, n)
    if n <= 25000:
        return 500
    return 100


@dataclass(frozen=True)
class RunConfig:
    """Everything a pipeline run needs besides the graph itself.

    epsilon is a fixed scale or a grid to select from; k is an absolute
    per-cluster edge budget (int) or a fraction of each cluster's pool
    (float in (0,1]); cluster_size None means the automatic policy;
    condition_mode picks how condition checks estimate homophily
    ('sampled' for deployment with partial labels, 'exact' for synthetic
    or fully labeled data).
    """

    epsilon: Union[float, Sequence[float]] = DEFAULT_EPSILON_GRID
    kernel: str = "pdp"
    direction: str = "add"
    k: Union[int, float] = 0.5
    cluster_size: Optional[int] = None
    seed: int = 0
    metric: str = "euclidean"
    clip_mode: str = "or"
    condition_mode: str = "sampled"

    def __post_init__(self):
        if isinstance(self.epsilon, (int, float)):
            if not (self.epsilon > 0):
                raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        else:
            grid = tuple(float(e) for e in self.epsilon)
            if not grid or any(e <= 0 for e in grid):
                raise ValueError("epsilon grid must be nonempty and positive")
            object.__setattr__(self, "epsilon", grid)
        if self.kernel not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel {self.kernel!r}")
        if self.direction not in DIRECTIONS:
            raise ValueError(f"unknown direction {self.direction!r}")
        if isinstance(self.k, float):
            if not (0.0 < self.k <= 1.0):
                raise ValueError(f"fractional k must be in (0,1], got {self.k}")
        elif self.k < 1:
            raise ValueError(f"absolute k must be >= 1, got {self.k}")
        if self.cluster_size is not None and self.cluster_size < 2:
            raise ValueError(f"cluster size must be >= 2, got {self.cluster_size}")
        if not (-(1 << 63) <= self.seed < (1 << 64)):
            raise ValueError("seed must fit in 64 bits")
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.clip_mode not in CLIP_MODES:
            raise ValueError(f"unknown clip mode {self.clip_mode!r}")
        if self.condition_mode not in CONDITION_MODES:
            raise ValueError(f"unknown condition mode {self.condition_mode!r}")

    def echo(self) -> dict:
        """JSON-ready view of the configuration."""
        eps = self.epsilon if isinstance(self.epsilon, float) else list(self.epsilon)
        return {
            "epsilon": eps,
            "kernel": self.kernel,
            "direction": self.direction,
            "k": self.k,
            "cluster_size": self.cluster_size,
            "seed": self.seed,
            "metric": self.metric,
            "clip_mode": self.clip_mode,
            "condition_mode": self.condition_mode,
        }
