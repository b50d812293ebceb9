"""Homophily-enhancing graph rewiring guided by diffusion-built references."""

from .config import DEFAULT_EPSILON_GRID, DEFAULT_K_FRACTIONS, RunConfig
from .graph import (
    EdgeSet,
    HomophilyReport,
    LabeledGraph,
    dirichlet_energy,
    edge_homophily,
)
from .kernels import (
    DenseKernel,
    KernelConfig,
    gaussian_affinity,
    label_affinity,
    normalize,
    pdp_product,
)
from .partition import ClusterOutcome, Partition, RefineRun, partition, run_refine
from .reference import (
    ClippedKernel,
    ConditionReport,
    ReferenceGraph,
    SampledPair,
    check_addition_condition,
    check_deletion_condition,
    clip_kernel,
    edges_from_clipped,
    reference_from_data,
    sampled_homophily_estimate,
    select_epsilon,
)
from .rewiring import (
    MonotonicityReport,
    RewirePlan,
    RewiredGraph,
    build_plan,
    execute,
    expected_homophily_add,
    expected_homophily_delete,
    monotonicity_report,
)
from .synth import (
    PerturbedReferenceSpec,
    SbmSpec,
    SeparabilityCheck,
    generate_sbm,
    homophily_curve,
    ideal_reference,
    perturb_reference,
    separability_check,
    theorem1_bound_check,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_EPSILON_GRID",
    "DEFAULT_K_FRACTIONS",
    "RunConfig",
    "EdgeSet",
    "HomophilyReport",
    "LabeledGraph",
    "dirichlet_energy",
    "edge_homophily",
    "DenseKernel",
    "KernelConfig",
    "gaussian_affinity",
    "label_affinity",
    "normalize",
    "pdp_product",
    "ClusterOutcome",
    "Partition",
    "RefineRun",
    "partition",
    "run_refine",
    "ClippedKernel",
    "ConditionReport",
    "ReferenceGraph",
    "SampledPair",
    "check_addition_condition",
    "check_deletion_condition",
    "clip_kernel",
    "edges_from_clipped",
    "reference_from_data",
    "sampled_homophily_estimate",
    "select_epsilon",
    "MonotonicityReport",
    "RewirePlan",
    "RewiredGraph",
    "build_plan",
    "execute",
    "expected_homophily_add",
    "expected_homophily_delete",
    "monotonicity_report",
    "PerturbedReferenceSpec",
    "SbmSpec",
    "SeparabilityCheck",
    "generate_sbm",
    "homophily_curve",
    "ideal_reference",
    "perturb_reference",
    "separability_check",
    "theorem1_bound_check",
]
