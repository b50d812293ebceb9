"""Exception and warning types shared across the package."""


class RefineError(Exception):
    """Base class for all package-specific errors."""


class EmptyGraph(RefineError):
    """The operation needs at least one edge."""


class NoLabeledEdges(RefineError):
    """Every edge has at least one endpoint with an unknown label."""


class UniverseMismatch(RefineError):
    """Edge sets over different node universes cannot be combined."""


class ShapeMismatch(RefineError):
    """Array dimensions do not match the graph or each other."""


class NonFiniteFeatures(RefineError):
    """Feature or embedding matrix contains NaN or infinite entries."""


class ZeroRowSum(RefineError):
    """Kernel normalization hit a row whose entries sum to zero."""

    def __init__(self, node: int):
        self.node = node
        super().__init__(f"kernel row {node} sums to zero (isolated in affinity space)")


class InsufficientSplit(RefineError):
    """A train or validation split required by the operation is empty."""


class AllUndecidable(RefineError):
    """No grid point produced a usable reference graph."""


class EmptyPool(RefineError):
    """The rewiring candidate pool is empty."""


class OverDeletion(RefineError):
    """Requested more deletions than the pool allows."""


class DivisionByZero(RefineError):
    """A closed-form expectation has a zero denominator."""


class PreconditionViolated(RefineError):
    """Inputs do not satisfy the precondition claimed by the caller."""


class ParseError(RefineError):
    """A dataset file could not be parsed."""

    def __init__(self, path, line_no: int, message: str):
        self.path = str(path)
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {message}")


class InconsistentNodeCount(RefineError):
    """Files in a dataset bundle disagree on the number of nodes."""


class DegenerateScaleWarning(UserWarning):
    """Kernel scale underflowed every off-diagonal affinity to zero."""


class DegenerateResultWarning(UserWarning):
    """An operation produced an empty edge set at an extreme setting."""


class BudgetClampedWarning(UserWarning):
    """Requested edge budget exceeded the candidate pool and was clamped."""
