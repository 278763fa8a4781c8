"""Exception types shared across the package."""


class GittnError(Exception):
    """Base class for errors raised by this package."""


class CapExceededError(GittnError):
    """Group enumeration exceeded its element cap (group too large, or not
    closed at the matching tolerance)."""


class BudgetExceededError(GittnError):
    """A dense computation would exceed the configured memory budget."""


class DefectiveClusterError(GittnError):
    """The eigenvalue-1 cluster of a reduced operator is not an eigenspace:
    the extracted Schur vectors do not satisfy the eigenvector residual bound."""

    def __init__(self, residual: float, bound: float):
        self.residual = residual
        self.bound = bound
        super().__init__(
            f"eigenvalue-1 cluster residual {residual:.3e} exceeds {bound:.3e}; "
            "the cluster is defective"
        )


class NotConjugationClosedError(GittnError):
    """A complex subspace is not closed under conjugation and therefore has
    no real orthonormal basis with the same span."""


class MaxIterationsError(GittnError):
    """Iterative nullspace solver hit its iteration limit before stabilizing."""

    def __init__(self, best_residual: float, iterations: int):
        self.best_residual = best_residual
        self.iterations = iterations
        super().__init__(
            f"no kernel column found after {iterations} iterations; "
            f"best column residual {best_residual:.3e}"
        )


class RelationVerificationError(GittnError):
    """No signed permutation satisfying the requested group relations exists."""


class TrainingDivergedError(GittnError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch: int):
        self.epoch = epoch
        super().__init__(f"loss became non-finite at epoch {epoch}")


class TimeLimitExceeded(GittnError):
    """Cooperative deadline check fired inside a long-running computation."""
