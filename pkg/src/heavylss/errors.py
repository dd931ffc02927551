"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the set where the quantity is defined."""


class BranchPointError(DomainError):
    """Evaluation requested exactly at a spectral edge E = +-2."""


class PoleCollisionError(DomainError):
    """A resolvent pole coincides with an atom of the measure."""


class NonConvergenceError(RuntimeError):
    """Adaptive quadrature exhausted its subdivision budget."""

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error
