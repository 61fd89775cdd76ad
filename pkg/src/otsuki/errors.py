"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input outside the documented domain of an operation."""


class DomainError(ValidationError):
    """Numeric argument outside the open set where a formula is defined."""


class NumericalError(RuntimeError):
    """A numeric routine failed to reach its target accuracy."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class AmbiguousClassificationError(NumericalError):
    """An eigenvalue sits too close to a count boundary to classify reliably."""


class EdwardsInapplicableError(NumericalError):
    """The boundary-form route requires a nondegenerate Dirichlet problem."""


class RouteDisagreementError(NumericalError):
    """Independent computation routes produced different counts."""

    def __init__(self, message, diffs=None):
        super().__init__(message)
        self.diffs = diffs or []
