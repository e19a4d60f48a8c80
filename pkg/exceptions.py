"""Exception hierarchy shared across the toolkit."""
from typing import Optional, Tuple


class SecretSharingError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(SecretSharingError, ValueError):
    """Invalid operator, distribution, access structure, budget or input file."""


class DimensionMismatchError(ValidationError):
    """Factor dimensions or alphabet sizes do not line up."""


class SupportError(ValidationError):
    """supp(rho) is not contained in supp(sigma)."""


class BudgetError(ValidationError):
    """Epsilon budget outside its admissible range or used on the wrong path."""


class AccessStructureError(ValidationError):
    """Access structure is empty, malformed, or not the one an operation requires."""


class SizeLimitError(ValidationError):
    """A size guard was exceeded."""


class ConvergenceError(SecretSharingError, RuntimeError):
    """An iteration cap was reached before the requested tolerance.

    Attributes:
        bracket: (lower, upper) bound on the quantity being computed, when known.
    """

    def __init__(self, message: str, bracket: Optional[Tuple[float, float]] = None):
        super().__init__(message)
        self.bracket = bracket
