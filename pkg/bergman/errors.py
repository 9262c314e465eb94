"""Exception hierarchy shared by every toolkit module."""

from typing import Optional


class BergmanError(Exception):
    """Base class for toolkit failures."""


class ValidationError(BergmanError, ValueError):
    """Input or precondition violation."""

    def __init__(self, message: str, arc_index: Optional[int] = None):
        if arc_index is not None:
            message = f"arc {arc_index}: {message}"
        super().__init__(message)
        self.arc_index = arc_index


class BoundaryProximityError(ValidationError):
    """Point too close to the boundary for a reliable answer."""


class ContainmentError(ValidationError):
    """A domain that must contain another one does not."""


class ReferenceMapMissing(ValidationError):
    """An operation needs an exact conformal map the domain does not have."""


class NumericalError(BergmanError, ArithmeticError):
    """Numerical failure: breakdown, non-convergence, loss of precision."""


class CholeskyBreakdown(NumericalError):
    def __init__(self, pivot: int, precision_bits: int):
        self.pivot = pivot
        self.precision_bits = precision_bits
        self.suggested_bits = next_precision(precision_bits)
        hint = (f"retry with {self.suggested_bits}-bit precision"
                if self.suggested_bits else "no higher precision available")
        super().__init__(
            f"Cholesky pivot {pivot} is not positive at {precision_bits} bits; {hint}"
        )


class RankDeficiencyError(NumericalError):
    """Discrete measure cannot support the requested degree."""


class RootFinderError(NumericalError):
    """Companion-matrix eigenvalue computation failed."""


class NewtonError(NumericalError):
    """Newton inversion of a reference map did not converge."""


class KKTError(NumericalError):
    """Singular equality-constrained system in the extremal solve."""


class PrecisionError(NumericalError):
    """Working precision is insufficient for the requested probe."""


class DegreeBudgetExceeded(NumericalError):
    """A search ran past its polynomial degree budget."""


def next_precision(bits: int) -> Optional[int]:
    for candidate in (106, 212):
        if candidate > bits:
            return candidate
    return None
