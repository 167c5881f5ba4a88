"""Exception hierarchy.

Two families matter to callers: ``AdmissibilityError`` marks a problem that is
mathematically rejected (the CLI maps it to exit code 2), everything else
derived from ``TBVPError`` is an operational failure.
"""

from __future__ import annotations


class TBVPError(Exception):
    """Base class for all package errors."""


class ExprSyntaxError(TBVPError, ValueError):
    """Malformed expression; ``column`` is 1-based."""

    def __init__(self, message: str, column: int, source: str = ""):
        self.column = column
        self.source = source
        super().__init__(f"{message} at column {column}")


class UnknownIdentifier(ExprSyntaxError):
    pass


class DomainError(TBVPError, ValueError):
    """Evaluation or integration outside the domain of a function."""


class PeriodicityError(TBVPError, ValueError):
    pass


class AdmissibilityError(TBVPError):
    """The problem data violate a hypothesis of the construction."""

    reason = "inadmissible"

    def __init__(self, message: str, **details):
        self.details = details
        super().__init__(message)


class IrrationalRatio(AdmissibilityError):
    reason = "irrational-ratio"


class ResonantRatio(AdmissibilityError):
    reason = "resonant-ratio"


class ResonanceObstruction(ResonantRatio):
    """Resonant modes whose terminal data cannot be reached.

    ``details["residual"]`` holds the max-norm obstruction residual.
    """

    reason = "resonance-obstruction"


class TailNotConverged(AdmissibilityError):
    reason = "tail-not-converged"


class CompatibilityError(AdmissibilityError):
    reason = "compatibility"


class HorizonError(AdmissibilityError):
    reason = "horizon"


class OrderingViolated(AdmissibilityError):
    reason = "ordering-violated"


class NonnegConditionFailed(AdmissibilityError):
    reason = "nonneg-condition-failed"


class NoNonnegativeSeed(AdmissibilityError):
    reason = "no-nonnegative-seed"


class PositivityLost(TBVPError):
    pass


class InvalidNullVelocity(TBVPError, ValueError):
    pass


class CFLViolation(TBVPError, ValueError):
    def __init__(self, message: str, lam: float):
        self.lam = lam
        super().__init__(message)


class NegativeData(AdmissibilityError):
    reason = "negative-data"
