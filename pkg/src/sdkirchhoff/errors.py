"""Exception hierarchy.

Every error carries a short machine-readable ``category`` that the CLI
writes into the run summary.
"""

from __future__ import annotations


class KirchhoffError(Exception):
    category = "error"


class DomainError(KirchhoffError, ValueError):
    """Invalid argument domain: bad axis, mismatched lattices, negative range."""

    category = "domain"


class UnsupportedDomainError(DomainError):
    category = "unsupported_domain"


class NumericError(KirchhoffError, ArithmeticError):
    category = "numeric"

    def __init__(self, message: str, achieved: float | None = None):
        super().__init__(message)
        self.achieved = achieved


class BlowUpError(NumericError):
    """Non-finite values appeared during time integration.

    This flags a probable stability violation of the integrator, not a
    finite-time blow-up of the equation itself.
    """

    category = "blow_up"


class IterationError(KirchhoffError):
    category = "iteration"

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class ConsistencyError(KirchhoffError):
    """An a-priori bound that must hold was violated beyond tolerance."""

    category = "consistency"

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class SteppingError(KirchhoffError):
    category = "stepping"

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace


class ConservationError(KirchhoffError):
    category = "conservation"

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace


class ConfigError(KirchhoffError):
    category = "config"
