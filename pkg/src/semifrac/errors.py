"""Exception and warning types raised across the package."""

from __future__ import annotations

from dataclasses import dataclass


class SemifracError(Exception):
    """Base class for all package errors."""


class PoleError(SemifracError, ValueError):
    pass


class BranchError(SemifracError, ValueError):
    pass


class DomainError(SemifracError, ValueError):
    pass


class RegimeError(SemifracError, ValueError):
    pass


class SmoothnessError(SemifracError, TypeError):
    """A non-Fourier admissible function reached a code path that needs one."""


@dataclass(frozen=True)
class Violation:
    kind: str
    x: float | None
    detail: str

    def as_dict(self) -> dict:
        return {"kind": self.kind, "x": self.x, "detail": self.detail}


class AdmissibilityError(SemifracError, ValueError):
    """Rejected admissible function; ``violations`` lists every failed check."""

    def __init__(self, message: str, violations: list[Violation] | None = None):
        super().__init__(message)
        self.violations = list(violations or [])

    def report(self) -> dict:
        return {
            "error": type(self).__name__,
            "message": str(self),
            "violations": [v.as_dict() for v in self.violations],
        }


class SymmetryError(AdmissibilityError):
    pass


class PositivityError(AdmissibilityError):
    pass


class GrowthError(AdmissibilityError):
    pass


class QuadratureError(SemifracError, ArithmeticError):
    def __init__(self, message: str, estimate: float | None = None):
        super().__init__(message)
        self.estimate = estimate


class DecayError(SemifracError, ValueError):
    pass


class DivergenceError(SemifracError, ArithmeticError):
    def __init__(self, message: str, history: list[float] | None = None):
        super().__init__(message)
        self.history = list(history or [])


class SignError(SemifracError, ValueError):
    pass


class InstabilityError(SemifracError, ArithmeticError):
    def __init__(self, message: str, step: int):
        super().__init__(message)
        self.step = step


class WindowError(SemifracError, ValueError):
    pass


class ParseError(SemifracError, ValueError):
    pass


class RangeError(SemifracError, ValueError):
    pass


class DecayWarning(UserWarning):
    pass


class TruncationWarning(UserWarning):
    pass


class StabilityWarning(UserWarning):
    pass
