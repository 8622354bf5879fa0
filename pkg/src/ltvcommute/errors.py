# #############################################################################
# WARNING: If you modify features, API, or usage, you MUST update the
# documentation immediately.
# #############################################################################
"""
Exception hierarchy for ltvcommute.

Every library failure derives from :class:`LTVError`, itself a ``RuntimeError``,
so callers that only care about "the computation failed" can catch one type.

.. note::
    If you modify features, API, or usage, you MUST update the documentation immediately.
"""

from __future__ import annotations

from typing import Any


class LTVError(RuntimeError):
    """Base class for all ltvcommute errors."""


class ExprError(LTVError):
    """Base class for expression parsing and evaluation errors."""


class ExprSyntaxError(ExprError):
    """
    Malformed expression text.

    Attributes
    ----------
    offset : int
        Byte offset into the UTF-8 encoded text where parsing failed.
    """

    def __init__(self, message: str, offset: int) -> None:
        super().__init__(f"{message} (at byte {offset})")
        self.offset: int = offset


class UnknownIdentifierError(ExprSyntaxError):
    """An identifier other than ``t`` or a supported function name."""

    def __init__(self, name: str, offset: int) -> None:
        super().__init__(f"Unknown identifier '{name}'", offset)
        self.name: str = name


class NonConstantExponentError(ExprSyntaxError):
    """An exponent that is not a numeric literal."""

    def __init__(self, offset: int) -> None:
        super().__init__("Exponent must be a constant number", offset)


class ExprDomainError(ExprError):
    """
    Evaluation outside the mathematical domain of a subexpression.

    Attributes
    ----------
    subexpression : str
        The offending subexpression, pretty-printed.
    t : float
        The time at which evaluation failed.
    """

    def __init__(self, reason: str, subexpression: str, t: float) -> None:
        super().__init__(f"{reason} in '{subexpression}' at t={t!r}")
        self.subexpression: str = subexpression
        self.t: float = t


class NumericsError(LTVError):
    """Base class for quadrature and ODE solver failures."""


class QuadratureError(NumericsError):
    """
    Adaptive quadrature did not converge.

    Attributes
    ----------
    interval : tuple[float, float]
        The panel with the largest unresolved error estimate.
    estimate : float
        The error estimate on that panel.
    """

    def __init__(self, interval: tuple[float, float], estimate: float) -> None:
        lo, hi = interval
        super().__init__(f"Failed to converge: worst panel [{lo!r}, {hi!r}] has error estimate {estimate:.3e}")
        self.interval: tuple[float, float] = interval
        self.estimate: float = estimate


class StepSizeError(NumericsError):
    """The Runge-Kutta step size underflowed."""

    def __init__(self, t: float, h: float) -> None:
        super().__init__(f"Step size underflow at t={t!r} (h={h:.3e})")
        self.t: float = t


class SingularCoefficientError(NumericsError):
    """The leading coefficient vanished inside the integration span."""

    def __init__(self, t: float, value: float) -> None:
        super().__init__(f"Leading coefficient vanishes at t={t!r} (a_n={value:.3e})")
        self.t: float = t


class SystemFileError(LTVError):
    """
    A system file could not be parsed.

    Attributes
    ----------
    line : int | None
        1-based line number of the offending line, if known.
    """

    def __init__(self, message: str, line: int | None = None) -> None:
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")
        self.line: int | None = line


class SystemValidationError(LTVError):
    """A system violates its invariants (e.g. a vanishing leading coefficient)."""

    def __init__(self, message: str, report: Any = None) -> None:
        super().__init__(message)
        self.report = report


class OrderError(LTVError):
    """An operation was called on a system of an unsupported order."""
