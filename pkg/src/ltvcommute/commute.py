# #############################################################################
# WARNING: If you modify features, API, or usage, you MUST update the
# documentation immediately.
# #############################################################################
"""
Algebraic commutativity conditions, partner synthesis and pair assessment.

First-order pairs commute (relaxed) if and only if ``b_1 = k1 a_1`` and
``b_0 = k1 a_0 + k0`` for constants ``k1 != 0, k0``. Second-order systems relate
to their partners through the base form

    F(A) = (a_2^0.5, a_2^-0.5 (2 a_1 - a_2') / 4)

which is usable whenever the bracket of ``A`` is constant. Constancy is always
judged on a grid: the deviation from the grid mean, relative to ``max(1, |mean|)``.

.. note::
    If you modify features, API, or usage, you MUST update the documentation immediately.
"""

from __future__ import annotations

import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from ltvcommute.cascade import cascade_pair
from ltvcommute.constants import DEFAULT_CONSTANCY_TOL, DEFAULT_DEFECT_TOL, DEFAULT_SOLVER_TOL, LEADING_COEFF_GUARD
from ltvcommute.errors import OrderError, SingularCoefficientError, SystemValidationError
from ltvcommute.expr import Expr, coerce
from ltvcommute.system import (
    FirstOrderConstants,
    LTVSystem,
    MixedFreeConstants,
    PairConstants,
    SecondOrderConstants,
    validate_system,
)

logger = logging.getLogger(__name__)

Grid = Sequence[float] | np.ndarray


class Verdict(str, Enum):
    COMMUTATIVE = "commutative"
    NOT_COMMUTATIVE = "not-commutative"
    INCONCLUSIVE = "inconclusive"


class Relation(str, Enum):
    """Which algebraic condition relates the pair."""

    FIRST_FIRST = "first-first"
    SECOND_FIRST = "second-first"
    FIRST_SECOND = "first-second"
    SECOND_SECOND = "second-second"
    SCALAR = "scalar"
    NUMERICAL = "numerical-only"


@dataclass(frozen=True, eq=False)
class CommutativityReport:
    """
    Verdict on a pair ``(A, B)`` with the evidence behind it.

    Attributes
    ----------
    verdict : Verdict
        Overall verdict.
    relation : Relation
        Algebraic condition that was tested.
    constants : PairConstants | None
        Extracted constants; ``None`` when no constant relation applies.
    constancy_residuals : Mapping[str, float]
        Relative deviation from constancy of every would-be constant.
    bracket_residuals : Mapping[str, float]
        Bracket constancy residuals of second-order members.
    unrelaxed : bool | None
        Unrelaxed (nonzero initial condition) verdict; ``None`` when vacuous or not checked.
    unrelaxed_residual : float | None
        Residual of ``(1 - a_0)/a_1 = (1 - b_0)/b_1`` at ``t0``.
    defect : float | None
        ``max |h_AB - h_BA|`` when a numerical check ran.
    defect_peak : float | None
        ``max(|h_AB|, |h_BA|)``; the defect is judged against ``defect_tolerance * max(1, peak)``.
    grid : np.ndarray
        Grid used for constancy and defects.
    tolerance : float
        Constancy tolerance.
    defect_tolerance : float
        Defect tolerance.
    notes : tuple[str, ...]
        Free-form remarks.
    """

    verdict: Verdict
    relation: Relation
    constants: PairConstants | None
    constancy_residuals: Mapping[str, float] = field(default_factory=dict)
    bracket_residuals: Mapping[str, float] = field(default_factory=dict)
    unrelaxed: bool | None = None
    unrelaxed_residual: float | None = None
    defect: float | None = None
    defect_peak: float | None = None
    grid: np.ndarray = field(default_factory=lambda: np.zeros(0))
    tolerance: float = DEFAULT_CONSTANCY_TOL
    defect_tolerance: float = DEFAULT_DEFECT_TOL
    notes: tuple[str, ...] = ()

    @property
    def commutative(self) -> bool:
        return self.verdict is Verdict.COMMUTATIVE

    @property
    def defect_pass(self) -> bool | None:
        if self.defect is None:
            return None
        return self.defect <= self.defect_tolerance * max(1.0, self.defect_peak or 0.0)


def constancy(values: np.ndarray) -> tuple[float, float]:
    """Grid mean of ``values`` and the relative deviation ``max|v - mean| / max(1, |mean|)``."""
    values = np.asarray(values, dtype=float)
    mean = float(np.mean(values))
    return mean, float(np.max(np.abs(values - mean))) / max(1.0, abs(mean))


def _grid(grid: Grid) -> np.ndarray:
    points = np.asarray(grid, dtype=float)
    if points.ndim != 1 or len(points) == 0:
        raise ValueError("Grid must be a non-empty 1-D sequence")
    return points


def _sample(e: Expr, points: np.ndarray) -> np.ndarray:
    return e.evaluate_many(points)


def _nonvanishing(e: Expr, points: np.ndarray) -> np.ndarray:
    values = _sample(e, points)
    bad = np.abs(values) <= LEADING_COEFF_GUARD * np.maximum(1.0, np.abs(values))
    if bad.any():
        t = float(points[int(np.argmax(bad))])
        raise SingularCoefficientError(t, float(values[int(np.argmax(bad))]))
    return values


def _require_order(s: LTVSystem, order: int, what: str) -> None:
    if s.order != order:
        raise OrderError(f"{what} needs an order-{order} system, {s.label} has order {s.order}")


def _verdict(passed: bool) -> Verdict:
    return Verdict.COMMUTATIVE if passed else Verdict.NOT_COMMUTATIVE


# --- First-order pairs ---


def extract_first_order_constants(
    a: LTVSystem,
    b: LTVSystem,
    grid: Grid,
    tol: float = DEFAULT_CONSTANCY_TOL,
) -> CommutativityReport:
    """
    Estimate ``k1 = b_1/a_1`` and ``k0 = b_0 - k1 a_0`` on a grid and test their constancy.

    Parameters
    ----------
    a, b : LTVSystem
        First-order systems.
    grid : Sequence[float]
        Sample times inside both domains.
    tol : float, optional
        Constancy tolerance, by default ``DEFAULT_CONSTANCY_TOL``.

    Returns
    -------
    CommutativityReport
        Commutative iff both residuals are below ``tol`` and ``k1 != 0``.

    Raises
    ------
    SingularCoefficientError
        If ``a_1`` vanishes on the grid.
    """
    _require_order(a, 1, "extract_first_order_constants")
    _require_order(b, 1, "extract_first_order_constants")
    points = _grid(grid)
    a1 = _nonvanishing(a.coefficient(1), points)
    k1, r1 = constancy(_sample(b.coefficient(1), points) / a1)
    k0, r0 = constancy(_sample(b.coefficient(0), points) - k1 * _sample(a.coefficient(0), points))
    passed = r1 < tol and r0 < tol and k1 != 0.0
    return CommutativityReport(
        verdict=_verdict(passed),
        relation=Relation.FIRST_FIRST,
        constants=FirstOrderConstants(k1, k0),
        constancy_residuals={"k1": r1, "k0": r0},
        grid=points,
        tolerance=tol,
    )


def synthesize_first_order_pair(a: LTVSystem, k1: float, k0: float, name: str = "") -> LTVSystem:
    """
    Build the partner ``B = (k1 a_1, k1 a_0 + k0)`` of a first-order system.

    The partner shares ``t0`` and the domain of ``a`` and starts relaxed.

    Raises
    ------
    ValueError
        If ``k1`` is zero (the partner would be scalar).
    """
    _require_order(a, 1, "synthesize_first_order_pair")
    if k1 == 0.0:
        raise ValueError("k1 must be nonzero; a constant-gain partner is a scalar system")
    b1 = k1 * a.coefficient(1)
    b0 = k1 * a.coefficient(0) + k0
    return LTVSystem((b0, b1), t0=a.t0, domain=a.domain, name=name)


def check_unrelaxed(
    a: LTVSystem,
    b: LTVSystem,
    report: CommutativityReport,
    tol: float = DEFAULT_CONSTANCY_TOL,
) -> CommutativityReport:
    """
    Augment a first-order report with the unrelaxed (nonzero initial condition) verdict.

    The pair commutes unrelaxed iff ``y_A(t0) = y_B(t0) != 0``, ``k0 = 1 - k1`` and
    ``(1 - a_0(t0))/a_1(t0) = (1 - b_0(t0))/b_1(t0)``. The condition ``k0 = 1 - k1``
    does not involve ``t0``. With both initial conditions zero the check is vacuous.

    Raises
    ------
    SystemValidationError
        If the initial conditions are nonzero and the two systems start at different times.
    """
    if not isinstance(report.constants, FirstOrderConstants):
        return replace(report, notes=(*report.notes, "unrelaxed conditions are only defined for first-order pairs"))
    ya, yb = a.initial_conditions[0], b.initial_conditions[0]
    t0 = a.t0
    residual = abs(
        (1.0 - a.coefficient(0)(t0)) / a.coefficient(1)(t0) - (1.0 - b.coefficient(0)(t0)) / b.coefficient(1)(t0)
    )
    if ya == 0.0 and yb == 0.0:
        notes = (*report.notes, "zero initial conditions: unrelaxed check is vacuous")
        return replace(report, unrelaxed=None, unrelaxed_residual=residual, notes=notes)
    if a.t0 != b.t0:
        raise SystemValidationError(
            f"{a.label} and {b.label} hold initial conditions at different times: t0={a.t0!r} and t0={b.t0!r}"
        )
    k1, k0 = report.constants.k1, report.constants.k0
    equal_ics = abs(ya - yb) <= tol * max(1.0, abs(ya))
    closure = abs(k0 - (1.0 - k1)) <= tol * max(1.0, abs(k1))
    unrelaxed = equal_ics and ya != 0.0 and closure and residual < tol
    notes = list(report.notes)
    if not equal_ics:
        notes.append(f"initial conditions differ: y_A(t0)={ya!r}, y_B(t0)={yb!r}")
    if not closure:
        notes.append(f"k0={k0:.9g} violates k0 = 1 - k1 = {1.0 - k1:.9g} (independent of t0)")
    return replace(report, unrelaxed=unrelaxed, unrelaxed_residual=residual, notes=tuple(notes))


# --- Second-order pairs ---


def second_order_bracket(a: LTVSystem) -> Expr:
    """
    ``a_0 - (4 a_1^2 + 3 a_2'^2 - 8 a_1 a_2' + 8 a_1' a_2 - 4 a_2 a_2'') / (16 a_2)``.

    A second-order system admits non-scalar partners of order <= 2 through its
    base form when this expression is constant.
    """
    _require_order(a, 2, "second_order_bracket")
    a0, a1, a2 = a.coefficients
    d1, d2 = a1.derivative(), a2.derivative()
    dd2 = d2.derivative()
    numerator = 4 * a1**2 + 3 * d2**2 - 8 * a1 * d2 + 8 * d1 * a2 - 4 * a2 * dd2
    return a0 - numerator / (16 * a2)


def bracket_constant(a: LTVSystem, grid: Grid) -> tuple[float, float]:
    """Grid mean of the bracket (the free constant A0) and its constancy residual."""
    return constancy(_sample(second_order_bracket(a), _grid(grid)))


def root_coefficients(a: LTVSystem) -> tuple[Expr, Expr]:
    """The base form ``(a_2^0.5, a_2^-0.5 (2 a_1 - a_2') / 4)`` of a second-order system."""
    _require_order(a, 2, "root_coefficients")
    _, a1, a2 = a.coefficients
    return a2**0.5, a2**-0.5 * (2 * a1 - a2.derivative()) / 4


def _default_grid(s: LTVSystem, grid: Grid | None) -> np.ndarray:
    if grid is not None:
        return _grid(grid)
    lo, hi = s.domain
    return np.linspace(lo, hi, 101) if hi > lo else np.array([lo])


def _require_positive_leading(s: LTVSystem) -> None:
    report = validate_system(s)
    if not report.passed or not report.positive_leading:
        raise SystemValidationError(f"{s.label}: the leading coefficient must be positive on the domain", report)


def _require_constant_bracket(s: LTVSystem, points: np.ndarray, tol: float) -> float:
    value, residual = bracket_constant(s, points)
    if residual >= tol:
        raise ValueError(f"{s.label}: bracket is not constant (residual {residual:.3e})")
    return value


def synthesize_first_from_second(
    a: LTVSystem,
    k1: float,
    k0: float,
    name: str = "",
    grid: Grid | None = None,
    tol: float = DEFAULT_CONSTANCY_TOL,
) -> LTVSystem:
    """
    First-order partner ``B = (k1 a_2^0.5, k1 q_A + k0)`` of a second-order system.

    Raises
    ------
    ValueError
        If ``k1`` is zero or the bracket of ``a`` is not constant.
    SystemValidationError
        If ``a_2`` is not positive on the domain.
    """
    _require_order(a, 2, "synthesize_first_from_second")
    if k1 == 0.0:
        raise ValueError("k1 must be nonzero; a constant-gain partner is a scalar system")
    _require_positive_leading(a)
    _require_constant_bracket(a, _default_grid(a, grid), tol)
    root, q = root_coefficients(a)
    return LTVSystem((k1 * q + k0, k1 * root), t0=a.t0, domain=a.domain, name=name)


def synthesize_second_order_pair(
    a: LTVSystem,
    k2: float,
    k1: float,
    k0: float,
    name: str = "",
    grid: Grid | None = None,
    tol: float = DEFAULT_CONSTANCY_TOL,
) -> LTVSystem:
    """
    Second-order partner ``B = k2 A + k1 (0, a_2^0.5, q_A) + k0 (0, 0, 1)``.

    Bracket constancy is only required when ``k1 != 0``.
    """
    _require_order(a, 2, "synthesize_second_order_pair")
    if k2 == 0.0:
        raise ValueError("k2 must be nonzero for a second-order partner")
    _require_positive_leading(a)
    if k1 != 0.0:
        _require_constant_bracket(a, _default_grid(a, grid), tol)
    a0, a1, a2 = a.coefficients
    root, q = root_coefficients(a)
    b2 = k2 * a2
    b1 = k2 * a1 + k1 * root
    b0 = k2 * a0 + k1 * q + k0
    return LTVSystem((b0, b1, b2), t0=a.t0, domain=a.domain, name=name)


def synthesize_second_from_first(b: LTVSystem, l1: float, l0: float, c0: float, name: str = "") -> LTVSystem:
    """
    Second-order partner ``C`` of a first-order ``B`` with bracket constant ``c0``.

    ``c_2 = b_1^2/l1^2``, ``c_1 = b_1 (2 b_0 - 2 l0 + b_1') / l1^2`` and
    ``c_0 = c0 + ((b_0 - l0)/l1)^2 + b_1 b_0' / l1^2``. When ``b_1/l1 > 0`` the
    base form of ``C`` is ``(b_1/l1, (b_0 - l0)/l1)``, so ``B = (l1, l0)`` applied to ``F(C)``.
    """
    _require_order(b, 1, "synthesize_second_from_first")
    if l1 == 0.0:
        raise ValueError("l1 must be nonzero")
    b0, b1 = b.coefficients
    scale = l1 * l1
    c2 = b1**2 / scale
    c1 = b1 * (2 * b0 - 2 * l0 + b1.derivative()) / scale
    cc0 = coerce(c0) + ((b0 - l0) / l1) ** 2 + b1 * b0.derivative() / scale
    return LTVSystem((cc0, c1, c2), t0=b.t0, domain=b.domain, name=name)


def _positive_on(e: Expr, points: np.ndarray, label: str) -> np.ndarray:
    values = _sample(e, points)
    if np.any(values <= 0.0):
        t = float(points[int(np.argmax(values <= 0.0))])
        raise SystemValidationError(f"{label}: the leading coefficient must be positive (fails at t={t!r})")
    return values


def extract_second_first_constants(
    x: LTVSystem,
    y: LTVSystem,
    grid: Grid,
    tol: float = DEFAULT_CONSTANCY_TOL,
) -> CommutativityReport:
    """
    Relate a first-order ``y`` to the base form of a second-order ``x``.

    Estimates ``k1 = y_1 / x_2^0.5`` and ``k0 = y_0 - k1 q_X`` and the bracket
    constant of ``x``; the constants are returned as :class:`MixedFreeConstants`.
    This condition is sufficient for commutativity; a failure is not proof of
    non-commutativity.
    """
    _require_order(x, 2, "extract_second_first_constants")
    _require_order(y, 1, "extract_second_first_constants")
    points = _grid(grid)
    _positive_on(x.leading, points, x.label)
    root, q = root_coefficients(x)
    k1, r1 = constancy(_sample(y.coefficient(1), points) / _sample(root, points))
    k0, r0 = constancy(_sample(y.coefficient(0), points) - k1 * _sample(q, points))
    free, rb = bracket_constant(x, points)
    passed = r1 < tol and r0 < tol and rb < tol and k1 != 0.0
    return CommutativityReport(
        verdict=_verdict(passed),
        relation=Relation.SECOND_FIRST,
        constants=MixedFreeConstants(k1, k0, free),
        constancy_residuals={"k1": r1, "k0": r0},
        bracket_residuals={x.label: rb},
        grid=points,
        tolerance=tol,
        notes=("second-first condition is sufficient, not necessary",),
    )


def extract_second_order_constants(
    a: LTVSystem,
    b: LTVSystem,
    grid: Grid,
    tol: float = DEFAULT_CONSTANCY_TOL,
) -> CommutativityReport:
    """
    Fit ``B = k2 A + k1 (0, a_2^0.5, q_A) + k0 (0, 0, 1)`` on a grid.

    ``k2 = b_2/a_2``, ``k1 = (b_1 - k2 a_1)/a_2^0.5`` and ``k0 = b_0 - k2 a_0 - k1 q_A``.
    The bracket of ``A`` must be constant whenever ``k1`` is nonzero.
    """
    _require_order(a, 2, "extract_second_order_constants")
    _require_order(b, 2, "extract_second_order_constants")
    points = _grid(grid)
    a2 = _positive_on(a.leading, points, a.label)
    a0, a1 = _sample(a.coefficient(0), points), _sample(a.coefficient(1), points)
    root, q = root_coefficients(a)
    k2, r2 = constancy(_sample(b.coefficient(2), points) / a2)
    k1, r1 = constancy((_sample(b.coefficient(1), points) - k2 * a1) / _sample(root, points))
    k0, r0 = constancy(_sample(b.coefficient(0), points) - k2 * a0 - k1 * _sample(q, points))
    brackets: dict[str, float] = {}
    uses_root = abs(k1) > tol * max(1.0, abs(k2))
    if uses_root:
        brackets[a.label] = bracket_constant(a, points)[1]
    else:
        k1 = 0.0
    passed = r2 < tol and r1 < tol and r0 < tol and k2 != 0.0 and all(r < tol for r in brackets.values())
    return CommutativityReport(
        verdict=_verdict(passed),
        relation=Relation.SECOND_SECOND,
        constants=SecondOrderConstants(k2, k1, k0),
        constancy_residuals={"k2": r2, "k1": r1, "k0": r0},
        bracket_residuals=brackets,
        grid=points,
        tolerance=tol,
    )


def second_order_relation_residual(a: LTVSystem, c: LTVSystem, m: SecondOrderConstants, grid: Grid) -> float:
    """
    Grid residual of ``C = m2 A + m1 (0, a_2^0.5, q_A) + m0 (0, 0, 1)``.

    Returns ``max |c_i - predicted_i|`` over coefficients and grid, relative to
    ``max(1, max |c_i|)``.
    """
    _require_order(a, 2, "second_order_relation_residual")
    _require_order(c, 2, "second_order_relation_residual")
    points = _grid(grid)
    root, q = root_coefficients(a)
    a0, a1, a2 = (_sample(e, points) for e in a.coefficients)
    predicted = (
        m.k2 * a0 + m.k1 * _sample(q, points) + m.k0,
        m.k2 * a1 + m.k1 * _sample(root, points),
        m.k2 * a2,
    )
    actual = [_sample(e, points) for e in c.coefficients]
    worst = max(float(np.max(np.abs(x - p))) for x, p in zip(actual, predicted, strict=True))
    scale = max(1.0, max(float(np.max(np.abs(x))) for x in actual))
    return worst / scale


# --- Dispatch and assessment ---


def _scalar_report(a: LTVSystem, b: LTVSystem, points: np.ndarray, tol: float) -> CommutativityReport:
    if a.is_scalar and b.is_scalar:
        return CommutativityReport(
            Verdict.COMMUTATIVE, Relation.SCALAR, None, grid=points, tolerance=tol, notes=("scalar systems always commute",)
        )
    gain = a if a.is_scalar else b
    _, residual = constancy(_sample(gain.coefficient(0), points))
    return CommutativityReport(
        verdict=_verdict(residual < tol),
        relation=Relation.SCALAR,
        constants=None,
        constancy_residuals={"a0": residual},
        grid=points,
        tolerance=tol,
        notes=("a scalar system commutes with a dynamic one only as a constant gain",),
    )


def extract_pair_constants(
    a: LTVSystem,
    b: LTVSystem,
    grid: Grid,
    tol: float = DEFAULT_CONSTANCY_TOL,
) -> CommutativityReport:
    """
    Run the algebraic check that matches the orders of ``(a, b)``.

    Orders (1,1), (2,1), (1,2) and (2,2) get constant extraction; a scalar member
    gets the constant-gain test; orders >= 3 get an inconclusive report flagged
    numerical-only.
    """
    points = _grid(grid)
    orders = (a.order, b.order)
    if 0 in orders:
        return _scalar_report(a, b, points, tol)
    if orders == (1, 1):
        return extract_first_order_constants(a, b, points, tol)
    if orders == (2, 1):
        return extract_second_first_constants(a, b, points, tol)
    if orders == (1, 2):
        return replace(extract_second_first_constants(b, a, points, tol), relation=Relation.FIRST_SECOND)
    if orders == (2, 2):
        return extract_second_order_constants(a, b, points, tol)
    return CommutativityReport(
        Verdict.INCONCLUSIVE,
        Relation.NUMERICAL,
        None,
        grid=points,
        tolerance=tol,
        notes=(f"no algebraic conditions for orders {orders}",),
    )


def assess_pair(
    a: LTVSystem,
    b: LTVSystem,
    grid: Grid,
    tol: float = DEFAULT_CONSTANCY_TOL,
    defect_tol: float = DEFAULT_DEFECT_TOL,
    solver_tol: float = DEFAULT_SOLVER_TOL,
    t0: float | None = None,
) -> CommutativityReport:
    """
    Algebraic check, numerical defect and (for first-order pairs) the unrelaxed check.

    Parameters
    ----------
    a, b : LTVSystem
        The pair.
    grid : Sequence[float]
        Evaluation grid, starting at or after ``t0``.
    tol : float, optional
        Constancy tolerance.
    defect_tol : float, optional
        The defect passes when ``defect <= defect_tol * max(1, peak |h|)``.
    solver_tol : float, optional
        ODE and quadrature tolerance.
    t0 : float, optional
        Impulse time, by default the first grid point.

    Returns
    -------
    CommutativityReport
        Commutative when both the algebra and the defect agree; inconclusive when
        they disagree.
    """
    points = _grid(grid)
    t0 = float(points[0]) if t0 is None else t0
    report = extract_pair_constants(a, b, points, tol)
    algebraic = report.verdict is Verdict.COMMUTATIVE
    if report.relation is Relation.FIRST_FIRST:
        report = check_unrelaxed(a, b, report, tol)

    if a.is_scalar and b.is_scalar:
        defect, peak = 0.0, 0.0
    else:
        ab, ba = cascade_pair(a, b, t0, points, solver_tol)
        defect = float(np.max(np.abs(ab.values - ba.values)))
        peak = float(max(np.max(np.abs(ab.values)), np.max(np.abs(ba.values))))
    report = replace(report, defect=defect, defect_peak=peak, defect_tolerance=defect_tol)

    numerical = bool(report.defect_pass)
    notes = list(report.notes)
    if report.relation is Relation.NUMERICAL:
        verdict = _verdict(numerical)
    elif algebraic and numerical:
        verdict = Verdict.COMMUTATIVE
    elif not algebraic and not numerical:
        verdict = Verdict.NOT_COMMUTATIVE
    else:
        verdict = Verdict.INCONCLUSIVE
        notes.append("algebraic and numerical checks disagree")
        logger.warning("%s / %s: algebraic and numerical checks disagree (defect %.3e)", a.label, b.label, defect)
    return replace(report, verdict=verdict, notes=tuple(notes))
