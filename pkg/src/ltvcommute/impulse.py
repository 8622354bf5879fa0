# #############################################################################
# WARNING: If you modify features, API, or usage, you MUST update the
# documentation immediately.
# #############################################################################
"""
Impulse responses h(t, tau).

General-order systems are handled by solving the homogeneous equation from the
jump state ``y^(n-1)(tau+) = 1/a_n(tau)``; first-order systems additionally have
the closed form ``(1/a_1(tau)) exp(-int_tau^t a_0/a_1)``. Scalar (order-0)
systems respond with a weighted delta and never produce a trajectory.

.. note::
    If you modify features, API, or usage, you MUST update the documentation immediately.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from ltvcommute.constants import DEFAULT_SOLVER_TOL, LEADING_SCAN_POINTS, METHOD_CLOSED_FORM, METHOD_ODE
from ltvcommute.errors import OrderError, SingularCoefficientError
from ltvcommute.expr import Expr, coerce
from ltvcommute.numerics import Trajectory, integrate_adaptive, solve_linear_ode
from ltvcommute.system import LTVSystem, ensure_valid

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ImpulseResponse:
    """
    ``h(., tau)`` of a system of order >= 1.

    Attributes
    ----------
    system : LTVSystem
        The source system.
    tau : float
        Impulse time.
    trajectory : Trajectory
        Dense solution starting at ``tau``.
    method : str
        ``"ode"`` or ``"closed-form"``.
    """

    system: LTVSystem
    tau: float
    trajectory: Trajectory
    method: str = METHOD_ODE

    @property
    def t_end(self) -> float:
        return self.trajectory.end

    def __call__(self, t: float | Sequence[float] | np.ndarray) -> float | np.ndarray:
        """Evaluate ``h(t, tau)``; zero for ``t < tau``."""
        ts = np.asarray(t, dtype=float)
        if ts.ndim == 0:
            return 0.0 if ts < self.tau else self.trajectory.output(float(ts))
        values = np.zeros(ts.shape)
        causal = ts >= self.tau
        if causal.any():
            values[causal] = self.trajectory.output(ts[causal])
        return values


@dataclass(frozen=True)
class ScalarImpulse:
    """Response ``weight * delta(t - tau)`` of an order-0 system (or a product of them)."""

    weight: float
    tau: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.weight) or self.weight == 0.0:
            raise ValueError(f"Scalar impulse weight must be finite and nonzero, got {self.weight!r}")


def _check_span(s: LTVSystem, lo: float, hi: float) -> None:
    if hi < lo:
        raise ValueError(f"Need tau <= t, got [{lo!r}, {hi!r}]")
    if not s.contains(lo, hi):
        dlo, dhi = s.domain
        raise ValueError(f"[{lo!r}, {hi!r}] lies outside the domain [{dlo!r}, {dhi!r}] of {s.label}")


def impulse_response(
    s: LTVSystem,
    tau: float,
    t_end: float | None = None,
    tol: float = DEFAULT_SOLVER_TOL,
) -> ImpulseResponse:
    """
    Compute ``h(t, tau)`` for ``t`` in ``[tau, t_end]`` by solving the homogeneous equation.

    Parameters
    ----------
    s : LTVSystem
        A system of order >= 1.
    tau : float
        Impulse time.
    t_end : float, optional
        End of the span, by default the upper end of the domain.
    tol : float, optional
        Solver tolerance.

    Returns
    -------
    ImpulseResponse
        With method ``"ode"``.

    Raises
    ------
    OrderError
        If ``s`` is scalar; use :func:`scalar_impulse`.
    ValueError
        If ``[tau, t_end]`` is not inside the domain.
    SystemValidationError
        If the leading coefficient vanishes or changes sign on ``[tau, t_end]``.
    """
    if s.is_scalar:
        raise OrderError(f"{s.label} is scalar; use scalar_impulse")
    t_end = s.domain[1] if t_end is None else float(t_end)
    _check_span(s, tau, t_end)
    ensure_valid(s.restricted(tau, t_end), LEADING_SCAN_POINTS)
    an = s.leading(tau)
    if an == 0.0:
        raise SingularCoefficientError(tau, an)
    y0 = np.zeros(s.order)
    y0[-1] = 1.0 / an
    trajectory = solve_linear_ode(s.coefficients, None, tau, y0, t_end, tol)
    return ImpulseResponse(s, float(tau), trajectory, METHOD_ODE)


def scalar_impulse(s: LTVSystem, tau: float) -> ScalarImpulse:
    """The weighted delta ``delta(t - tau) / a_0(tau)`` of a scalar system."""
    if not s.is_scalar:
        raise OrderError(f"{s.label} has order {s.order}; scalar_impulse needs order 0")
    a0 = s.coefficient(0)(tau)
    if a0 == 0.0:
        raise SingularCoefficientError(tau, a0)
    return ScalarImpulse(1.0 / a0, float(tau))


def _decay_rate(s: LTVSystem) -> Callable[[float], float]:
    a0, a1 = s.coefficient(0).compiled, s.coefficient(1).compiled
    return lambda g: -a0(g) / a1(g)


def first_order_closed_form(s: LTVSystem, tau: float, t: float, tol: float = DEFAULT_SOLVER_TOL) -> float:
    """
    Closed-form first-order kernel ``(1/a_1(tau)) exp(int_tau^t -a_0/a_1)``.

    The exponent is a single definite integral, never a difference of antiderivatives.

    Raises
    ------
    OrderError
        If ``s`` is not first order.
    ValueError
        If ``t < tau`` or the span leaves the domain.
    """
    if s.order != 1:
        raise OrderError(f"{s.label} has order {s.order}; the closed form needs order 1")
    _check_span(s, tau, t)
    exponent = integrate_adaptive(_decay_rate(s), tau, t, tol)
    return math.exp(exponent) / s.coefficient(1)(tau)


def closed_form_response(
    s: LTVSystem,
    tau: float,
    grid: Sequence[float] | np.ndarray,
    tol: float = DEFAULT_SOLVER_TOL,
) -> ImpulseResponse:
    """
    First-order impulse response sampled from the closed form on ``grid``.

    The exponent is accumulated panel by panel between consecutive grid points;
    derivatives ``-(a_0/a_1) h`` feed the Hermite interpolant.
    """
    if s.order != 1:
        raise OrderError(f"{s.label} has order {s.order}; the closed form needs order 1")
    points = np.asarray(grid, dtype=float)
    points = np.unique(np.concatenate(([float(tau)], points[points >= tau])))
    _check_span(s, points[0], points[-1])
    rate = _decay_rate(s)
    exponents = np.zeros(len(points))
    for i in range(1, len(points)):
        exponents[i] = exponents[i - 1] + integrate_adaptive(rate, points[i - 1], points[i], tol)
    values = np.exp(exponents) / s.coefficient(1)(tau)
    slopes = np.array([rate(p) for p in points]) * values
    trajectory = Trajectory(points, values[:, None], slopes[:, None], tol)
    return ImpulseResponse(s, float(tau), trajectory, METHOD_CLOSED_FORM)


def kernel(s: LTVSystem, tau: float, t: float, tol: float = DEFAULT_SOLVER_TOL) -> float:
    """Pointwise ``h(t, tau)`` of any order >= 1; zero for ``t < tau``."""
    if t < tau:
        return 0.0
    if s.order == 1:
        return first_order_closed_form(s, tau, t, tol)
    return float(impulse_response(s, tau, t, tol).trajectory.output(t))


def gauge_function(
    a1: Expr | float,
    k1: float,
    k0: float,
    t0: float,
    t: float,
    tol: float = DEFAULT_SOLVER_TOL,
) -> float:
    """
    Gauge difference ``g(t) - g(t0) = (k0/k1) int_t0^t dt / a_1``.

    For a commutative first-order pair ``B = (k1 a_1, k1 a_0 + k0)`` the impulse
    responses are related by ``h_B(t, t0) = exp(g(t0) - g(t)) h_A(t, t0) / k1``.

    Raises
    ------
    ValueError
        If ``k1`` is zero.
    """
    if k1 == 0.0:
        raise ValueError("k1 must be nonzero")
    if k0 == 0.0:
        return 0.0
    f = coerce(a1).compiled
    return (k0 / k1) * integrate_adaptive(lambda g: 1.0 / f(g), t0, t, tol)


def semigroup_residual(s: LTVSystem, t0: float, tau: float, t: float, tol: float = DEFAULT_SOLVER_TOL) -> float:
    """
    Residual of ``h(t, tau) h(tau, t0) = h(t, t0) / a_1(tau)`` for a first-order system.

    Returns the relative residual ``|lhs - rhs| / max(|lhs|, |rhs|)``, or 0 when both sides vanish.
    """
    if not t0 <= tau <= t:
        raise ValueError(f"Need t0 <= tau <= t, got ({t0!r}, {tau!r}, {t!r})")
    lhs = first_order_closed_form(s, tau, t, tol) * first_order_closed_form(s, t0, tau, tol)
    rhs = first_order_closed_form(s, t0, t, tol) / s.coefficient(1)(tau)
    scale = max(abs(lhs), abs(rhs))
    return 0.0 if scale == 0.0 else abs(lhs - rhs) / scale
