# #############################################################################
# WARNING: If you modify features, API, or usage, you MUST update the
# documentation immediately.
# #############################################################################
"""
Cascade connections and the commutativity defect.

``h_AB(t, t0)`` (A then B) is computed as the relaxed response of B driven by
``h_A(., t0)``, which equals the superposition integral
``int_t0^t h_B(t, tau) h_A(tau, t0) dtau`` without the nested quadrature. The
literal nested integral is kept for cross-validation.

.. note::
    If you modify features, API, or usage, you MUST update the documentation immediately.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import cast

import numpy as np

from ltvcommute.constants import (
    DEFAULT_GRID_POINTS,
    DEFAULT_SOLVER_TOL,
    LEADING_SCAN_POINTS,
    METHOD_ODE,
    METHOD_QUADRATURE,
    METHOD_SCALAR,
    SCALAR_FIRST,
    SCALAR_SECOND,
)
from ltvcommute.errors import OrderError
from ltvcommute.impulse import (
    ScalarImpulse,
    first_order_closed_form,
    gauge_function,
    impulse_response,
    kernel,
    scalar_impulse,
)
from ltvcommute.numerics import Trajectory, integrate_adaptive, solve_linear_ode
from ltvcommute.system import LTVSystem, ensure_valid

logger = logging.getLogger(__name__)

Grid = Sequence[float] | np.ndarray


@dataclass(frozen=True, eq=False)
class CascadeResult:
    """
    Impulse response of the cascade ``first`` then ``second`` on a grid.

    Attributes
    ----------
    first, second : LTVSystem
        The stages, in signal order.
    t0 : float
        Impulse time.
    grid : np.ndarray
        Strictly increasing evaluation times, all ``>= t0``.
    values : np.ndarray
        ``h_{first,second}(grid, t0)``.
    tolerance : float
        Solver / quadrature tolerance used.
    method : str
        ``"ode"``, ``"quadrature"`` or ``"scalar"``.
    """

    first: LTVSystem
    second: LTVSystem
    t0: float
    grid: np.ndarray
    values: np.ndarray
    tolerance: float
    method: str = METHOD_ODE

    def __post_init__(self) -> None:
        if np.any(np.diff(self.grid) <= 0.0) or (len(self.grid) and self.grid[0] < self.t0):
            raise ValueError("Cascade grid must be strictly increasing and start at or after t0")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("Cascade values must be finite")


def make_grid(t0: float, t_end: float, points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    """Uniform grid of ``points`` samples over ``[t0, t_end]``."""
    if points < 2 or t_end <= t0:
        raise ValueError("Need at least two grid points and t_end > t0")
    return np.linspace(t0, t_end, points)


def _prepare_grid(systems: Sequence[LTVSystem], t0: float, grid: Grid) -> np.ndarray:
    points = np.asarray(grid, dtype=float)
    if points.ndim != 1 or len(points) == 0:
        raise ValueError("Grid must be a non-empty 1-D sequence")
    if points[0] < t0:
        raise ValueError(f"Grid starts at {points[0]!r}, before t0={t0!r}")
    for s in systems:
        if not s.contains(t0, points[-1]):
            raise ValueError(f"[{t0!r}, {points[-1]!r}] lies outside the domain of {s.label}")
    return points


def _require_dynamic(*systems: LTVSystem) -> None:
    for s in systems:
        if s.is_scalar:
            raise OrderError(f"{s.label} is scalar; use scalar_cascade")


def cascade_impulse(
    first: LTVSystem,
    second: LTVSystem,
    t0: float,
    grid: Grid,
    tol: float = DEFAULT_SOLVER_TOL,
) -> CascadeResult:
    """
    Impulse response of ``first`` followed by ``second``.

    Parameters
    ----------
    first, second : LTVSystem
        Stages of order >= 1.
    t0 : float
        Impulse time.
    grid : Sequence[float]
        Evaluation times inside both domains.
    tol : float, optional
        Solver tolerance.

    Returns
    -------
    CascadeResult
        With method ``"ode"``.

    Raises
    ------
    OrderError
        If either stage is scalar.
    SystemValidationError
        If a leading coefficient vanishes or changes sign on the span.
    """
    _require_dynamic(first, second)
    points = _prepare_grid((first, second), t0, grid)
    t_end = float(points[-1])
    ensure_valid(second.restricted(float(t0), t_end), LEADING_SCAN_POINTS)
    drive = impulse_response(first, t0, t_end, tol).trajectory.output
    response = solve_linear_ode(second.coefficients, drive, t0, np.zeros(second.order), t_end, tol)
    return CascadeResult(first, second, float(t0), points, response.sample(points), tol, METHOD_ODE)


def cascade_impulse_quadrature(
    first: LTVSystem,
    second: LTVSystem,
    t0: float,
    grid: Grid,
    tol: float = DEFAULT_SOLVER_TOL,
) -> CascadeResult:
    """
    Cascade impulse response from the nested integral ``int h_second(t, tau) h_first(tau, t0) dtau``.

    Each grid point costs one outer quadrature with a kernel evaluation per node,
    so this is meant for short grids.
    """
    _require_dynamic(first, second)
    points = _prepare_grid((first, second), t0, grid)
    inner_tol = 1e-2 * tol
    drive = impulse_response(first, t0, float(points[-1]), inner_tol)
    values = np.array(
        [
            integrate_adaptive(lambda tau, t=t: kernel(second, tau, t, inner_tol) * drive(tau), t0, t, tol)
            for t in points
        ]
    )
    return CascadeResult(first, second, float(t0), points, values, tol, METHOD_QUADRATURE)


def scalar_cascade(
    scalar: LTVSystem,
    other: LTVSystem,
    order: str,
    t0: float,
    grid: Grid,
    tol: float = DEFAULT_SOLVER_TOL,
) -> CascadeResult | ScalarImpulse:
    """
    Cascade of a scalar system ``y = x / a_0(t)`` with another system.

    Parameters
    ----------
    scalar : LTVSystem
        The order-0 stage.
    other : LTVSystem
        The other stage.
    order : str
        ``"scalar-first"`` gives ``h_other(t, t0) / a_0(t0)``; ``"scalar-second"``
        gives ``h_other(t, t0) / a_0(t)``.
    t0 : float
        Impulse time.
    grid : Sequence[float]
        Evaluation times.
    tol : float, optional
        Solver tolerance.

    Returns
    -------
    CascadeResult | ScalarImpulse
        A :class:`ScalarImpulse` with the product of the weights when both stages are scalar.
    """
    if order not in (SCALAR_FIRST, SCALAR_SECOND):
        raise ValueError(f"order must be '{SCALAR_FIRST}' or '{SCALAR_SECOND}', got '{order}'")
    if not scalar.is_scalar:
        raise OrderError(f"{scalar.label} has order {scalar.order}; scalar_cascade needs an order-0 stage")
    if other.is_scalar:
        return ScalarImpulse(scalar_impulse(scalar, t0).weight * scalar_impulse(other, t0).weight, float(t0))
    points = _prepare_grid((scalar, other), t0, grid)
    h = impulse_response(other, t0, float(points[-1]), tol).trajectory.sample(points)
    gain = scalar.coefficient(0)
    if order == SCALAR_FIRST:
        values = h / gain(t0)
        first, second = scalar, other
    else:
        values = h / gain.evaluate_many(points)
        first, second = other, scalar
    return CascadeResult(first, second, float(t0), points, values, tol, METHOD_SCALAR)


def cascade_pair(
    a: LTVSystem,
    b: LTVSystem,
    t0: float,
    grid: Grid,
    tol: float = DEFAULT_SOLVER_TOL,
) -> tuple[CascadeResult, CascadeResult]:
    """
    Both cascade orders ``(AB, BA)``; scalar stages go through :func:`scalar_cascade`.

    Raises
    ------
    OrderError
        If both systems are scalar (no trajectories to compare).
    """
    if a.is_scalar and b.is_scalar:
        raise OrderError("Both systems are scalar; their cascade is a weighted impulse")
    if a.is_scalar:
        ab = scalar_cascade(a, b, SCALAR_FIRST, t0, grid, tol)
        ba = scalar_cascade(a, b, SCALAR_SECOND, t0, grid, tol)
    elif b.is_scalar:
        ab = scalar_cascade(b, a, SCALAR_SECOND, t0, grid, tol)
        ba = scalar_cascade(b, a, SCALAR_FIRST, t0, grid, tol)
    else:
        ab = cascade_impulse(a, b, t0, grid, tol)
        ba = cascade_impulse(b, a, t0, grid, tol)
    return cast(CascadeResult, ab), cast(CascadeResult, ba)


def commutativity_defect(
    a: LTVSystem,
    b: LTVSystem,
    t0: float,
    grid: Grid,
    tol: float = DEFAULT_SOLVER_TOL,
) -> float:
    """
    Max-norm difference ``max |h_AB - h_BA|`` over the grid.

    Two scalar systems always commute (their cascade is a product of gains), so
    the defect is zero.
    """
    if a.is_scalar and b.is_scalar:
        return 0.0
    ab, ba = cascade_pair(a, b, t0, grid, tol)
    defect = float(np.max(np.abs(ab.values - ba.values)))
    logger.debug("commutativity_defect(%s, %s) = %.3e", a.label, b.label, defect)
    return defect


def delta_integrand(
    a: LTVSystem,
    b: LTVSystem,
    t0: float,
    tau: float,
    t: float,
    tol: float = DEFAULT_SOLVER_TOL,
) -> float:
    """
    ``h_B(t, tau) h_A(tau, t0) - h_A(t, tau) h_B(tau, t0)``.

    Its integral over ``tau`` is ``h_AB - h_BA``; the integrand itself need not
    vanish for a commutative pair.

    Raises
    ------
    ValueError
        Unless ``t0 <= tau <= t``.
    """
    if not t0 <= tau <= t:
        raise ValueError(f"Need t0 <= tau <= t, got ({t0!r}, {tau!r}, {t!r})")
    return kernel(b, tau, t, tol) * kernel(a, t0, tau, tol) - kernel(a, tau, t, tol) * kernel(b, t0, tau, tol)


def delta_integral(a: LTVSystem, b: LTVSystem, t0: float, t: float, tol: float = DEFAULT_SOLVER_TOL) -> float:
    """``int_t0^t delta_integrand(a, b, t0, tau, t) dtau``."""
    inner_tol = 1e-2 * tol
    return integrate_adaptive(lambda tau: delta_integrand(a, b, t0, tau, t, inner_tol), t0, t, tol)


@dataclass(frozen=True)
class ConditionalCheck:
    """
    Pointwise vanishing of the integrands for (A,B), (B,C) and (A,C) on a grid.

    The premises are reported, never assumed: ``implication_holds`` is vacuously
    true when either premise fails.
    """

    max_ab: float
    max_bc: float
    max_ac: float
    premise_tol: float
    conclusion_tol: float

    @property
    def ab_vanishes(self) -> bool:
        return self.max_ab <= self.premise_tol

    @property
    def bc_vanishes(self) -> bool:
        return self.max_bc <= self.premise_tol

    @property
    def ac_vanishes(self) -> bool:
        return self.max_ac <= self.conclusion_tol

    @property
    def premise_holds(self) -> bool:
        return self.ab_vanishes and self.bc_vanishes

    @property
    def implication_holds(self) -> bool:
        return not self.premise_holds or self.ac_vanishes


def _kernel_matrix(s: LTVSystem, points: np.ndarray, tol: float) -> np.ndarray:
    """``K[i, j] = h_s(points[j], points[i])`` for ``i <= j``, zero below."""
    n = len(points)
    matrix = np.zeros((n, n))
    for i in range(n):
        if s.order == 1:
            matrix[i, i:] = [first_order_closed_form(s, points[i], points[j], tol) for j in range(i, n)]
        else:
            response = impulse_response(s, points[i], points[-1], tol)
            matrix[i, i:] = response(points[i:])
    return matrix


def _max_delta(kx: np.ndarray, ky: np.ndarray) -> float:
    # row 0 is the impulse time t0
    n = kx.shape[0]
    worst = 0.0
    for i in range(n):
        for j in range(i, n):
            worst = max(worst, abs(ky[i, j] * kx[0, i] - kx[i, j] * ky[0, i]))
    return worst


def conditional_transitivity(
    a: LTVSystem,
    b: LTVSystem,
    c: LTVSystem,
    t0: float,
    grid: Grid,
    tol: float = DEFAULT_SOLVER_TOL,
    conclusion_tol: float | None = None,
) -> ConditionalCheck:
    """
    Check whether pointwise vanishing for (A,B) and (B,C) carries over to (A,C).

    Parameters
    ----------
    a, b, c : LTVSystem
        Systems of order >= 1.
    t0 : float
        Impulse time.
    grid : Sequence[float]
        Sample times; every pair ``tau <= t`` drawn from ``{t0} + grid`` is checked.
    tol : float, optional
        Solver tolerance and premise threshold.
    conclusion_tol : float, optional
        Threshold for the (A,C) integrand, by default ``10 * tol``.
    """
    _require_dynamic(a, b, c)
    points = _prepare_grid((a, b, c), t0, grid)
    points = np.unique(np.concatenate(([float(t0)], points)))
    ka, kb, kc = (_kernel_matrix(s, points, 1e-2 * tol) for s in (a, b, c))
    if conclusion_tol is None:
        conclusion_tol = 10.0 * tol
    check = ConditionalCheck(_max_delta(ka, kb), _max_delta(kb, kc), _max_delta(ka, kc), tol, conclusion_tol)
    if check.premise_holds and not check.ac_vanishes:
        logger.warning("Pointwise premises hold but the (A,C) integrand reaches %.3e", check.max_ac)
    return check


def paired_cascade_closed_form(
    a: LTVSystem,
    k1: float,
    k0: float,
    t0: float,
    t: float,
    tol: float = DEFAULT_SOLVER_TOL,
) -> float:
    """
    Closed form of ``h_AB`` for the partner ``B = (k1 a_1, k1 a_0 + k0)`` of a first-order A.

    ``h_AB(t, t0) = h_A(t, t0) (1 - exp(g(t0) - g(t))) / k0``.

    Raises
    ------
    ValueError
        If ``k0`` is zero (B is then a scaled copy of A and only the numerical path applies).
    """
    if k0 == 0.0:
        raise ValueError("The closed form divides by k0; use cascade_impulse for k0 = 0")
    if a.order != 1:
        raise OrderError(f"{a.label} has order {a.order}; the closed form needs order 1")
    h = first_order_closed_form(a, t0, t, tol)
    shift = gauge_function(a.coefficient(1), k1, k0, t0, t, tol)
    return h * (1.0 - math.exp(-shift)) / k0


def simulate_cascade_with_ics(
    first: LTVSystem,
    second: LTVSystem,
    signal: Callable[[float], float],
    grid: Grid,
    tol: float = DEFAULT_SOLVER_TOL,
) -> Trajectory:
    """
    Simulate the two-stage connection with each stage's own initial state.

    The first stage is driven by ``signal`` and the second by the first's output,
    both starting from the shared ``t0``.

    Returns
    -------
    Trajectory
        The second stage's state; ``.output`` is the cascade output.

    Raises
    ------
    ValueError
        If the stages have different initial times.
    """
    _require_dynamic(first, second)
    if first.t0 != second.t0:
        raise ValueError(f"Stages start at different times: {first.t0!r} and {second.t0!r}")
    t0 = first.t0
    points = _prepare_grid((first, second), t0, grid)
    t_end = float(points[-1])
    upstream = solve_linear_ode(first.coefficients, signal, t0, first.initial_conditions, t_end, tol)
    return solve_linear_ode(second.coefficients, upstream.output, t0, second.initial_conditions, t_end, tol)
