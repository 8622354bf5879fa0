# #############################################################################
# WARNING: If you modify features, API, or usage, you MUST update the
# documentation immediately.
# #############################################################################
"""
Numerical substrate: adaptive quadrature and adaptive Runge-Kutta integration.

.. note::
    If you modify features, API, or usage, you MUST update the documentation immediately.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from ltvcommute.constants import (
    DEFAULT_SOLVER_TOL,
    INTERPOLATION_HERMITE,
    LEADING_COEFF_GUARD,
    LEADING_SCAN_POINTS,
    QUAD_MAX_DEPTH,
    RK_MAX_FACTOR,
    RK_MAX_STEPS,
    RK_MIN_FACTOR,
    RK_SAFETY,
)
from ltvcommute.errors import OrderError, QuadratureError, SingularCoefficientError, StepSizeError
from ltvcommute.expr import Expr, coerce

logger = logging.getLogger(__name__)

Forcing = Callable[[float], float]

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
# fifth-order minus embedded fourth-order weights; the last entry multiplies f(t + h, y_new)
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    Dense solution of a first-order state system.

    Attributes
    ----------
    times : np.ndarray
        Strictly increasing sample times, shape ``(N,)``.
    states : np.ndarray
        State vectors at the samples, shape ``(N, n)``.
    derivatives : np.ndarray
        State derivatives at the samples, shape ``(N, n)``; used by the interpolant.
    tolerance : float
        Tolerance the samples were computed to.
    interpolation : str
        Interpolant between samples (always cubic Hermite).
    """

    times: np.ndarray
    states: np.ndarray
    derivatives: np.ndarray
    tolerance: float
    interpolation: str = INTERPOLATION_HERMITE

    def __post_init__(self) -> None:
        times = np.array(self.times, dtype=float)
        states = np.array(self.states, dtype=float).reshape(len(times), -1)
        derivatives = np.array(self.derivatives, dtype=float).reshape(states.shape)
        if times.ndim != 1 or len(times) == 0:
            raise ValueError("A trajectory needs at least one sample time")
        if np.any(np.diff(times) <= 0.0):
            raise ValueError("Trajectory sample times must be strictly increasing")
        for array in (times, states, derivatives):
            array.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "derivatives", derivatives)

    @property
    def start(self) -> float:
        return float(self.times[0])

    @property
    def end(self) -> float:
        return float(self.times[-1])

    @property
    def dimension(self) -> int:
        return int(self.states.shape[1])

    @cached_property
    def _spline(self) -> CubicHermiteSpline | None:
        if len(self.times) < 2:
            return None
        return CubicHermiteSpline(self.times, self.states, self.derivatives, axis=0)

    def __call__(self, t: float | Sequence[float] | np.ndarray) -> np.ndarray:
        """
        Evaluate the state at ``t`` (scalar or array).

        Returns
        -------
        np.ndarray
            Shape ``(n,)`` for scalar ``t``, ``(len(t), n)`` otherwise. Values at
            sample times are the stored samples, bit for bit.

        Raises
        ------
        ValueError
            If ``t`` lies outside ``[start, end]``.
        """
        ts = np.asarray(t, dtype=float)
        scalar = ts.ndim == 0
        ts = np.atleast_1d(ts)
        slack = 1e-12 * max(1.0, abs(self.start), abs(self.end))
        if np.any(ts < self.start - slack) or np.any(ts > self.end + slack):
            raise ValueError(f"t outside trajectory span [{self.start!r}, {self.end!r}]")
        ts = np.clip(ts, self.start, self.end)
        spline = self._spline
        values = np.repeat(self.states[:1], len(ts), axis=0) if spline is None else np.array(spline(ts), dtype=float)
        index = np.minimum(np.searchsorted(self.times, ts), len(self.times) - 1)
        exact = self.times[index] == ts
        values[exact] = self.states[index[exact]]
        return values[0] if scalar else values

    def output(self, t: float | Sequence[float] | np.ndarray) -> float | np.ndarray:
        """The first state component y(t)."""
        values = self(t)
        if values.ndim == 1:
            return float(values[0])
        return values[:, 0]

    def derivative_output(self, t: float | Sequence[float] | np.ndarray) -> float | np.ndarray:
        """y'(t): the stored derivative at sample times, the interpolant's slope elsewhere."""
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        self(ts)
        ts = np.clip(ts, self.start, self.end)
        spline = self._spline
        if spline is None:
            slopes = np.full(len(ts), self.derivatives[0, 0])
        else:
            slopes = np.array(spline(ts, 1), dtype=float)[:, 0]
        index = np.minimum(np.searchsorted(self.times, ts), len(self.times) - 1)
        exact = self.times[index] == ts
        slopes[exact] = self.derivatives[index[exact], 0]
        return float(slopes[0]) if np.ndim(t) == 0 else slopes

    def sample(self, grid: Sequence[float] | np.ndarray) -> np.ndarray:
        """Output y on a grid, as a float array."""
        return np.asarray(self.output(np.asarray(grid, dtype=float)), dtype=float)


def integrate_adaptive(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = DEFAULT_SOLVER_TOL,
    max_depth: int = QUAD_MAX_DEPTH,
) -> float:
    """
    Integrate ``f`` over ``[a, b]`` by adaptive Simpson quadrature.

    Parameters
    ----------
    f : Callable[[float], float]
        Integrand, finite on the interval.
    a, b : float
        Limits. ``a == b`` gives 0; ``b < a`` gives the negated integral over ``[b, a]``.
    tol : float, optional
        Absolute error target, by default ``DEFAULT_SOLVER_TOL``.
    max_depth : int, optional
        Maximum number of bisections of any panel.

    Returns
    -------
    float
        The integral, with Richardson correction applied on every accepted panel.

    Raises
    ------
    QuadratureError
        If some panel is still unresolved at ``max_depth``; carries the worst panel.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    if a == b:
        return 0.0
    if b < a:
        return -integrate_adaptive(f, b, a, tol, max_depth)
    m = 0.5 * (a + b)
    fa, fm, fb = f(a), f(m), f(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    failures: list[tuple[float, tuple[float, float]]] = []
    result = _simpson(f, a, b, fa, fm, fb, whole, tol, max_depth, failures)
    if failures:
        estimate, interval = max(failures)
        raise QuadratureError(interval, estimate)
    return result


def _simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    fa: float,
    fm: float,
    fb: float,
    whole: float,
    tol: float,
    depth: int,
    failures: list[tuple[float, tuple[float, float]]],
) -> float:
    m = 0.5 * (a + b)
    lm, rm = 0.5 * (a + m), 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    delta = left + right - whole
    if not math.isfinite(delta):
        failures.append((math.inf, (a, b)))
        return left + right
    if abs(delta) <= 15.0 * tol:
        return left + right + delta / 15.0
    if depth <= 0 or lm == a or rm == b:
        failures.append((abs(delta) / 15.0, (a, b)))
        return left + right + delta / 15.0
    return _simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, failures) + _simpson(
        f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, failures
    )


def _rms(values: np.ndarray) -> float:
    return float(np.sqrt(np.mean(values * values)))


def _leading_root(leading: Callable[[float], float], lo: float, hi: float) -> SingularCoefficientError:
    root = float(brentq(leading, lo, hi))
    return SingularCoefficientError(root, float(leading(root)))


def _scan_leading(exprs: Sequence[Expr], t0: float, t_end: float) -> None:
    """Raise when the leading coefficient vanishes or changes sign on ``[t0, t_end]``."""
    grid = np.linspace(t0, t_end, LEADING_SCAN_POINTS) if t_end > t0 else np.array([float(t0)])
    an = exprs[-1].evaluate_many(grid)
    scale = np.max(np.abs(np.vstack([e.evaluate_many(grid) for e in exprs])), axis=0)
    near_zero = (an == 0.0) | (np.abs(an) < LEADING_COEFF_GUARD * scale)
    if near_zero.any():
        j = int(np.argmax(near_zero))
        raise SingularCoefficientError(float(grid[j]), float(an[j]))
    flips = np.nonzero(np.sign(an[:-1]) != np.sign(an[1:]))[0]
    if flips.size:
        j = int(flips[0])
        raise _leading_root(exprs[-1].compiled, float(grid[j]), float(grid[j + 1]))


def solve_linear_ode(
    coeffs: Sequence[Expr | float],
    forcing: Forcing | None,
    t0: float,
    y0: Sequence[float] | np.ndarray,
    t_end: float,
    tol: float = DEFAULT_SOLVER_TOL,
    max_step: float = math.inf,
) -> Trajectory:
    """
    Solve ``sum_i a_i(t) y^(i)(t) = forcing(t)`` from ``t0`` to ``t_end``.

    The equation is reduced to the first-order state ``x = (y, y', ..., y^(n-1))``
    by dividing through by the leading coefficient and integrated with the
    Dormand-Prince 5(4) embedded pair. A step is accepted only when both the
    embedded error estimate and the cubic-Hermite midpoint check (against a
    classical RK4 half step) are within ``tol``.

    Parameters
    ----------
    coeffs : Sequence[Expr | float]
        ``a_0, ..., a_n`` in ascending derivative order, ``n >= 1``.
    forcing : Callable[[float], float] | None
        Right-hand side; ``None`` for the homogeneous equation.
    t0 : float
        Initial time.
    y0 : Sequence[float]
        Initial state ``y(t0), ..., y^(n-1)(t0)``.
    t_end : float
        Final time, ``t_end >= t0``.
    tol : float, optional
        Mixed absolute and relative tolerance, by default ``DEFAULT_SOLVER_TOL``.
    max_step : float, optional
        Upper bound on the step size.

    Returns
    -------
    Trajectory
        Accepted steps with Hermite dense output.

    Raises
    ------
    OrderError
        If fewer than two coefficients are given.
    SingularCoefficientError
        If the leading coefficient vanishes within the span.
    StepSizeError
        If the step size underflows.
    """
    exprs = [coerce(c) for c in coeffs]
    n = len(exprs) - 1
    if n < 1:
        raise OrderError("solve_linear_ode needs an equation of order >= 1")
    state0 = np.asarray(y0, dtype=float).reshape(-1)
    if state0.shape != (n,):
        raise ValueError(f"Initial state has length {state0.size}, expected {n}")
    if t_end < t0:
        raise ValueError("t_end must not precede t0")
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    _scan_leading(exprs, float(t0), float(t_end))

    lower = [e.compiled for e in exprs[:-1]]
    leading = exprs[-1].compiled
    u = forcing if forcing is not None else (lambda t: 0.0)

    def rhs(t: float, x: np.ndarray) -> np.ndarray:
        an = leading(t)
        values = [c(t) for c in lower]
        scale = max(abs(an), *(abs(v) for v in values))
        if an == 0.0 or abs(an) < LEADING_COEFF_GUARD * scale:
            raise SingularCoefficientError(t, an)
        dx = np.empty(n)
        dx[:-1] = x[1:]
        dx[-1] = (u(t) - sum(v * xi for v, xi in zip(values, x, strict=True))) / an
        return dx

    t = float(t0)
    y = state0
    f = rhs(t, y)
    times, states, derivatives = [t], [y.copy()], [f.copy()]
    span = float(t_end) - t
    if span == 0.0:
        return Trajectory(np.array(times), np.array(states), np.array(derivatives), tol)

    h = min(span / 100.0, max_step)
    accepted = rejected = 0
    stages = np.empty((7, n))
    while t < t_end:
        if accepted + rejected > RK_MAX_STEPS:
            raise StepSizeError(t, h)
        if h < 16.0 * np.finfo(float).eps * max(1.0, abs(t)):
            raise StepSizeError(t, h)
        last = h >= t_end - t
        if last:
            h = t_end - t

        stages[0] = f
        for s in range(1, 6):
            stages[s] = rhs(t + _C[s] * h, y + h * (_A[s] @ stages[:s]))
        y_new = y + h * (_B @ stages[:6])
        t_new = t_end if last else t + h
        f_new = rhs(t_new, y_new)
        stages[6] = f_new

        scale = tol + tol * np.maximum(np.abs(y), np.abs(y_new))
        error = _rms(h * (_E @ stages) / scale)
        interp_error = 0.0
        if error <= 1.0:
            half = 0.5 * h
            k2 = rhs(t + 0.5 * half, y + 0.5 * half * f)
            k3 = rhs(t + 0.5 * half, y + 0.5 * half * k2)
            k4 = rhs(t + half, y + half * k3)
            reference = y + half / 6.0 * (f + 2.0 * k2 + 2.0 * k3 + k4)
            hermite = 0.5 * (y + y_new) + h / 8.0 * (f - f_new)
            interp_error = _rms((hermite - reference) / scale)

        factor = RK_MAX_FACTOR
        if error > 0.0:
            factor = min(factor, RK_SAFETY * error ** (-1.0 / 5.0))
        if interp_error > 0.0:
            factor = min(factor, RK_SAFETY * interp_error ** (-1.0 / 4.0))

        if error <= 1.0 and interp_error <= 1.0:
            if np.sign(leading(t)) != np.sign(leading(t_new)):
                raise _leading_root(leading, t, t_new)
            accepted += 1
            t, y, f = t_new, y_new, f_new
            times.append(t)
            states.append(y.copy())
            derivatives.append(f.copy())
            h = min(h * max(RK_MIN_FACTOR, factor), max_step)
        else:
            rejected += 1
            h *= max(RK_MIN_FACTOR, min(factor, 0.9))

    logger.debug("solve_linear_ode: order %d on [%g, %g], %d accepted / %d rejected", n, t0, t_end, accepted, rejected)
    return Trajectory(np.array(times), np.array(states), np.array(derivatives), tol)
