# #############################################################################
# WARNING: If you modify features, API, or usage, you MUST update the
# documentation immediately.
# #############################################################################
"""
The worked first-order example behind ``demo section6``.

System A is ``(t+1) y' + (t+2) y = x``; B is its partner with ``(k1, k0) = (2, 1)``
and C is B's partner with ``(l1, l0) = (-0.5, 3.5)``. All three are singular at
``t = -1``, so their domain starts at ``-0.5``.

.. note::
    If you modify features, API, or usage, you MUST update the documentation immediately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ltvcommute.cascade import cascade_pair, delta_integral, delta_integrand, make_grid
from ltvcommute.commute import CommutativityReport
from ltvcommute.constants import DEFAULT_CONSTANCY_TOL, DEFAULT_DEFECT_TOL, DEFAULT_GRID_POINTS, DEFAULT_SOLVER_TOL
from ltvcommute.render import chain_key_values, format_value
from ltvcommute.system import LTVSystem
from ltvcommute.transitivity import ChainReport, verify_chain

SECTION6_DOMAIN = (-0.5, 10.0)


def section6_systems(t0: float = 0.0) -> tuple[LTVSystem, LTVSystem, LTVSystem]:
    """Systems A, B and C of the first-order example."""
    a = LTVSystem(("(t+2)", "(t+1)"), t0=t0, domain=SECTION6_DOMAIN, name="A")
    b = LTVSystem(("2*t+5", "2*(t+1)"), t0=t0, domain=SECTION6_DOMAIN, name="B")
    c = LTVSystem(("-t+1", "-(t+1)"), t0=t0, domain=SECTION6_DOMAIN, name="C")
    return a, b, c


# --- Closed forms of the first-order example ---


def h_a(t: float, t0: float) -> float:
    return math.exp(t0 - t) / (t + 1.0)


def h_b(t: float, t0: float) -> float:
    return math.sqrt(t0 + 1.0) / (2.0 * (t + 1.0) ** 1.5) * math.exp(t0 - t)


def h_c(t: float, t0: float) -> float:
    return -((t + 1.0) ** 2) / (t0 + 1.0) ** 3 * math.exp(t0 - t)


def h_ab(t: float, t0: float) -> float:
    """Cascade of A and B (either order)."""
    return math.exp(t0 - t) / (t + 1.0) * (1.0 - math.sqrt((t0 + 1.0) / (t + 1.0)))


def h_ac(t: float, t0: float) -> float:
    """Cascade of A and C (either order)."""
    return math.exp(t0 - t) / (3.0 * (t + 1.0)) * (1.0 - ((t + 1.0) / (t0 + 1.0)) ** 3)


@dataclass(frozen=True, eq=False)
class Section6Result:
    """Everything ``demo section6`` reports."""

    chain: ChainReport
    grid: np.ndarray
    h_ab: np.ndarray
    h_ba: np.ndarray
    h_ac: np.ndarray
    h_ca: np.ndarray
    h_ab_error: float
    h_ac_error: float
    delta_max: float
    delta_integral: float

    @property
    def ab(self) -> CommutativityReport:
        return self.chain.ab

    def value_at(self, series: np.ndarray, t: float) -> float:
        """``series`` at ``t``; exact on grid nodes, linear in between."""
        if not self.grid[0] <= t <= self.grid[-1]:
            raise ValueError(f"t={t!r} lies outside [{self.grid[0]!r}, {self.grid[-1]!r}]")
        return float(np.interp(t, self.grid, series))


def run_section6(
    t0: float = 0.0,
    t_end: float = 5.0,
    points: int = DEFAULT_GRID_POINTS,
    tol: float = DEFAULT_CONSTANCY_TOL,
    defect_tol: float = DEFAULT_DEFECT_TOL,
    solver_tol: float = DEFAULT_SOLVER_TOL,
) -> Section6Result:
    """
    Reproduce the first-order example: chain verification, cascade responses
    against their closed forms, and the nonzero integrand with vanishing integral.
    """
    a, b, c = section6_systems(t0)
    grid = make_grid(t0, t_end, points)
    chain = verify_chain(a, b, c, grid, tol, defect_tol, solver_tol, t0)
    # Spot values at t0 + 1 are read off the grid, so it must be a node.
    t1 = t0 + 1.0
    if t1 <= t_end and not np.isclose(grid, t1, rtol=0.0, atol=1e-12).any():
        grid = np.union1d(grid, [t1])
    ab, ba = cascade_pair(a, b, t0, grid, solver_tol)
    ac, ca = cascade_pair(a, c, t0, grid, solver_tol)
    exact_ab = np.array([h_ab(t, t0) for t in grid])
    exact_ac = np.array([h_ac(t, t0) for t in grid])
    t_delta = t0 + 2.0
    taus = np.linspace(t0, t_delta, points)
    delta_max = max(abs(delta_integrand(a, b, t0, tau, t_delta, solver_tol)) for tau in taus)
    return Section6Result(
        chain=chain,
        grid=grid,
        h_ab=ab.values,
        h_ba=ba.values,
        h_ac=ac.values,
        h_ca=ca.values,
        h_ab_error=float(np.max(np.abs(ab.values - exact_ab))),
        h_ac_error=float(np.max(np.abs(ac.values - exact_ac))),
        delta_max=float(delta_max),
        delta_integral=delta_integral(a, b, t0, t_delta, solver_tol),
    )


def section6_lines(result: Section6Result) -> list[str]:
    """``key=value`` summary of :func:`run_section6`."""
    t0 = float(result.grid[0])
    t1 = t0 + 1.0
    lines = chain_key_values(result.chain)
    if t1 <= result.grid[-1]:
        lines += [
            f"h_ab({format_value(t1)},{format_value(t0)})={format_value(result.value_at(result.h_ab, t1))}",
            f"h_ba({format_value(t1)},{format_value(t0)})={format_value(result.value_at(result.h_ba, t1))}",
            f"h_ab.closed_form={format_value(h_ab(t1, t0))}",
            f"h_ac({format_value(t1)},{format_value(t0)})={format_value(result.value_at(result.h_ac, t1))}",
            f"h_ca({format_value(t1)},{format_value(t0)})={format_value(result.value_at(result.h_ca, t1))}",
            f"h_ac.closed_form={format_value(h_ac(t1, t0))}",
        ]
    lines += [
        f"h_ab.max_error={format_value(result.h_ab_error)}",
        f"h_ac.max_error={format_value(result.h_ac_error)}",
        f"delta.max={format_value(result.delta_max)}",
        f"delta.integral={format_value(result.delta_integral)}",
    ]
    return lines
