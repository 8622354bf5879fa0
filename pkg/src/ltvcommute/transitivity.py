# #############################################################################
# WARNING: If you modify features, API, or usage, you MUST update the
# documentation immediately.
# #############################################################################
"""
Transitivity of commutativity along chains A - B - C.

Each chain is verified twice: the (A,C) constants are predicted by composing
the (A,B) and (B,C) constants, and extracted independently from A and C. The
chain is transitive when every pair commutes and, for the algebraic modes, the
two sets of constants agree.

.. note::
    If you modify features, API, or usage, you MUST update the documentation immediately.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ltvcommute.commute import CommutativityReport, assess_pair, bracket_constant
from ltvcommute.constants import DEFAULT_CONSTANCY_TOL, DEFAULT_DEFECT_TOL, DEFAULT_SOLVER_TOL, TRIPLET_NOTE
from ltvcommute.system import (
    FirstOrderConstants,
    LTVSystem,
    MixedFreeConstants,
    PairConstants,
    SecondOrderConstants,
)

logger = logging.getLogger(__name__)


class ChainMode(str, Enum):
    ALGEBRAIC = "algebraic"
    NUMERICAL_ONLY = "numerical-only"
    UNPROVEN = "unproven in source"


def compose_first_order_constants(k1: float, k0: float, l1: float, l0: float) -> tuple[float, float]:
    """
    Constants of ``C`` relative to ``A`` when ``B = (k1, k0) A`` and ``C = (l1, l0) B``.

    Examples
    --------
    >>> compose_first_order_constants(2.0, 1.0, -0.5, 3.5)
    (-1.0, 3.0)
    """
    return k1 * l1, k0 * l1 + l0


def invert_first_order_constants(k1: float, k0: float) -> tuple[float, float]:
    """Constants of ``A`` relative to ``B`` when ``B = (k1, k0) A``."""
    if k1 == 0.0:
        raise ValueError("k1 must be nonzero")
    return 1.0 / k1, -k0 / k1


def compose_mixed_constants(k1: float, k0: float, a0: float, l1: float, l0: float, c0: float) -> tuple[float, float, float]:
    """
    Second-order constants ``m`` with ``C = m A`` for two second-order systems sharing a first-order partner.

    ``B = (k1, k0) F(A)`` with bracket constant ``a0`` and ``B = (l1, l0) F(C)``
    with bracket constant ``c0``.
    """
    ratio = k1 / l1
    shift = (k0 - l0) / l1
    return ratio * ratio, 2.0 * k1 * (k0 - l0) / (l1 * l1), c0 - a0 * ratio * ratio + shift * shift


def root_constants(m2: float, m1: float) -> tuple[float, float]:
    """
    First-order constants ``r`` with ``F(B) = r F(A)`` when ``B = m A`` (second order).

    Raises
    ------
    ValueError
        If ``m2`` is not positive.
    """
    if m2 <= 0.0:
        raise ValueError(f"m2 must be positive, got {m2!r}")
    root = math.sqrt(m2)
    return root, m1 / (2.0 * root)


def compose_second_order_constants(
    m: tuple[float, float, float],
    n: tuple[float, float, float],
) -> tuple[float, float, float]:
    """Constants of ``C`` relative to ``A`` when ``B = m A`` and ``C = n B``, all second order."""
    m2, m1, m0 = m
    n2, n1, n0 = n
    root = math.sqrt(m2)
    return n2 * m2, n2 * m1 + n1 * root, n2 * m0 + n1 * m1 / (2.0 * root) + n0


def unrelaxed_closure(k1: float, k0: float, l1: float, l0: float) -> float:
    """
    Residual of ``k0' = 1 - k1'`` for the composed constants.

    Zero (up to rounding) whenever ``k0 = 1 - k1`` and ``l0 = 1 - l1``.
    """
    c1, c0 = compose_first_order_constants(k1, k0, l1, l0)
    return abs(c0 - (1.0 - c1))


@dataclass(frozen=True, eq=False)
class ChainReport:
    """
    Verdict on the chain ``A - B - C``.

    Attributes
    ----------
    ab, bc, ac : CommutativityReport
        Pair reports.
    orders : tuple[int, int, int]
        Orders of A, B and C.
    mode : ChainMode
        How the (A,C) constants were obtained.
    predicted, extracted : PairConstants | None
        (A,C) constants from composition and from direct extraction.
    constants_match : bool | None
        Whether they agree within the tolerance; ``None`` when not compared.
    transitive : bool
        All three pairs commute and (in algebraic modes) the constants agree.
    unrelaxed : bool | None
        Unrelaxed verdict of (A,C) when (A,B) and (B,C) commute unrelaxed (first-order chains).
    closure_residual : float | None
        Residual of ``k0 = 1 - k1`` for the composed first-order constants.
    notes : tuple[str, ...]
        Remarks, including the triplet note on transitive chains.
    """

    ab: CommutativityReport
    bc: CommutativityReport
    ac: CommutativityReport
    orders: tuple[int, int, int]
    mode: ChainMode
    predicted: PairConstants | None
    extracted: PairConstants | None
    constants_match: bool | None
    transitive: bool
    unrelaxed: bool | None = None
    closure_residual: float | None = None
    notes: tuple[str, ...] = ()


def _first(report: CommutativityReport) -> tuple[float, float] | None:
    c = report.constants
    if report.commutative and isinstance(c, FirstOrderConstants):
        return c.k1, c.k0
    return None


def _mixed(report: CommutativityReport) -> MixedFreeConstants | None:
    c = report.constants
    return c if report.commutative and isinstance(c, MixedFreeConstants) else None


def _second(report: CommutativityReport) -> tuple[float, float, float] | None:
    c = report.constants
    if report.commutative and isinstance(c, SecondOrderConstants):
        return c.k2, c.k1, c.k0
    return None


def _predict(
    orders: tuple[int, int, int],
    ab: CommutativityReport,
    bc: CommutativityReport,
    a: LTVSystem,
    c: LTVSystem,
    grid: np.ndarray,
) -> PairConstants | None:
    """
    Compose the (A,B) and (B,C) constants into predicted (A,C) constants.

    Pair reports are oriented as :func:`extract_pair_constants` returns them: a
    first-order member is always expressed through the base form of a
    second-order one.
    """
    if orders == (1, 1, 1):
        k, ell = _first(ab), _first(bc)
        if k and ell:
            return FirstOrderConstants(*compose_first_order_constants(*k, *ell))
    elif orders == (2, 1, 1):
        k, ell = _mixed(ab), _first(bc)
        if k and ell:
            return MixedFreeConstants(*compose_first_order_constants(k.k1, k.k0, *ell), k.free)
    elif orders == (1, 1, 2):
        ell, k = _first(ab), _mixed(bc)
        if k and ell:
            back = invert_first_order_constants(*ell)
            return MixedFreeConstants(*compose_first_order_constants(k.k1, k.k0, *back), k.free)
    elif orders == (1, 2, 1):
        k, ell = _mixed(ab), _mixed(bc)
        if k and ell:
            back = invert_first_order_constants(k.k1, k.k0)
            return FirstOrderConstants(*compose_first_order_constants(*back, ell.k1, ell.k0))
    elif orders == (2, 1, 2):
        k, ell = _mixed(ab), _mixed(bc)
        if k and ell:
            return SecondOrderConstants(*compose_mixed_constants(k.k1, k.k0, k.free, ell.k1, ell.k0, ell.free))
    elif orders == (2, 2, 1):
        m, ell = _second(ab), _mixed(bc)
        if m and ell:
            root = root_constants(m[0], m[1])
            free, _ = bracket_constant(a, grid)
            return MixedFreeConstants(*compose_first_order_constants(*root, ell.k1, ell.k0), free)
    elif orders == (1, 2, 2):
        k, m = _mixed(ab), _second(bc)
        if k and m:
            back = invert_first_order_constants(*root_constants(m[0], m[1]))
            free, _ = bracket_constant(c, grid)
            return MixedFreeConstants(*compose_first_order_constants(*back, k.k1, k.k0), free)
    elif orders == (2, 2, 2):
        m, n = _second(ab), _second(bc)
        if m and n:
            return SecondOrderConstants(*compose_second_order_constants(m, n))
    return None


def _match(predicted: PairConstants, extracted: PairConstants | None, tol: float) -> bool:
    if extracted is None or type(predicted) is not type(extracted):
        return False
    return all(
        abs(p - e) <= tol * max(1.0, abs(e)) for p, e in zip(predicted.as_tuple(), extracted.as_tuple(), strict=True)
    )


def verify_chain(
    a: LTVSystem,
    b: LTVSystem,
    c: LTVSystem,
    grid: Sequence[float] | np.ndarray,
    tol: float = DEFAULT_CONSTANCY_TOL,
    defect_tol: float = DEFAULT_DEFECT_TOL,
    solver_tol: float = DEFAULT_SOLVER_TOL,
    t0: float | None = None,
) -> ChainReport:
    """
    Verify transitivity of commutativity for the chain ``a - b - c``.

    Parameters
    ----------
    a, b, c : LTVSystem
        Chain members; any member of order 0 or >= 3 makes the chain numerical-only.
    grid : Sequence[float]
        Evaluation grid shared by all pair checks.
    tol : float, optional
        Constancy tolerance, also used to compare predicted and extracted constants.
    defect_tol : float, optional
        Commutativity defect tolerance.
    solver_tol : float, optional
        ODE and quadrature tolerance.
    t0 : float, optional
        Impulse time, by default the first grid point.

    Returns
    -------
    ChainReport
        The joined report; the three pair checks run concurrently.
    """
    points = np.asarray(grid, dtype=float)
    orders = (a.order, b.order, c.order)
    pairs = ((a, b), (b, c), (a, c))
    with ThreadPoolExecutor(max_workers=len(pairs)) as pool:
        futures = [pool.submit(assess_pair, x, y, points, tol, defect_tol, solver_tol, t0) for x, y in pairs]
        ab, bc, ac = (f.result() for f in futures)

    notes: list[str] = []
    all_commute = ab.commutative and bc.commutative and ac.commutative
    if not set(orders) <= {1, 2}:
        mode = ChainMode.NUMERICAL_ONLY
        predicted = extracted = None
        constants_match = None
        transitive = all_commute
        notes.append("no algebraic transitivity results for these orders; verdict from defects only")
    else:
        mode = ChainMode.UNPROVEN if orders == (2, 2, 2) else ChainMode.ALGEBRAIC
        if mode is ChainMode.UNPROVEN:
            notes.append("the 2-2-2 composition is checked but has no proof behind it")
        predicted = _predict(orders, ab, bc, a, c, points)
        extracted = ac.constants
        constants_match = None if predicted is None else _match(predicted, extracted, tol)
        transitive = all_commute and bool(constants_match)

    unrelaxed = closure = None
    if orders == (1, 1, 1) and ab.unrelaxed and bc.unrelaxed:
        unrelaxed = ac.unrelaxed
        k, ell = _first(ab), _first(bc)
        if k and ell:
            closure = unrelaxed_closure(*k, *ell)

    if transitive:
        notes.append(TRIPLET_NOTE)
    logger.info("verify_chain %s: mode=%s transitive=%s", orders, mode.value, transitive)
    return ChainReport(
        ab, bc, ac, orders, mode, predicted, extracted, constants_match, transitive, unrelaxed, closure, tuple(notes)
    )
