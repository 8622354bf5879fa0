# #############################################################################
# WARNING: If you modify features, API, or usage, you MUST update the
# documentation immediately.
# #############################################################################
"""
Tests for algebraic commutativity conditions, partner synthesis and pair assessment.
"""

from __future__ import annotations

from unittest.mock import MagicMock, patch

import numpy as np
import pytest

from ltvcommute.cascade import commutativity_defect, make_grid
from ltvcommute.commute import (
    Relation,
    Verdict,
    assess_pair,
    bracket_constant,
    check_unrelaxed,
    constancy,
    extract_first_order_constants,
    extract_pair_constants,
    extract_second_first_constants,
    extract_second_order_constants,
    root_coefficients,
    second_order_bracket,
    second_order_relation_residual,
    synthesize_first_from_second,
    synthesize_first_order_pair,
    synthesize_second_from_first,
    synthesize_second_order_pair,
)
from ltvcommute.demo import SECTION6_DOMAIN
from ltvcommute.errors import OrderError, SingularCoefficientError, SystemValidationError
from ltvcommute.expr import T, sin
from ltvcommute.system import FirstOrderConstants, LTVSystem, MixedFreeConstants, SecondOrderConstants

GRID = np.linspace(0.0, 5.0, 101)
A2 = LTVSystem(("1", "3*(t+1)", "(t+1)^2"), domain=(0.0, 10.0))
TI2 = LTVSystem(("5", "2", "1"), domain=(0.0, 10.0))


def _same(x: LTVSystem, y: LTVSystem, grid=GRID) -> bool:
    """Evaluation equality of all coefficients on a grid."""
    if x.order != y.order:
        return False
    return all(
        np.allclose(x.coefficient(i).evaluate_many(grid), y.coefficient(i).evaluate_many(grid), rtol=1e-12, atol=1e-12)
        for i in range(x.order + 1)
    )


def test_constancy():
    mean, residual = constancy(np.array([2.0, 2.0, 2.0]))
    assert (mean, residual) == (2.0, 0.0)
    mean, residual = constancy(np.array([0.0, 1.0]))
    assert mean == 0.5
    assert residual == 0.5


def test_extract_section6(section6):
    a, b, c = section6
    ab = extract_first_order_constants(a, b, GRID)
    assert ab.verdict is Verdict.COMMUTATIVE
    assert ab.constants.k1 == pytest.approx(2.0, abs=1e-12)
    assert ab.constants.k0 == pytest.approx(1.0, abs=1e-12)
    assert max(ab.constancy_residuals.values()) < 1e-12
    bc = extract_first_order_constants(b, c, GRID)
    assert bc.constants.as_tuple() == pytest.approx((-0.5, 3.5), abs=1e-12)
    aa = extract_first_order_constants(a, a, GRID)
    assert aa.constants == FirstOrderConstants(1.0, 0.0)


def test_extract_detects_non_constant(section6):
    a, _, _ = section6
    perturbed = LTVSystem(("3*t+5", "2*(t+1)"), domain=SECTION6_DOMAIN)
    report = extract_first_order_constants(a, perturbed, GRID)
    assert report.verdict is Verdict.NOT_COMMUTATIVE
    assert report.constancy_residuals["k0"] > 1e-3


def test_extract_vanishing_leading():
    a = LTVSystem(("1", "t-1"), domain=(0.0, 2.0))
    with pytest.raises(SingularCoefficientError):
        extract_first_order_constants(a, a, [0.0, 1.0, 2.0])


def test_extract_wrong_order(section6):
    a, _, _ = section6
    with pytest.raises(OrderError):
        extract_first_order_constants(a, A2, GRID)


def test_synthesize_section6(section6):
    a, b, c = section6
    assert _same(synthesize_first_order_pair(a, 2.0, 1.0), b)
    assert _same(synthesize_first_order_pair(a, 1.0, 0.0), a)
    assert _same(synthesize_first_order_pair(b, -0.5, 3.5), c)
    partner = synthesize_first_order_pair(a, 2.0, 1.0, name="B2")
    assert partner.name == "B2"
    assert partner.domain == a.domain
    with pytest.raises(ValueError):
        synthesize_first_order_pair(a, 0.0, 1.0)


@pytest.mark.parametrize("seed", range(4))
def test_extraction_inverts_synthesis(seed):
    """100 random smooth systems: extraction recovers the synthesis constants."""
    rng = np.random.default_rng(seed)
    for _ in range(25):
        c, d = rng.uniform(1.0, 3.0), rng.uniform(0.0, 0.5)
        p, q = rng.uniform(-3.0, 3.0), rng.uniform(-1.0, 1.0)
        a = LTVSystem((p + q * T, c + d * c * sin(T)), domain=(0.0, 5.0))
        k1 = rng.uniform(0.5, 3.0) * rng.choice([-1.0, 1.0])
        k0 = rng.uniform(-3.0, 3.0)
        report = extract_first_order_constants(a, synthesize_first_order_pair(a, k1, k0), GRID)
        assert report.commutative
        assert report.constants.k1 == pytest.approx(k1, abs=1e-10)
        assert report.constants.k0 == pytest.approx(k0, abs=1e-10)


def test_unrelaxed_satisfied(section6):
    a, _, _ = section6
    a = a.with_initial_conditions([1.0])
    b = synthesize_first_order_pair(a, 2.0, -1.0).with_initial_conditions([1.0])
    report = check_unrelaxed(a, b, extract_first_order_constants(a, b, GRID))
    assert report.unrelaxed is True
    assert report.unrelaxed_residual < 1e-12


def test_unrelaxed_violated(section6):
    a, b, _ = section6
    a, b = a.with_initial_conditions([1.0]), b.with_initial_conditions([1.0])
    report = check_unrelaxed(a, b, extract_first_order_constants(a, b, GRID))
    assert report.unrelaxed is False
    assert any("k0 = 1 - k1" in note for note in report.notes)
    assert report.commutative


def test_unrelaxed_requires_equal_initial_conditions(section6):
    a, _, _ = section6
    b = synthesize_first_order_pair(a, 2.0, -1.0)
    constants = extract_first_order_constants(a, b, GRID)
    report = check_unrelaxed(a.with_initial_conditions([1.0]), b.with_initial_conditions([2.0]), constants)
    assert report.unrelaxed is False
    assert any("initial conditions differ" in note for note in report.notes)


def test_unrelaxed_vacuous_with_zero_ics(section6):
    a, b, _ = section6
    report = check_unrelaxed(a, b, extract_first_order_constants(a, b, GRID))
    assert report.unrelaxed is None
    assert report.commutative
    assert any("vacuous" in note for note in report.notes)


def test_unrelaxed_requires_a_shared_start(section6):
    a, _, _ = section6
    a = a.with_initial_conditions([1.0])
    b = synthesize_first_order_pair(a, 2.0, -1.0).with_initial_conditions([1.0]).with_initial_time(1.0)
    with pytest.raises(SystemValidationError, match="different times"):
        check_unrelaxed(a, b, extract_first_order_constants(a, b, GRID))
    relaxed = check_unrelaxed(a.relaxed(), b.relaxed(), extract_first_order_constants(a, b, GRID))
    assert relaxed.unrelaxed is None


@pytest.mark.parametrize("t0", [0.0, 1.0, 4.0])
def test_unrelaxed_verdict_does_not_depend_on_t0(section6, t0):
    a, b, _ = section6
    good_a = a.with_initial_conditions([1.0]).with_initial_time(t0)
    good_b = synthesize_first_order_pair(a, 2.0, -1.0).with_initial_conditions([1.0]).with_initial_time(t0)
    bad_b = b.with_initial_conditions([1.0]).with_initial_time(t0)
    assert check_unrelaxed(good_a, good_b, extract_first_order_constants(good_a, good_b, GRID)).unrelaxed is True
    assert check_unrelaxed(good_a, bad_b, extract_first_order_constants(good_a, bad_b, GRID)).unrelaxed is False


@pytest.mark.parametrize(
    ("system", "expected"),
    [
        (TI2, lambda t: 4.0),
        (A2, lambda t: 0.0),
        (LTVSystem(("t", "0", "1")), lambda t: t),
        (LTVSystem(("5", "6*(t+1)", "2*(t+1)^2")), lambda t: 3.0),
    ],
)
def test_second_order_bracket(system, expected):
    bracket = second_order_bracket(system)
    for t in (0.0, 0.7, 2.5):
        assert bracket(t) == pytest.approx(expected(t), abs=1e-12)


def test_bracket_constant(chain212):
    a, _, c = chain212
    assert bracket_constant(a, GRID) == pytest.approx((0.0, 0.0), abs=1e-12)
    assert bracket_constant(c, GRID) == pytest.approx((0.0, 0.0), abs=1e-12)
    with pytest.raises(OrderError):
        second_order_bracket(LTVSystem(("1", "1")))


def test_root_coefficients():
    root, q = root_coefficients(A2)
    for t in (0.0, 1.5):
        assert root(t) == pytest.approx(t + 1.0)
        assert q(t) == pytest.approx(1.0)


def test_first_from_second():
    b = synthesize_first_from_second(TI2, 1.0, 0.0)
    assert _same(b, LTVSystem(("1", "1")))
    b = synthesize_first_from_second(A2, 1.0, 0.0)
    assert _same(b, LTVSystem(("1", "t+1")))


def test_first_from_second_errors():
    with pytest.raises(ValueError, match="k1"):
        synthesize_first_from_second(A2, 0.0, 1.0)
    with pytest.raises(ValueError, match="bracket"):
        synthesize_first_from_second(LTVSystem(("t", "0", "1")), 1.0, 0.0)
    with pytest.raises(SystemValidationError):
        synthesize_first_from_second(LTVSystem(("1", "0", "-1")), 1.0, 0.0)


def test_second_order_pair():
    assert _same(synthesize_second_order_pair(A2, 1.0, 0.0, 0.0), A2)
    assert _same(synthesize_second_order_pair(TI2, 1.0, 1.0, 0.0), LTVSystem(("6", "3", "1")))
    expected = LTVSystem(("5", "6*(t+1)", "2*(t+1)^2"))
    assert _same(synthesize_second_order_pair(A2, 2.0, 0.0, 3.0), expected)


def test_second_order_pair_bracket_only_needed_with_root_column():
    drifting = LTVSystem(("t", "0", "1"))
    partner = synthesize_second_order_pair(drifting, 2.0, 0.0, 1.0)
    assert _same(partner, LTVSystem(("2*t+1", "0", "2")))
    with pytest.raises(ValueError, match="bracket"):
        synthesize_second_order_pair(drifting, 1.0, 1.0, 0.0)
    with pytest.raises(ValueError, match="k2"):
        synthesize_second_order_pair(A2, 0.0, 1.0, 0.0)


def test_second_from_first():
    b = LTVSystem(("1", "t+1"))
    c = synthesize_second_from_first(b, 2.0, 1.0, 0.0)
    assert _same(c, LTVSystem(("0", "(t+1)/4", "(t+1)^2/4")))
    c = synthesize_second_from_first(LTVSystem(("1", "1")), 1.0, 0.0, 0.0)
    assert _same(c, LTVSystem(("1", "2", "1")))
    with pytest.raises(ValueError):
        synthesize_second_from_first(b, 0.0, 1.0, 0.0)


@pytest.mark.parametrize("c0", [0.0, 0.7, -1.25])
def test_second_from_first_bracket_is_the_free_constant(c0):
    b = LTVSystem(("2*t+5", "2*(t+1)"), domain=SECTION6_DOMAIN)
    c = synthesize_second_from_first(b, 1.5, -0.5, c0)
    value, residual = bracket_constant(c, GRID)
    assert value == pytest.approx(c0, abs=1e-10)
    assert residual < 1e-8


@pytest.mark.parametrize(
    "pair",
    [
        lambda: (TI2, synthesize_first_from_second(TI2, 1.0, 0.0)),
        lambda: (A2, synthesize_first_from_second(A2, 1.0, 0.0)),
        lambda: (A2, synthesize_first_from_second(A2, -2.0, 0.5)),
        lambda: (TI2, synthesize_second_order_pair(TI2, 1.0, 1.0, 0.0)),
        lambda: (A2, synthesize_second_order_pair(A2, 2.0, 0.0, 3.0)),
        lambda: (A2, synthesize_second_order_pair(A2, 1.0, 1.0, 0.5)),
        lambda: (LTVSystem(("1", "t+1")), synthesize_second_from_first(LTVSystem(("1", "t+1")), 2.0, 1.0, 0.0)),
        lambda: (LTVSystem(("1", "1")), synthesize_second_from_first(LTVSystem(("1", "1")), 1.0, 0.0, 0.0)),
    ],
)
def test_synthesized_pairs_have_no_defect(pair):
    x, y = pair()
    assert commutativity_defect(x, y, 0.0, make_grid(0.0, 5.0, 51)) < 1e-6


def test_extract_second_first(chain212):
    a, b, c = chain212
    report = extract_second_first_constants(a, b, GRID)
    assert report.commutative
    assert report.relation is Relation.SECOND_FIRST
    assert report.constants.as_tuple() == pytest.approx((1.0, 0.0, 0.0), abs=1e-10)
    report = extract_second_first_constants(c, b, GRID)
    assert isinstance(report.constants, MixedFreeConstants)
    assert report.constants.as_tuple() == pytest.approx((2.0, 1.0, 0.0), abs=1e-10)
    assert any("sufficient" in note for note in report.notes)


def test_extract_second_first_drifting_bracket():
    drifting = LTVSystem(("t", "0", "1"))
    report = extract_second_first_constants(drifting, LTVSystem(("0", "1")), GRID)
    assert report.verdict is Verdict.NOT_COMMUTATIVE
    assert report.bracket_residuals[drifting.label] > 1e-3


def test_extract_second_order(chain212):
    a, _, c = chain212
    report = extract_second_order_constants(a, c, GRID)
    assert report.commutative
    assert report.constants.as_tuple() == pytest.approx((0.25, -0.5, 0.25), abs=1e-10)
    assert second_order_relation_residual(a, c, SecondOrderConstants(0.25, -0.5, 0.25), GRID) < 1e-10


def test_extract_second_order_without_root_column():
    drifting = LTVSystem(("t", "0", "1"))
    partner = synthesize_second_order_pair(drifting, 2.0, 0.0, 1.0)
    report = extract_second_order_constants(drifting, partner, GRID)
    assert report.commutative
    assert report.constants.as_tuple() == pytest.approx((2.0, 0.0, 1.0), abs=1e-12)
    assert report.bracket_residuals == {}


def test_extract_second_order_requires_positive_leading():
    negative = LTVSystem(("1", "0", "-1"))
    with pytest.raises(SystemValidationError):
        extract_second_order_constants(negative, negative, GRID)


def test_dispatch(section6, chain212):
    a, b, _ = section6
    a2, b1, _ = chain212
    assert extract_pair_constants(a, b, GRID).relation is Relation.FIRST_FIRST
    assert extract_pair_constants(a2, b1, GRID).relation is Relation.SECOND_FIRST
    flipped = extract_pair_constants(b1, a2, GRID)
    assert flipped.relation is Relation.FIRST_SECOND
    assert flipped.commutative
    third = LTVSystem(("1", "3", "3", "1"))
    report = extract_pair_constants(third, LTVSystem(("1", "1")), GRID)
    assert report.verdict is Verdict.INCONCLUSIVE
    assert report.relation is Relation.NUMERICAL


def test_assess_section6(section6):
    a, b, _ = section6
    report = assess_pair(a, b, make_grid(0.0, 5.0))
    assert report.verdict is Verdict.COMMUTATIVE
    assert report.constants.as_tuple() == pytest.approx((2.0, 1.0), abs=1e-12)
    assert report.defect < 1e-6
    assert report.defect_pass
    assert all(r < report.tolerance for r in report.constancy_residuals.values())


def test_assess_non_commutative(section6):
    a, _, _ = section6
    perturbed = LTVSystem(("3*t+5", "2*(t+1)"), domain=SECTION6_DOMAIN)
    report = assess_pair(a, perturbed, make_grid(0.0, 5.0))
    assert report.verdict is Verdict.NOT_COMMUTATIVE
    assert report.defect > 1e-3


def test_assess_scalars(section6):
    a, _, _ = section6
    grid = make_grid(0.0, 5.0)
    gain = LTVSystem(("2",), domain=SECTION6_DOMAIN)
    drifting = LTVSystem(("t+1",), domain=SECTION6_DOMAIN)
    assert assess_pair(gain, drifting, grid).verdict is Verdict.COMMUTATIVE
    assert assess_pair(a, gain, grid).verdict is Verdict.COMMUTATIVE
    report = assess_pair(drifting, a, grid)
    assert report.verdict is Verdict.NOT_COMMUTATIVE
    assert report.relation is Relation.SCALAR


def test_assess_third_order_is_numerical_only():
    third = LTVSystem(("1", "3", "3", "1"))
    report = assess_pair(third, LTVSystem(("1", "1")), make_grid(0.0, 5.0, 51))
    assert report.relation is Relation.NUMERICAL
    assert report.verdict is Verdict.COMMUTATIVE


def test_assess_disagreement_is_inconclusive(section6):
    a, b, _ = section6
    fake = MagicMock(values=np.zeros(101)), MagicMock(values=np.ones(101))
    with patch("ltvcommute.commute.cascade_pair", return_value=fake):
        report = assess_pair(a, b, make_grid(0.0, 5.0))
    assert report.verdict is Verdict.INCONCLUSIVE
    assert "algebraic and numerical checks disagree" in report.notes


def test_assess_second_order_chain_pairs(chain212):
    a, b, c = chain212
    grid = make_grid(0.0, 5.0, 51)
    for x, y in ((a, b), (b, c), (a, c)):
        assert assess_pair(x, y, grid).verdict is Verdict.COMMUTATIVE
