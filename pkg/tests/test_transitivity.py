# #############################################################################
# WARNING: If you modify features, API, or usage, you MUST update the
# documentation immediately.
# #############################################################################
"""
Tests for chain composition and transitivity verification.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from ltvcommute.cascade import make_grid, simulate_cascade_with_ics
from ltvcommute.commute import (
    Relation,
    synthesize_first_from_second,
    synthesize_first_order_pair,
    synthesize_second_order_pair,
)
from ltvcommute.constants import TRIPLET_NOTE
from ltvcommute.expr import T, sin
from ltvcommute.system import FirstOrderConstants, LTVSystem, MixedFreeConstants, SecondOrderConstants
from ltvcommute.transitivity import (
    ChainMode,
    compose_first_order_constants,
    compose_mixed_constants,
    compose_second_order_constants,
    invert_first_order_constants,
    root_constants,
    unrelaxed_closure,
    verify_chain,
)

GRID = make_grid(0.0, 5.0, 51)


def test_compose_first_order():
    assert compose_first_order_constants(2.0, 1.0, -0.5, 3.5) == (-1.0, 3.0)
    assert compose_first_order_constants(1.0, 0.0, 3.0, 2.0) == (3.0, 2.0)
    assert invert_first_order_constants(2.0, 1.0) == (0.5, -0.5)
    with pytest.raises(ValueError):
        invert_first_order_constants(0.0, 1.0)


def test_compose_first_order_with_inverse_is_identity():
    back = invert_first_order_constants(-1.5, 0.75)
    assert compose_first_order_constants(-1.5, 0.75, *back) == pytest.approx((1.0, 0.0))


def test_compose_mixed():
    assert compose_mixed_constants(1.0, 0.0, 0.0, 2.0, 1.0, 0.0) == pytest.approx((0.25, -0.5, 0.25))
    assert compose_mixed_constants(1.0, 1.0, 0.0, 1.0, 0.0, 0.0) == pytest.approx((1.0, 2.0, 1.0))
    assert compose_mixed_constants(1.0, 0.0, 2.0, 1.0, 0.0, 2.0) == pytest.approx((1.0, 0.0, 0.0))


def test_root_constants():
    assert root_constants(4.0, 2.0) == (2.0, 0.5)
    with pytest.raises(ValueError):
        root_constants(0.0, 1.0)
    with pytest.raises(ValueError):
        root_constants(-1.0, 1.0)


def test_compose_second_order():
    assert compose_second_order_constants((1.0, 0.0, 0.0), (3.0, 2.0, 1.0)) == pytest.approx((3.0, 2.0, 1.0))
    assert compose_second_order_constants((4.0, 2.0, 1.0), (0.25, 1.0, 0.0)) == pytest.approx((1.0, 2.5, 0.75))


def test_unrelaxed_closure():
    assert unrelaxed_closure(2.0, -1.0, 3.0, -2.0) == pytest.approx(0.0, abs=1e-15)
    assert unrelaxed_closure(2.0, 1.0, -0.5, 3.5) == pytest.approx(1.0)


def test_section6_chain(section6):
    a, b, c = section6
    chain = verify_chain(a, b, c, GRID)
    assert chain.orders == (1, 1, 1)
    assert chain.mode is ChainMode.ALGEBRAIC
    assert chain.transitive
    assert chain.constants_match
    assert chain.predicted.as_tuple() == pytest.approx((-1.0, 3.0), abs=1e-12)
    assert chain.extracted.as_tuple() == pytest.approx((-1.0, 3.0), abs=1e-10)
    assert TRIPLET_NOTE in chain.notes
    assert chain.unrelaxed is None


def test_broken_chain(section6):
    a, _, c = section6
    perturbed = LTVSystem(("3*t+5", "2*(t+1)"), domain=a.domain, name="B'")
    chain = verify_chain(a, perturbed, c, GRID)
    assert not chain.transitive
    assert chain.predicted is None
    assert chain.constants_match is None
    assert TRIPLET_NOTE not in chain.notes


def test_reversed_chain_is_transitive(section6, chain212):
    a, b, c = section6
    chain = verify_chain(c, b, a, GRID)
    assert chain.transitive
    assert chain.predicted.as_tuple() == pytest.approx(invert_first_order_constants(-1.0, 3.0), abs=1e-10)
    a2, b1, c2 = chain212
    assert verify_chain(c2, b1, a2, GRID).transitive


def test_chain_212(chain212):
    a, b, c = chain212
    chain = verify_chain(a, b, c, GRID)
    assert chain.mode is ChainMode.ALGEBRAIC
    assert chain.transitive
    assert isinstance(chain.predicted, SecondOrderConstants)
    assert chain.predicted.as_tuple() == pytest.approx((0.25, -0.5, 0.25), abs=1e-10)
    assert chain.extracted.as_tuple() == pytest.approx((0.25, -0.5, 0.25), abs=1e-10)
    assert chain.ab.relation is Relation.SECOND_FIRST
    assert chain.bc.relation is Relation.FIRST_SECOND


def test_chain_211(chain212):
    a, b, _ = chain212
    c = synthesize_first_order_pair(b, 3.0, -1.0, name="C1")
    chain = verify_chain(a, b, c, GRID)
    assert chain.transitive
    assert isinstance(chain.predicted, MixedFreeConstants)
    assert chain.predicted.as_tuple() == pytest.approx((3.0, -1.0, 0.0), abs=1e-10)


def test_chain_112(chain212):
    _, b, c = chain212
    a = synthesize_first_order_pair(b, 0.5, 0.25, name="A1")
    chain = verify_chain(a, b, c, GRID)
    assert chain.transitive
    assert chain.ac.relation is Relation.FIRST_SECOND
    assert chain.predicted.as_tuple() == pytest.approx(chain.extracted.as_tuple(), abs=1e-8)


def test_chain_121(chain212):
    a2, b1, _ = chain212
    c = synthesize_first_from_second(a2, 2.0, 1.0, name="C1")
    chain = verify_chain(b1, a2, c, GRID)
    assert chain.transitive
    assert isinstance(chain.predicted, FirstOrderConstants)
    assert chain.predicted.as_tuple() == pytest.approx((2.0, 1.0), abs=1e-10)


def test_chain_221(chain212):
    a2, _, _ = chain212
    b = synthesize_second_order_pair(a2, 4.0, 2.0, 1.0, name="B2")
    c = synthesize_first_from_second(b, 1.0, -0.5, name="C1")
    chain = verify_chain(a2, b, c, GRID)
    assert chain.transitive
    assert chain.predicted.as_tuple() == pytest.approx(chain.extracted.as_tuple(), abs=1e-8)


def test_chain_122(chain212):
    a2, _, _ = chain212
    a = synthesize_first_from_second(a2, 2.0, 1.0, name="A1")
    c = synthesize_second_order_pair(a2, 4.0, 2.0, 1.0, name="C2")
    chain = verify_chain(a, a2, c, GRID)
    assert chain.transitive
    assert chain.predicted.as_tuple() == pytest.approx((1.0, 0.5, chain.extracted.free), abs=1e-8)


def test_chain_222_is_flagged_unproven(chain212):
    a2, _, _ = chain212
    b = synthesize_second_order_pair(a2, 4.0, 2.0, 1.0, name="B2")
    c = synthesize_second_order_pair(b, 0.25, 1.0, 0.0, name="C2")
    chain = verify_chain(a2, b, c, GRID)
    assert chain.mode is ChainMode.UNPROVEN
    assert chain.transitive
    assert chain.predicted.as_tuple() == pytest.approx((1.0, 2.5, 0.75), abs=1e-8)
    assert any("2-2-2" in note for note in chain.notes)


def test_third_order_chain_is_numerical_only():
    a = LTVSystem(("1", "3", "3", "1"), name="A3")
    b = LTVSystem(("1", "1"), name="B")
    c = LTVSystem(("2", "3"), name="C")
    chain = verify_chain(a, b, c, GRID)
    assert chain.mode is ChainMode.NUMERICAL_ONLY
    assert chain.predicted is None
    assert chain.constants_match is None
    assert chain.transitive
    assert any("defects only" in note for note in chain.notes)


def _random_first_order(rng: np.random.Generator) -> LTVSystem:
    c, d = rng.uniform(1.0, 3.0), rng.uniform(0.0, 0.5)
    p, q = rng.uniform(-2.0, 2.0), rng.uniform(-1.0, 1.0)
    return LTVSystem((p + q * T, c + d * c * sin(T)), domain=(0.0, 1.0))


def _random_constants(rng: np.random.Generator) -> tuple[float, float]:
    return rng.uniform(0.5, 3.0) * rng.choice([-1.0, 1.0]), rng.uniform(-3.0, 3.0)


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(4))
def test_random_first_order_chains(seed):
    """100 random chains: every one transitive, composed constants equal extracted ones."""
    rng = np.random.default_rng(1000 + seed)
    grid = make_grid(0.0, 1.0, 21)
    for _ in range(25):
        a = _random_first_order(rng)
        k, ell = _random_constants(rng), _random_constants(rng)
        b = synthesize_first_order_pair(a, *k)
        c = synthesize_first_order_pair(b, *ell)
        chain = verify_chain(a, b, c, grid)
        assert chain.transitive
        assert chain.predicted.as_tuple() == pytest.approx(compose_first_order_constants(*k, *ell), abs=1e-9)
        assert chain.extracted.as_tuple() == pytest.approx(chain.predicted.as_tuple(), abs=1e-9)


def _unrelaxed_chain(section6):
    a, _, _ = section6
    a = a.with_initial_conditions([1.0])
    b = synthesize_first_order_pair(a, 2.0, -1.0, name="B").with_initial_conditions([1.0])
    c = synthesize_first_order_pair(b, 3.0, -2.0, name="C").with_initial_conditions([1.0])
    return a, b, c


def test_unrelaxed_chain(section6):
    a, b, c = _unrelaxed_chain(section6)
    chain = verify_chain(a, b, c, GRID)
    assert chain.transitive
    assert chain.unrelaxed is True
    assert chain.closure_residual == pytest.approx(0.0, abs=1e-12)
    assert chain.predicted.as_tuple() == pytest.approx((6.0, -5.0))


def test_unrelaxed_chain_simulation(section6):
    """Nonzero initial state: AC and CA agree for a non-trivial input."""
    a, _, c = _unrelaxed_chain(section6)
    grid = np.linspace(0.0, 2.0, 41)
    ac = simulate_cascade_with_ics(a, c, math.sin, grid).sample(grid)
    ca = simulate_cascade_with_ics(c, a, math.sin, grid).sample(grid)
    assert np.max(np.abs(ac - ca)) < 1e-6


def test_unrelaxed_chain_not_reported_when_premise_fails(section6):
    a, b, c = section6
    ics = [1.0]
    chain = verify_chain(a.with_initial_conditions(ics), b.with_initial_conditions(ics), c.with_initial_conditions(ics), GRID)
    assert chain.transitive
    assert chain.unrelaxed is None
    assert chain.closure_residual is None
