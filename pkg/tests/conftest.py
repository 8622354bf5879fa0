# #############################################################################
# WARNING: If you modify features, API, or usage, you MUST update the
# documentation immediately.
# #############################################################################
from __future__ import annotations

import numpy as np
import pytest

from ltvcommute.demo import section6_systems
from ltvcommute.system import LTVSystem

SECOND_ORDER_DOMAIN = (0.0, 10.0)


def second_order_chain(t0: float = 0.0) -> tuple[LTVSystem, LTVSystem, LTVSystem]:
    """
    The 2-1-2 chain ``A = (t+1)^2 y'' + 3(t+1) y' + y``, ``B = (t+1) y' + y`` and
    ``C = (t+1)^2/4 y'' + (t+1)/4 y'``.
    """
    a = LTVSystem(("1", "3*(t+1)", "(t+1)^2"), t0=t0, domain=SECOND_ORDER_DOMAIN, name="A2")
    b = LTVSystem(("1", "(t+1)"), t0=t0, domain=SECOND_ORDER_DOMAIN, name="B1")
    c = LTVSystem(("0", "(t+1)/4", "(t+1)^2/4"), t0=t0, domain=SECOND_ORDER_DOMAIN, name="C2")
    return a, b, c


SECTION6_TEXT = {
    "A": """# section-6 system A
name = "A"
order = 1
coeff.1 = "(t+1)"
coeff.0 = "(t+2)"
t0 = 0
ic = [0]
domain = [-0.5, 10]
""",
    "B": """name = "B"
order = 1
coeff.1 = "2*(t+1)"
coeff.0 = "2*t+5"
t0 = 0
domain = [-0.5, 10]
""",
    "C": """name = "C"
order = 1
coeff.1 = "-(t+1)"
coeff.0 = "-t+1"
t0 = 0
domain = [-0.5, 10]
""",
}


@pytest.fixture
def section6() -> tuple[LTVSystem, LTVSystem, LTVSystem]:
    return section6_systems()


@pytest.fixture
def chain212() -> tuple[LTVSystem, LTVSystem, LTVSystem]:
    return second_order_chain()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240607)


@pytest.fixture
def system_files(tmp_path):
    """The section-6 systems written as files; returns a dict name -> path."""
    paths = {}
    for name, text in SECTION6_TEXT.items():
        path = tmp_path / f"{name}.sys"
        path.write_text(text, encoding="utf-8")
        paths[name] = path
    return paths
