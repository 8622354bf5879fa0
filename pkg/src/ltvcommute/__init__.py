# .. note:: warning: "If you modify features, API, or usage, you MUST update the documentation immediately."
"""
ltvcommute package.

.. note::
    If you modify features, API, or usage, you MUST update the documentation immediately.
"""

from .cascade import cascade_impulse, cascade_pair, commutativity_defect, conditional_transitivity, delta_integral
from .commute import CommutativityReport, Verdict, assess_pair, extract_pair_constants
from .errors import LTVError
from .expr import Expr, differentiate, parse
from .impulse import ImpulseResponse, impulse_response, scalar_impulse
from .system import LTVSystem, load_system, parse_system_file, validate_system, write_system
from .transitivity import ChainReport, verify_chain

__version__ = "0.1.0"

__all__ = [
    "ChainReport",
    "CommutativityReport",
    "Expr",
    "ImpulseResponse",
    "LTVError",
    "LTVSystem",
    "Verdict",
    "assess_pair",
    "cascade_impulse",
    "cascade_pair",
    "commutativity_defect",
    "conditional_transitivity",
    "delta_integral",
    "differentiate",
    "extract_pair_constants",
    "impulse_response",
    "load_system",
    "parse",
    "parse_system_file",
    "scalar_impulse",
    "validate_system",
    "verify_chain",
    "write_system",
]
