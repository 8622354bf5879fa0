# #############################################################################
# WARNING: If you modify features, API, or usage, you MUST update the
# documentation immediately.
# #############################################################################
"""
Constants for ltvcommute.

.. note::
    If you modify features, API, or usage, you MUST update the documentation immediately.
"""

from __future__ import annotations

# --- Numerical Defaults ---
DEFAULT_SOLVER_TOL = 1e-9
"""Mixed absolute/relative tolerance for the Runge-Kutta solver and quadrature."""
DEFAULT_CONSTANCY_TOL = 1e-8
"""Relative tolerance when testing whether a grid quantity is constant."""
DEFAULT_DEFECT_TOL = 1e-6
"""Tolerance on the commutativity defect max|h_AB - h_BA|."""
DEFAULT_GRID_POINTS = 101
"""Uniform evaluation grid size for defects and constancy checks."""
DEFAULT_T_SPAN = 5.0
"""Default length of the evaluation window [t0, t0 + span]."""
VALIDATION_GRID_POINTS = 1000
"""Grid size used when validating that the leading coefficient never vanishes."""
LEADING_COEFF_GUARD = 1e-12
"""A leading coefficient below this fraction of the local coefficient scale is treated as zero."""
LEADING_SCAN_POINTS = 257
"""Samples of the leading coefficient checked before an ODE solve."""
QUAD_MAX_DEPTH = 50
"""Maximum bisection depth for adaptive Simpson quadrature."""
RK_SAFETY = 0.9
RK_MIN_FACTOR = 0.2
RK_MAX_FACTOR = 5.0
RK_MAX_STEPS = 200_000
DIFF_STEP = 1e-5
"""Central-difference step used when cross-checking symbolic derivatives."""

# --- Method Tags ---
METHOD_ODE = "ode"
METHOD_CLOSED_FORM = "closed-form"
METHOD_QUADRATURE = "quadrature"
METHOD_SCALAR = "scalar"
INTERPOLATION_HERMITE = "cubic-hermite"

# --- Scalar Cascade Ordering ---
SCALAR_FIRST = "scalar-first"
SCALAR_SECOND = "scalar-second"

# --- Output Formatting ---
REPORT_DIGITS = 9
"""Significant digits for human-readable reports."""
CSV_DIGITS = 17
"""Significant digits for CSV output (regression baselines)."""
IMPULSE_CSV_HEADER: list[str] = ["tau", "t", "h"]
CASCADE_CSV_HEADER: list[str] = ["t0", "t", "h_ab", "h_ba", "defect"]

# --- Environment Variables ---
ENV_TOL = "LTV_TOL"
ENV_SOLVER_TOL = "LTV_SOLVER_TOL"
ENV_GRID = "LTV_GRID"

# --- Exit Codes ---
EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_USAGE = 2

# --- Report Labels ---
ICON_PASS = "✅"
ICON_FAIL = "❌"
ICON_UNKNOWN = "❓"
TRIPLET_NOTE = (
    "When (A,B), (B,C) and (A,C) all commute, the six cascades ABC, ACB, BAC, BCA, CAB and CBA "
    "have identical input-output behaviour."
)
"""Note appended to transitive chain reports."""
