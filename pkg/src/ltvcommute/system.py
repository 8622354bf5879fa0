# #############################################################################
# WARNING: If you modify features, API, or usage, you MUST update the
# documentation immediately.
# #############################################################################
"""
LTV system model, system files and validation.

A system is the single-input single-output equation

    a_n(t) y^(n)(t) + ... + a_1(t) y'(t) + a_0(t) y(t) = x(t)

with its initial time, initial conditions and the closed domain on which it is
defined. System files are small TOML documents::

    # section-6 system A
    name = "A"
    order = 1
    coeff.1 = "(t+1)"
    coeff.0 = "(t+2)"
    t0 = 0
    ic = [0]
    domain = [-0.5, 10]

.. note::
    If you modify features, API, or usage, you MUST update the documentation immediately.
"""

from __future__ import annotations

import logging
import os
import re
import sys
import tempfile
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - Python 3.10 fallback
    import tomli as tomllib

import numpy as np
from scipy.optimize import brentq

from ltvcommute.constants import DEFAULT_T_SPAN, LEADING_COEFF_GUARD, VALIDATION_GRID_POINTS
from ltvcommute.errors import ExprDomainError, ExprSyntaxError, SystemFileError, SystemValidationError
from ltvcommute.expr import Expr, coerce, format_number, parse

logger = logging.getLogger(__name__)

_KEYS = ("name", "order", "coeff", "t0", "ic", "domain")
_REQUIRED = ("order", "coeff", "t0", "domain")
_TOML_LINE_RE = re.compile(r"line (\d+)")


def _as_expr(value: Expr | str | float) -> Expr:
    if isinstance(value, str):
        return parse(value)
    return coerce(value)


@dataclass(frozen=True)
class LTVSystem:
    """
    A linear time-varying system.

    Attributes
    ----------
    coefficients : tuple[Expr, ...]
        ``a_0, ..., a_n`` in ascending derivative order. Strings and numbers are
        accepted on construction and converted to expressions.
    t0 : float
        Initial time.
    initial_conditions : tuple[float, ...]
        ``y(t0), ..., y^(n-1)(t0)``; ``None`` on construction means all zero.
    domain : tuple[float, float]
        Closed interval ``[lo, hi]`` containing ``t0``; ``None`` on construction
        means ``[t0, t0 + DEFAULT_T_SPAN]``.
    name : str
        Optional display name.
    """

    coefficients: tuple[Expr, ...]
    t0: float = 0.0
    initial_conditions: tuple[float, ...] | None = None
    domain: tuple[float, float] | None = None
    name: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        coefficients = tuple(_as_expr(c) for c in self.coefficients)
        if not coefficients:
            raise ValueError("A system needs at least one coefficient")
        order = len(coefficients) - 1
        ic = (0.0,) * order if self.initial_conditions is None else tuple(float(v) for v in self.initial_conditions)
        if len(ic) != order:
            raise ValueError(f"Initial conditions have length {len(ic)}, expected {order}")
        t0 = float(self.t0)
        lo, hi = (t0, t0 + DEFAULT_T_SPAN) if self.domain is None else (float(self.domain[0]), float(self.domain[1]))
        if not lo <= t0 <= hi:
            raise ValueError(f"Domain [{lo!r}, {hi!r}] must contain t0={t0!r}")
        object.__setattr__(self, "coefficients", coefficients)
        object.__setattr__(self, "initial_conditions", ic)
        object.__setattr__(self, "t0", t0)
        object.__setattr__(self, "domain", (lo, hi))

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    @property
    def leading(self) -> Expr:
        """The leading coefficient ``a_n``."""
        return self.coefficients[-1]

    @property
    def is_scalar(self) -> bool:
        return self.order == 0

    @property
    def label(self) -> str:
        return self.name or f"order-{self.order} system"

    def coefficient(self, i: int) -> Expr:
        """Return ``a_i``; raises ``IndexError`` when ``i`` exceeds the order."""
        if not 0 <= i <= self.order:
            raise IndexError(f"Coefficient index {i} outside 0..{self.order}")
        return self.coefficients[i]

    def with_initial_conditions(self, ic: Sequence[float]) -> LTVSystem:
        return replace(self, initial_conditions=tuple(ic))

    def with_initial_time(self, t0: float) -> LTVSystem:
        """Move ``t0`` within the domain, keeping the initial conditions."""
        return replace(self, t0=t0)

    def with_domain(self, lo: float, hi: float) -> LTVSystem:
        return replace(self, domain=(lo, hi))

    def restricted(self, lo: float, hi: float) -> LTVSystem:
        """The relaxed system on ``[lo, hi]`` with ``t0 = lo``."""
        return replace(self, t0=lo, domain=(lo, hi), initial_conditions=None)

    def relaxed(self) -> LTVSystem:
        """The same system with zero initial conditions."""
        return replace(self, initial_conditions=None)

    def contains(self, lo: float, hi: float) -> bool:
        """True when ``[lo, hi]`` lies within the domain."""
        dlo, dhi = self.domain
        slack = 1e-12 * max(1.0, abs(dlo), abs(dhi))
        return dlo - slack <= lo <= hi <= dhi + slack


@dataclass(frozen=True)
class FirstOrderConstants:
    """``b_1 = k1 a_1`` and ``b_0 = k1 a_0 + k0`` between two first-order systems."""

    k1: float
    k0: float

    def as_tuple(self) -> tuple[float, ...]:
        return (self.k1, self.k0)


@dataclass(frozen=True)
class SecondOrderConstants:
    """Constants relating two second-order systems through the base form of the first."""

    k2: float
    k1: float
    k0: float

    def as_tuple(self) -> tuple[float, ...]:
        return (self.k2, self.k1, self.k0)


@dataclass(frozen=True)
class MixedFreeConstants:
    """
    Constants relating a second-order system to a first-order partner.

    ``free`` is the bracket constant (A0 or C0) of the second-order member.
    """

    k1: float
    k0: float
    free: float

    def as_tuple(self) -> tuple[float, ...]:
        return (self.k1, self.k0, self.free)


PairConstants = FirstOrderConstants | SecondOrderConstants | MixedFreeConstants


@dataclass(frozen=True)
class ValidationReport:
    """
    Outcome of :func:`validate_system`.

    Attributes
    ----------
    min_abs_leading : float
        Smallest ``|a_n|`` over the finite grid samples.
    argmin : float
        Where that minimum occurs.
    violations : tuple[tuple[float, str], ...]
        ``(t, reason)`` for every failing location.
    positive_leading : bool
        Whether ``a_n`` is strictly positive on the whole grid.
    gridpoints : int
        Grid size used.
    """

    min_abs_leading: float
    argmin: float
    violations: tuple[tuple[float, str], ...]
    positive_leading: bool
    gridpoints: int

    @property
    def passed(self) -> bool:
        return not self.violations


def validate_system(s: LTVSystem, gridpoints: int = VALIDATION_GRID_POINTS) -> ValidationReport:
    """
    Check that every coefficient evaluates and ``a_n`` never vanishes on the domain.

    Zero crossings between grid samples are found by sign change and located
    with Brent's method.

    Parameters
    ----------
    s : LTVSystem
        The system to validate.
    gridpoints : int, optional
        Number of uniform samples over the domain (at least 2).

    Returns
    -------
    ValidationReport
        The report; failures are carried in ``violations``, never raised.
    """
    if gridpoints < 2:
        raise ValueError("gridpoints must be at least 2")
    lo, hi = s.domain
    grid = np.linspace(lo, hi, gridpoints) if hi > lo else np.array([lo])
    violations: list[tuple[float, str]] = []
    leading = np.full(len(grid), np.nan)
    for j, t in enumerate(grid):
        try:
            values = [c(t) for c in s.coefficients]
        except ExprDomainError as e:
            violations.append((float(t), str(e)))
            continue
        an = values[-1]
        scale = max(abs(v) for v in values)
        if an == 0.0 or abs(an) < LEADING_COEFF_GUARD * scale:
            violations.append((float(t), "leading coefficient vanishes"))
        leading[j] = an

    for j in range(len(grid) - 1):
        left, right = leading[j], leading[j + 1]
        if np.isfinite(left) and np.isfinite(right) and left * right < 0.0:
            root = brentq(s.leading.compiled, grid[j], grid[j + 1])
            violations.append((float(root), "leading coefficient changes sign"))

    finite = np.isfinite(leading)
    if finite.any():
        magnitudes = np.where(finite, np.abs(leading), np.inf)
        index = int(np.argmin(magnitudes))
        min_abs, argmin = float(magnitudes[index]), float(grid[index])
    else:
        min_abs, argmin = float("nan"), float(lo)
    positive = bool(finite.all() and np.all(leading > 0.0))
    violations.sort()
    if violations:
        logger.debug("validate_system: %s has %d violation(s), first at t=%g", s.label, len(violations), violations[0][0])
    return ValidationReport(min_abs, argmin, tuple(violations), positive, gridpoints)


def ensure_valid(s: LTVSystem, gridpoints: int = VALIDATION_GRID_POINTS) -> LTVSystem:
    """Return ``s`` unchanged, or raise :class:`SystemValidationError` with the report."""
    report = validate_system(s, gridpoints)
    if not report.passed:
        t, reason = report.violations[0]
        raise SystemValidationError(f"{s.label}: {reason} at t={t!r}", report)
    return s


# --- System files ---


def _key_line(text: str, key: str) -> int | None:
    pattern = re.compile(rf"^\s*{re.escape(key)}\s*=", re.MULTILINE)
    match = pattern.search(text)
    return text.count("\n", 0, match.start()) + 1 if match else None


def _real(value: object, key: str, line: int | None) -> float:
    if isinstance(value, bool) or not isinstance(value, int | float):
        raise SystemFileError(f"'{key}' must be a number", line)
    return float(value)


def _reals(value: object, key: str, line: int | None) -> list[float]:
    if not isinstance(value, list):
        raise SystemFileError(f"'{key}' must be a list of numbers", line)
    return [_real(v, key, line) for v in value]


def parse_system_file(text: str, name: str = "") -> LTVSystem:
    """
    Parse and validate a system file.

    Parameters
    ----------
    text : str
        File contents (TOML with the keys ``order``, ``coeff.<i>``, ``t0``,
        ``domain`` and the optional ``ic`` and ``name``).
    name : str, optional
        Display name used when the file has no ``name`` key.

    Returns
    -------
    LTVSystem
        The validated system.

    Raises
    ------
    SystemFileError
        If the file is malformed; ``line`` points at the offending key when known.
    SystemValidationError
        If the leading coefficient vanishes on the domain.
    """
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        match = _TOML_LINE_RE.search(str(e))
        raise SystemFileError(f"Failed to parse system file: {e}", int(match.group(1)) if match else None) from e

    for key in data:
        if key not in _KEYS:
            raise SystemFileError(f"Unknown key '{key}'", _key_line(text, key))
    for key in _REQUIRED:
        if key not in data:
            raise SystemFileError(f"Missing key '{key}'")

    order_line = _key_line(text, "order")
    order = data["order"]
    if isinstance(order, bool) or not isinstance(order, int) or order < 0:
        raise SystemFileError("'order' must be a non-negative integer", order_line)

    raw = data["coeff"]
    if not isinstance(raw, dict):
        raise SystemFileError("Coefficients must be given as coeff.<i> = \"<expr>\"", _key_line(text, "coeff"))
    coefficients: dict[int, Expr] = {}
    for index, source in raw.items():
        key = f"coeff.{index}"
        line = _key_line(text, key)
        if not index.isdigit():
            raise SystemFileError(f"Unknown key '{key}'", line)
        if not isinstance(source, str):
            raise SystemFileError(f"'{key}' must be a quoted expression", line)
        try:
            coefficients[int(index)] = parse(source)
        except ExprSyntaxError as e:
            raise SystemFileError(f"{key}: {e}", line) from e
    if sorted(coefficients) != list(range(order + 1)):
        raise SystemFileError(
            f"Expected coefficients coeff.0..coeff.{order} for order {order}, got {len(coefficients)}",
            _key_line(text, "coeff.0") or order_line,
        )

    t0 = _real(data["t0"], "t0", _key_line(text, "t0"))
    domain_line = _key_line(text, "domain")
    domain = _reals(data["domain"], "domain", domain_line)
    if len(domain) != 2 or domain[0] > domain[1]:
        raise SystemFileError("'domain' must be [lo, hi] with lo <= hi", domain_line)
    if not domain[0] <= t0 <= domain[1]:
        raise SystemFileError(f"t0={t0!r} lies outside the domain", _key_line(text, "t0"))

    ic: list[float] | None = None
    if "ic" in data:
        ic_line = _key_line(text, "ic")
        ic = _reals(data["ic"], "ic", ic_line)
        if len(ic) != order:
            raise SystemFileError(f"'ic' has length {len(ic)}, expected {order}", ic_line)

    label = data.get("name", name)
    if not isinstance(label, str):
        raise SystemFileError("'name' must be a quoted string", _key_line(text, "name"))

    system = LTVSystem(
        tuple(coefficients[i] for i in range(order + 1)),
        t0=t0,
        initial_conditions=ic,
        domain=(domain[0], domain[1]),
        name=label,
    )
    return ensure_valid(system)


def _toml_string(value: str) -> str:
    escaped = value.replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'


def format_system_file(system: LTVSystem) -> str:
    """Render ``system`` in the system-file format; the inverse of :func:`parse_system_file`."""
    lines = []
    if system.name:
        lines.append(f"name = {_toml_string(system.name)}")
    lines.append(f"order = {system.order}")
    for i in range(system.order, -1, -1):
        lines.append(f"coeff.{i} = {_toml_string(str(system.coefficient(i)))}")
    lines.append(f"t0 = {system.t0!r}")
    lines.append("ic = [" + ", ".join(repr(v) for v in system.initial_conditions) + "]")
    lo, hi = system.domain
    lines.append(f"domain = [{lo!r}, {hi!r}]")
    return "\n".join(lines) + "\n"


def load_system(path: str | Path) -> LTVSystem:
    """Read and validate a system file; the name defaults to the file stem."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    return parse_system_file(text, name=path.stem)


def write_text_atomic(path: str | Path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file in the same directory."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except OSError as e:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise RuntimeError(f"Failed to write {path}: {e}") from e


def write_system(system: LTVSystem, path: str | Path) -> None:
    """Atomically write ``system`` to ``path``."""
    write_text_atomic(path, format_system_file(system))


def describe(system: LTVSystem) -> str:
    """One-line summary, highest derivative first."""
    terms = ", ".join(f"a{i}={system.coefficient(i)}" for i in range(system.order, -1, -1))
    return f"{system.label}: order {system.order} [{terms}] t0={format_number(system.t0)}"
