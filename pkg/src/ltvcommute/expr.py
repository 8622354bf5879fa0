# #############################################################################
# WARNING: If you modify features, API, or usage, you MUST update the
# documentation immediately.
# #############################################################################
"""
Time-varying coefficient expressions.

Expressions are immutable trees in the single variable ``t``. They can be parsed
from text, pretty-printed back to text that re-parses, evaluated (through a
closure compiled once per node) and differentiated symbolically.

Grammar::

    expr     := term (("+" | "-") term)*
    term     := factor (("*" | "/") factor)*
    factor   := atom ("^" exponent)?
    exponent := number | "-" number | "(" ["-" | "+"] number ")"
    atom     := number | "t" | "(" expr ")" | func "(" expr ")" | "-" atom
    func     := "exp" | "ln" | "sqrt" | "sin" | "cos"

.. note::
    If you modify features, API, or usage, you MUST update the documentation immediately.
"""

from __future__ import annotations

import math
import re
from collections.abc import Callable, Iterable
from dataclasses import dataclass
from functools import cached_property, singledispatch
from typing import ClassVar

import numpy as np

from ltvcommute.errors import (
    ExprDomainError,
    ExprSyntaxError,
    NonConstantExponentError,
    UnknownIdentifierError,
)

Evaluator = Callable[[float], float]

FUNCTIONS: tuple[str, ...] = ("exp", "ln", "sqrt", "sin", "cos")
VARIABLE = "t"


class Expr:
    """
    Base class of all expression nodes.

    Nodes are frozen dataclasses; arithmetic operators build new trees with
    trivial constant folding. Two expressions are considered equal only when
    they evaluate equal on a grid; ``==`` is structural and used in tests only.
    """

    precedence: ClassVar[int] = 5

    @property
    def children(self) -> tuple[Expr, ...]:
        return ()

    @cached_property
    def compiled(self) -> Evaluator:
        """Closure evaluating the expression at a float ``t``."""
        return _compile(self)

    def evaluate(self, t: float) -> float:
        """
        Evaluate the expression at time ``t``.

        Parameters
        ----------
        t : float
            The time value.

        Returns
        -------
        float
            The IEEE double result.

        Raises
        ------
        ExprDomainError
            If a division by zero, a logarithm of a non-positive number, a square
            root of a negative number or an overflow occurs.
        """
        return self.compiled(float(t))

    def __call__(self, t: float) -> float:
        return self.compiled(float(t))

    def evaluate_many(self, ts: Iterable[float]) -> np.ndarray:
        """Evaluate at every point of ``ts`` and return a float array."""
        f = self.compiled
        return np.array([f(float(t)) for t in ts], dtype=float)

    def derivative(self) -> Expr:
        """Return d/dt of this expression."""
        return differentiate(self)

    def is_constant(self) -> bool:
        """True when the tree does not reference ``t``."""
        return all(child.is_constant() for child in self.children)

    @staticmethod
    def constant(value: float) -> Expr:
        return Const(float(value))

    @staticmethod
    def variable() -> Expr:
        return T

    # Arithmetic builders
    def __add__(self, other: Expr | float) -> Expr:
        return add(self, coerce(other))

    def __radd__(self, other: Expr | float) -> Expr:
        return add(coerce(other), self)

    def __sub__(self, other: Expr | float) -> Expr:
        return sub(self, coerce(other))

    def __rsub__(self, other: Expr | float) -> Expr:
        return sub(coerce(other), self)

    def __mul__(self, other: Expr | float) -> Expr:
        return mul(self, coerce(other))

    def __rmul__(self, other: Expr | float) -> Expr:
        return mul(coerce(other), self)

    def __truediv__(self, other: Expr | float) -> Expr:
        return div(self, coerce(other))

    def __rtruediv__(self, other: Expr | float) -> Expr:
        return div(coerce(other), self)

    def __pow__(self, exponent: float) -> Expr:
        if isinstance(exponent, Const):
            exponent = exponent.value
        if not isinstance(exponent, int | float):
            raise TypeError("Exponents must be constant numbers")
        return power(self, float(exponent))

    def __neg__(self) -> Expr:
        return neg(self)

    def _wrap(self, child: Expr, threshold: int) -> str:
        text = str(child)
        return f"({text})" if child.precedence < threshold else text


@dataclass(frozen=True)
class Const(Expr):
    """A real constant."""

    value: float

    @property
    def precedence(self) -> int:  # type: ignore[override]
        return 3 if self.value < 0 else 5

    def __str__(self) -> str:
        return format_number(self.value)


@dataclass(frozen=True)
class Var(Expr):
    """The time variable ``t``."""

    def is_constant(self) -> bool:
        return False

    def __str__(self) -> str:
        return VARIABLE


@dataclass(frozen=True)
class Neg(Expr):
    """Unary negation."""

    operand: Expr
    precedence: ClassVar[int] = 3

    @property
    def children(self) -> tuple[Expr, ...]:
        return (self.operand,)

    def __str__(self) -> str:
        # the grammar only allows an atom after unary minus
        return f"-{self._wrap(self.operand, 5)}"


@dataclass(frozen=True)
class BinOp(Expr):
    """A binary arithmetic node."""

    left: Expr
    right: Expr
    symbol: ClassVar[str] = "?"

    @property
    def children(self) -> tuple[Expr, ...]:
        return (self.left, self.right)

    def __str__(self) -> str:
        left = self._wrap(self.left, self.precedence)
        right = self._wrap(self.right, self.precedence + 1)
        return f"{left} {self.symbol} {right}"


class Add(BinOp):
    symbol = "+"
    precedence = 1


class Sub(BinOp):
    symbol = "-"
    precedence = 1


class Mul(BinOp):
    symbol = "*"
    precedence = 2


class Div(BinOp):
    symbol = "/"
    precedence = 2


@dataclass(frozen=True)
class Pow(Expr):
    """A power with a constant exponent."""

    base: Expr
    exponent: float
    precedence: ClassVar[int] = 4

    @property
    def children(self) -> tuple[Expr, ...]:
        return (self.base,)

    def __str__(self) -> str:
        return f"{self._wrap(self.base, 5)}^{format_number(self.exponent)}"


@dataclass(frozen=True)
class Func(Expr):
    """An elementary function applied to a subexpression."""

    name: str
    arg: Expr

    @property
    def children(self) -> tuple[Expr, ...]:
        return (self.arg,)

    def __str__(self) -> str:
        return f"{self.name}({self.arg})"


ZERO = Const(0.0)
ONE = Const(1.0)
T = Var()


def format_number(value: float) -> str:
    """Shortest text that parses back to exactly ``value``."""
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def coerce(value: Expr | float) -> Expr:
    """Wrap plain numbers as :class:`Const`."""
    if isinstance(value, Expr):
        return value
    if isinstance(value, int | float):
        return Const(float(value))
    raise TypeError(f"Cannot use {type(value).__name__} in an expression")


# --- Folding constructors ---


def _value(e: Expr) -> float | None:
    return e.value if isinstance(e, Const) else None


def _folded(op: Callable[[], float], fallback: Expr) -> Expr:
    try:
        result = op()
    except (ArithmeticError, ValueError, ExprDomainError):
        return fallback
    if isinstance(result, complex) or not math.isfinite(result):
        return fallback
    return Const(float(result))


def add(a: Expr, b: Expr) -> Expr:
    va, vb = _value(a), _value(b)
    if va is not None and vb is not None:
        return Const(va + vb)
    if va == 0.0:
        return b
    if vb == 0.0:
        return a
    return Add(a, b)


def sub(a: Expr, b: Expr) -> Expr:
    va, vb = _value(a), _value(b)
    if va is not None and vb is not None:
        return Const(va - vb)
    if vb == 0.0:
        return a
    if va == 0.0:
        return neg(b)
    return Sub(a, b)


def mul(a: Expr, b: Expr) -> Expr:
    va, vb = _value(a), _value(b)
    if va is not None and vb is not None:
        return Const(va * vb)
    if va == 0.0 or vb == 0.0:
        return ZERO
    if va == 1.0:
        return b
    if vb == 1.0:
        return a
    if va == -1.0:
        return neg(b)
    if vb == -1.0:
        return neg(a)
    return Mul(a, b)


def div(a: Expr, b: Expr) -> Expr:
    va, vb = _value(a), _value(b)
    if vb is not None and vb != 0.0:
        if va is not None:
            return Const(va / vb)
        if vb == 1.0:
            return a
    return Div(a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.operand
    return Neg(a)


def power(a: Expr, exponent: float) -> Expr:
    if exponent == 0.0:
        return ONE
    if exponent == 1.0:
        return a
    node = Pow(a, exponent)
    if isinstance(a, Const):
        return _folded(lambda: a.value**exponent, node)
    return node


def func(name: str, a: Expr) -> Expr:
    if name not in FUNCTIONS:
        raise ValueError(f"Unknown function '{name}'")
    node = Func(name, a)
    if isinstance(a, Const):
        return _folded(lambda: _evaluate_function(name, a.value, node), node)
    return node


def exp(a: Expr) -> Expr:
    return func("exp", a)


def ln(a: Expr) -> Expr:
    return func("ln", a)


def sqrt(a: Expr) -> Expr:
    return func("sqrt", a)


def sin(a: Expr) -> Expr:
    return func("sin", a)


def cos(a: Expr) -> Expr:
    return func("cos", a)


# --- Evaluation ---


def _evaluate_function(name: str, x: float, node: Expr, t: float = math.nan) -> float:
    if name == "exp":
        try:
            return math.exp(x)
        except OverflowError:
            raise ExprDomainError("Overflow", str(node), t) from None
    if name == "ln":
        if x <= 0.0:
            raise ExprDomainError("Logarithm of non-positive value", str(node), t)
        return math.log(x)
    if name == "sqrt":
        if x < 0.0:
            raise ExprDomainError("Square root of negative value", str(node), t)
        return math.sqrt(x)
    if name == "sin":
        return math.sin(x)
    return math.cos(x)


@singledispatch
def _compile(node: Expr) -> Evaluator:
    raise TypeError(f"Cannot compile a {type(node).__name__}")


@_compile.register(Const)
def _(node: Const) -> Evaluator:
    value = node.value
    return lambda t: value


@_compile.register(Var)
def _(node: Var) -> Evaluator:
    return lambda t: t


@_compile.register(Neg)
def _(node: Neg) -> Evaluator:
    f = node.operand.compiled
    return lambda t: -f(t)


@_compile.register(Add)
def _(node: Add) -> Evaluator:
    f, g = node.left.compiled, node.right.compiled
    return lambda t: f(t) + g(t)


@_compile.register(Sub)
def _(node: Sub) -> Evaluator:
    f, g = node.left.compiled, node.right.compiled
    return lambda t: f(t) - g(t)


@_compile.register(Mul)
def _(node: Mul) -> Evaluator:
    f, g = node.left.compiled, node.right.compiled
    return lambda t: f(t) * g(t)


@_compile.register(Div)
def _(node: Div) -> Evaluator:
    f, g = node.left.compiled, node.right.compiled

    def evaluate(t: float) -> float:
        denominator = g(t)
        if denominator == 0.0:
            raise ExprDomainError("Division by zero", str(node), t)
        return f(t) / denominator

    return evaluate


@_compile.register(Pow)
def _(node: Pow) -> Evaluator:
    f = node.base.compiled
    n = node.exponent
    fractional = not n.is_integer()

    def evaluate(t: float) -> float:
        b = f(t)
        if b < 0.0 and fractional:
            raise ExprDomainError("Fractional power of negative value", str(node), t)
        if b == 0.0 and n < 0.0:
            raise ExprDomainError("Division by zero", str(node), t)
        try:
            return b**n
        except OverflowError:
            raise ExprDomainError("Overflow", str(node), t) from None

    return evaluate


@_compile.register(Func)
def _(node: Func) -> Evaluator:
    f = node.arg.compiled
    name = node.name
    return lambda t: _evaluate_function(name, f(t), node, t)


# --- Differentiation ---


@singledispatch
def differentiate(expr: Expr) -> Expr:
    """
    Differentiate an expression with respect to ``t``.

    Parameters
    ----------
    expr : Expr
        The expression to differentiate.

    Returns
    -------
    Expr
        The exact symbolic derivative, with trivial constants folded.
    """
    raise NotImplementedError(f"Cannot differentiate a {type(expr).__name__}")


@differentiate.register(Const)
def _(expr: Const) -> Expr:
    return ZERO


@differentiate.register(Var)
def _(expr: Var) -> Expr:
    return ONE


@differentiate.register(Neg)
def _(expr: Neg) -> Expr:
    return neg(differentiate(expr.operand))


@differentiate.register(Add)
def _(expr: Add) -> Expr:
    return add(differentiate(expr.left), differentiate(expr.right))


@differentiate.register(Sub)
def _(expr: Sub) -> Expr:
    return sub(differentiate(expr.left), differentiate(expr.right))


@differentiate.register(Mul)
def _(expr: Mul) -> Expr:
    """Product rule."""
    u, v = expr.left, expr.right
    return add(mul(differentiate(u), v), mul(u, differentiate(v)))


@differentiate.register(Div)
def _(expr: Div) -> Expr:
    """Quotient rule."""
    u, v = expr.left, expr.right
    numerator = sub(mul(differentiate(u), v), mul(u, differentiate(v)))
    return div(numerator, power(v, 2.0))


@differentiate.register(Pow)
def _(expr: Pow) -> Expr:
    """Power rule; the exponent is always constant."""
    n = expr.exponent
    return mul(mul(Const(n), power(expr.base, n - 1.0)), differentiate(expr.base))


@differentiate.register(Func)
def _(expr: Func) -> Expr:
    u = expr.arg
    du = differentiate(u)
    if expr.name == "exp":
        return mul(expr, du)
    if expr.name == "ln":
        return div(du, u)
    if expr.name == "sqrt":
        return div(du, mul(Const(2.0), expr))
    if expr.name == "sin":
        return mul(cos(u), du)
    return neg(mul(sin(u), du))


# --- Parsing ---

_TOKEN_RE = re.compile(
    r"(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
    r"|(?P<space>\s+)"
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    offset: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    byte_offset = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            raise ExprSyntaxError(f"Unexpected character {text[pos]!r}", byte_offset)
        kind = match.lastgroup or ""
        if kind != "space":
            tokens.append(_Token(kind, match.group(), byte_offset))
        byte_offset += len(match.group().encode("utf-8"))
        pos = match.end()
    tokens.append(_Token("end", "", byte_offset))
    return tokens


class _Parser:
    """Recursive-descent parser over the token list."""

    def __init__(self, text: str) -> None:
        self.tokens = _tokenize(text)
        self.index = 0

    @property
    def current(self) -> _Token:
        return self.tokens[self.index]

    def advance(self) -> _Token:
        token = self.tokens[self.index]
        self.index += 1
        return token

    def accept(self, op: str) -> bool:
        if self.current.kind == "op" and self.current.text == op:
            self.index += 1
            return True
        return False

    def expect(self, op: str) -> None:
        if not self.accept(op):
            found = self.current.text or "end of input"
            raise ExprSyntaxError(f"Expected '{op}' but found '{found}'", self.current.offset)

    def parse(self) -> Expr:
        if self.current.kind == "end":
            raise ExprSyntaxError("Empty expression", self.current.offset)
        node = self.expr()
        if self.current.kind != "end":
            raise ExprSyntaxError(f"Unexpected token '{self.current.text}'", self.current.offset)
        return node

    def expr(self) -> Expr:
        node = self.term()
        while True:
            if self.accept("+"):
                node = Add(node, self.term())
            elif self.accept("-"):
                node = Sub(node, self.term())
            else:
                return node

    def term(self) -> Expr:
        node = self.factor()
        while True:
            if self.accept("*"):
                node = Mul(node, self.factor())
            elif self.accept("/"):
                node = Div(node, self.factor())
            else:
                return node

    def factor(self) -> Expr:
        node = self.atom()
        caret = self.current
        if self.accept("^"):
            node = Pow(node, self.exponent(caret.offset))
        return node

    def exponent(self, caret_offset: int) -> float:
        parenthesized = self.accept("(")
        sign = 1.0
        if self.accept("-"):
            sign = -1.0
        elif parenthesized:
            self.accept("+")
        token = self.current
        if token.kind != "number":
            raise NonConstantExponentError(caret_offset)
        self.advance()
        if parenthesized and not self.accept(")"):
            raise NonConstantExponentError(caret_offset)
        return sign * float(token.text)

    def atom(self) -> Expr:
        token = self.current
        if token.kind == "number":
            self.advance()
            return Const(float(token.text))
        if token.kind == "name":
            self.advance()
            if token.text == VARIABLE:
                return Var()
            if token.text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Func(token.text, arg)
            raise UnknownIdentifierError(token.text, token.offset)
        if self.accept("("):
            node = self.expr()
            self.expect(")")
            return node
        if self.accept("-"):
            return Neg(self.atom())
        found = token.text or "end of input"
        raise ExprSyntaxError(f"Unexpected '{found}'", token.offset)


def parse(text: str) -> Expr:
    """
    Parse an expression in ``t``.

    Parameters
    ----------
    text : str
        The expression text, e.g. ``"(t+1)^2"``.

    Returns
    -------
    Expr
        The expression tree, unfolded (as written).

    Raises
    ------
    ExprSyntaxError
        On malformed input; ``offset`` is a byte offset into the UTF-8 text.
    UnknownIdentifierError
        On names other than ``t`` and the supported functions.
    NonConstantExponentError
        When ``^`` is followed by anything but a number.
    """
    return _Parser(text).parse()
