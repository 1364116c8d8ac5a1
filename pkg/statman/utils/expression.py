"""Arithmetic expressions over chart coordinates, evaluated as jets.

Grammar (Pratt / top-down operator precedence)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          right associative
    atom   := number | ident | ident '(' args ')' | '(' expr ')'

Identifiers are ``x1..xn``, declared coordinate names, the constants ``pi``
and ``e``, or a function name followed by an argument list.
"""

import logging
import math
import re
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import special

from statman.exceptions import DomainError, ParseError
from statman.utils.jets import MAX_ORDER, Jet, ScalarField

logger = logging.getLogger(__name__)

CONSTANTS = {"pi": math.pi, "e": math.e}


class Expression(ABC):
    """Node of a parsed expression."""

    @abstractmethod
    def jet(self, point: np.ndarray, order: int) -> Jet:
        """Jet of the expression at ``point``."""

    def evaluate(self, point: Sequence[float]) -> float:
        return float(self.jet(np.asarray(point, dtype=float), 0).value)


@dataclass(frozen=True)
class Num(Expression):
    value: float

    def jet(self, point, order):
        return Jet.constant(self.value, point.shape[0], order)


@dataclass(frozen=True)
class Var(Expression):
    index: int
    name: str

    def jet(self, point, order):
        return Jet.variable(point, self.index, order)


@dataclass(frozen=True)
class Neg(Expression):
    operand: Expression

    def jet(self, point, order):
        return -self.operand.jet(point, order)


@dataclass(frozen=True)
class Add(Expression):
    left: Expression
    right: Expression

    def jet(self, point, order):
        return self.left.jet(point, order) + self.right.jet(point, order)


@dataclass(frozen=True)
class Sub(Expression):
    left: Expression
    right: Expression

    def jet(self, point, order):
        return self.left.jet(point, order) - self.right.jet(point, order)


@dataclass(frozen=True)
class Mul(Expression):
    left: Expression
    right: Expression

    def jet(self, point, order):
        return self.left.jet(point, order) * self.right.jet(point, order)


@dataclass(frozen=True)
class Div(Expression):
    left: Expression
    right: Expression

    def jet(self, point, order):
        return self.left.jet(point, order) / self.right.jet(point, order)


@dataclass(frozen=True)
class Pow(Expression):
    left: Expression
    right: Expression

    def jet(self, point, order):
        base = self.left.jet(point, order)
        if isinstance(self.right, Num):
            return base.power(self.right.value)
        return base ** self.right.jet(point, order)


def _sin(u: float) -> List[float]:
    s, c = math.sin(u), math.cos(u)
    return [s, c, -s, -c]


def _cos(u: float) -> List[float]:
    s, c = math.sin(u), math.cos(u)
    return [c, -s, -c, s]


def _tan(u: float) -> List[float]:
    if math.cos(u) == 0.0:
        raise DomainError(f"tan is undefined at {u}")
    t = math.tan(u)
    sec2 = 1.0 + t * t
    return [t, sec2, 2.0 * t * sec2, 2.0 * sec2 * (1.0 + 3.0 * t * t)]


def _exp(u: float) -> List[float]:
    try:
        e = math.exp(u)
    except OverflowError as e:
        raise DomainError(f"exp overflows at {u}") from e
    return [e] * 4


def _log(u: float) -> List[float]:
    if u <= 0.0:
        raise DomainError(f"log of non-positive value {u}")
    return [math.log(u), 1 / u, -1 / u**2, 2 / u**3]


def _sqrt(u: float) -> List[float]:
    if u <= 0.0:
        raise DomainError(f"sqrt is not differentiable at {u}")
    r = math.sqrt(u)
    return [r, 0.5 / r, -0.25 / (r * u), 0.375 / (r * u * u)]


def _sinh(u: float) -> List[float]:
    s, c = math.sinh(u), math.cosh(u)
    return [s, c, s, c]


def _cosh(u: float) -> List[float]:
    s, c = math.sinh(u), math.cosh(u)
    return [c, s, c, s]


def _polygamma(m: int) -> Callable[[float], List[float]]:
    def derivatives(u: float) -> List[float]:
        if u <= 0.0 and float(u).is_integer():
            raise DomainError(f"polygamma({m}, .) has a pole at {u}")
        values = [float(special.polygamma(m + j, u)) for j in range(MAX_ORDER + 1)]
        if not all(math.isfinite(v) for v in values):
            raise DomainError(f"polygamma({m}, .) is not finite at {u}")
        return values

    return derivatives


UNARY_FUNCTIONS: Dict[str, Callable[[float], List[float]]] = {
    "sin": _sin,
    "cos": _cos,
    "tan": _tan,
    "exp": _exp,
    "log": _log,
    "sqrt": _sqrt,
    "sinh": _sinh,
    "cosh": _cosh,
    "digamma": _polygamma(0),
    "trigamma": _polygamma(1),
}

FUNCTION_NAMES = sorted(UNARY_FUNCTIONS) + ["polygamma", "pow"]


@dataclass(frozen=True)
class Call(Expression):
    name: str
    args: Tuple[Expression, ...]

    def jet(self, point, order):
        if self.name == "pow":
            return Pow(self.args[0], self.args[1]).jet(point, order)
        if self.name == "polygamma":
            inner = self.args[1].jet(point, order)
            return inner.compose(_polygamma(int(self.args[0].value))(float(inner.value)))
        inner = self.args[0].jet(point, order)
        return inner.compose(UNARY_FUNCTIONS[self.name](float(inner.value)))


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    position: int


_TOKEN_PATTERN = re.compile(
    r"\s*(?:(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^(),]))"
)

_BINDING_POWER = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 30}
_PREFIX_EXPECTED = ("number", "identifier", "(", "-")


def tokenize(source: str) -> List[Token]:
    """Split source into tokens, ending with an ``end`` token."""
    tokens = []
    position = 0
    stripped_end = len(source.rstrip())
    while position < stripped_end:
        match = _TOKEN_PATTERN.match(source, position)
        if match is None or match.end() == position:
            offset = position + len(source[position:]) - len(source[position:].lstrip())
            raise ParseError(
                f"Unexpected character {source[offset]!r} at position {offset}",
                position=offset,
                expected=("number", "identifier", "operator"),
            )
        kind = match.lastgroup
        text = match.group(kind)
        start = match.start(kind)
        if text == "**":
            text = "^"
        tokens.append(Token(kind, text, start))
        position = match.end()
    tokens.append(Token("end", "", len(source)))
    return tokens


class _Parser:
    """Top-down operator precedence parser over a token list."""

    def __init__(self, source: str, names: Dict[str, int], dim: Optional[int]):
        self.source = source
        self.names = names
        self.dim = dim
        self.tokens = tokenize(source)
        self.index = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.index]

    def advance(self) -> Token:
        token = self.tokens[self.index]
        self.index += 1
        return token

    def expect(self, text: str) -> Token:
        token = self.current
        if token.text != text or token.kind == "end":
            raise ParseError(
                f"Expected {text!r} at position {token.position}",
                position=token.position,
                expected=(text,),
            )
        return self.advance()

    def lbp(self, token: Token) -> int:
        if token.kind != "op":
            return 0
        return _BINDING_POWER.get(token.text, 0)

    def parse(self) -> Expression:
        if self.current.kind == "end":
            raise ParseError("Empty expression", position=0, expected=_PREFIX_EXPECTED)
        expr = self.expression(0)
        if self.current.kind != "end":
            raise ParseError(
                f"Unexpected {self.current.text!r} at position {self.current.position}",
                position=self.current.position,
                expected=("operator", "end of input"),
            )
        return expr

    def expression(self, rbp: int) -> Expression:
        token = self.advance()
        left = self.nud(token)
        while rbp < self.lbp(self.current):
            token = self.advance()
            left = self.led(token, left)
        return left

    def nud(self, token: Token) -> Expression:
        if token.kind == "number":
            return Num(float(token.text))
        if token.kind == "name":
            if self.current.text == "(":
                return self.call(token)
            return self.identifier(token)
        if token.text == "-":
            return Neg(self.expression(25))
        if token.text == "+":
            return self.expression(25)
        if token.text == "(":
            inner = self.expression(0)
            self.expect(")")
            return inner
        what = "end of input" if token.kind == "end" else repr(token.text)
        raise ParseError(
            f"Unexpected {what} at position {token.position}",
            position=token.position,
            expected=_PREFIX_EXPECTED,
        )

    def led(self, token: Token, left: Expression) -> Expression:
        if token.text == "+":
            return Add(left, self.expression(10))
        if token.text == "-":
            return Sub(left, self.expression(10))
        if token.text == "*":
            return Mul(left, self.expression(20))
        if token.text == "/":
            return Div(left, self.expression(20))
        # '^' binds right: parse the exponent one notch looser
        return Pow(left, self.expression(29))

    def identifier(self, token: Token) -> Expression:
        name = token.text
        if name in self.names:
            return Var(self.names[name], name)
        match = re.fullmatch(r"x([1-9]\d*)", name)
        if match and (self.dim is None or int(match.group(1)) <= self.dim):
            return Var(int(match.group(1)) - 1, name)
        if name in CONSTANTS:
            return Num(CONSTANTS[name])
        expected = set(self.names) | set(CONSTANTS)
        if self.dim is not None:
            expected |= {f"x{i}" for i in range(1, self.dim + 1)}
        raise ParseError(
            f"Unknown identifier {name!r} at position {token.position}",
            position=token.position,
            expected=expected,
        )

    def call(self, token: Token) -> Expression:
        name = token.text
        if name not in UNARY_FUNCTIONS and name not in ("polygamma", "pow"):
            raise ParseError(
                f"Unknown function {name!r} at position {token.position}",
                position=token.position,
                expected=FUNCTION_NAMES,
            )
        self.expect("(")
        args = [self.expression(0)]
        while self.current.text == ",":
            self.advance()
            args.append(self.expression(0))
        self.expect(")")
        arity = 2 if name in ("polygamma", "pow") else 1
        if len(args) != arity:
            raise ParseError(
                f"{name} takes {arity} argument(s), got {len(args)}",
                position=token.position,
            )
        if name == "polygamma":
            order = args[0]
            if not (isinstance(order, Num) and order.value >= 0 and order.value.is_integer()):
                raise ParseError(
                    "polygamma order must be a non-negative integer literal",
                    position=token.position,
                    expected=("integer",),
                )
        return Call(name, tuple(args))


def parse_expression(
    source: str, dim: Optional[int] = None, coords: Sequence[str] = ()
) -> Expression:
    """
    Parse an expression over chart coordinates.

    Args:
        source: Expression text, e.g. ``"1/x2^2"``
        dim: Chart dimension; limits ``x<k>`` to ``k <= dim`` when given
        coords: Declared coordinate names, bound to x1, x2, ... in order

    Returns:
        Expression tree

    Raises:
        ParseError: With position and expected tokens on malformed input
    """
    names = {name: i for i, name in enumerate(coords)}
    clash = set(names) & (set(CONSTANTS) | set(FUNCTION_NAMES))
    if clash:
        raise ParseError(f"Coordinate names shadow built-ins: {sorted(clash)}")
    return _Parser(source, names, dim).parse()


class ExpressionField(ScalarField):
    """Scalar field given by a parsed expression, differentiated exactly."""

    strategy = "analytic"

    def __init__(self, expression: Expression, source: str = ""):
        self.expression = expression
        self.source = source

    @classmethod
    def parse(
        cls, source: str, dim: Optional[int] = None, coords: Sequence[str] = ()
    ) -> "ExpressionField":
        return cls(parse_expression(source, dim, coords), source)

    def jet(self, point: np.ndarray, order: int) -> Jet:
        return self.expression.jet(point, order)

    def __repr__(self) -> str:
        return f"ExpressionField({self.source!r})"
