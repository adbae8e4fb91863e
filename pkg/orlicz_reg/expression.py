"""Tiny arithmetic expression grammar for coefficients, exponents and moduli.

Grammar::

    expr    := expr ('+' | '-') expr | expr ('*' | '/') expr
             | expr '^' expr          (right associative)
             | '-' expr | '+' expr
             | number | name | name '(' expr (',' expr)* ')' | '(' expr ')'

Names are either variables (``x1`` .. ``xn``, ``t``, ``r``), the constants
``pi`` and ``e``, or one of the functions ``abs``, ``min``, ``max``, ``log``,
``exp`` and ``sqrt``. Expressions are parsed once into a tree and evaluated
vectorised over numpy arrays.
"""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

logger = logging.getLogger(__name__)

__all__ = [
    "Expression",
    "ExpressionError",
    "ExpressionParser",
    "parse_expression",
]


class ExpressionError(ValueError):
    pass


_CONSTANTS: dict[str, float] = {"pi": math.pi, "e": math.e}

_FUNCTIONS: dict[str, tuple[Callable[..., np.ndarray], int, int | None]] = {
    # name -> (implementation, min arity, max arity)
    "abs": (np.abs, 1, 1),
    "log": (np.log, 1, 1),
    "exp": (np.exp, 1, 1),
    "sqrt": (np.sqrt, 1, 1),
    "min": (lambda *a: _reduce(np.minimum, a), 2, None),
    "max": (lambda *a: _reduce(np.maximum, a), 2, None),
}

_VARIABLE_RE = re.compile(r"^(x[1-9][0-9]*|t|r)$")
_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^(),])"
    r")"
)


def _reduce(op, args):
    out = args[0]
    for a in args[1:]:
        out = op(out, a)
    return out


def parse_expression(source: str) -> Expression:
    """Parse *source* and return an evaluable :class:`Expression`."""
    return ExpressionParser().parse(source)


# ----- Tree -----


@dataclass(frozen=True)
class _Number:
    value: float

    def evaluate(self, env: Mapping[str, np.ndarray]) -> np.ndarray:
        return np.asarray(self.value, dtype=float)


@dataclass(frozen=True)
class _Variable:
    name: str

    def evaluate(self, env: Mapping[str, np.ndarray]) -> np.ndarray:
        try:
            return np.asarray(env[self.name], dtype=float)
        except KeyError:
            raise ExpressionError(f"No value bound for variable {self.name!r}") from None


@dataclass(frozen=True)
class _Unary:
    sign: float
    operand: object

    def evaluate(self, env: Mapping[str, np.ndarray]) -> np.ndarray:
        return self.sign * self.operand.evaluate(env)


@dataclass(frozen=True)
class _Binary:
    op: str
    left: object
    right: object

    def evaluate(self, env: Mapping[str, np.ndarray]) -> np.ndarray:
        lhs = self.left.evaluate(env)
        rhs = self.right.evaluate(env)
        if self.op == "+":
            return lhs + rhs
        if self.op == "-":
            return lhs - rhs
        if self.op == "*":
            return lhs * rhs
        if self.op == "/":
            return lhs / rhs
        return np.power(lhs, rhs)


@dataclass(frozen=True)
class _Call:
    name: str
    args: tuple

    def evaluate(self, env: Mapping[str, np.ndarray]) -> np.ndarray:
        func = _FUNCTIONS[self.name][0]
        return func(*(a.evaluate(env) for a in self.args))


def _collect_variables(node) -> set[str]:
    if isinstance(node, _Variable):
        return {node.name}
    if isinstance(node, _Unary):
        return _collect_variables(node.operand)
    if isinstance(node, _Binary):
        return _collect_variables(node.left) | _collect_variables(node.right)
    if isinstance(node, _Call):
        out: set[str] = set()
        for a in node.args:
            out |= _collect_variables(a)
        return out
    return set()


@dataclass(frozen=True)
class Expression:
    """A parsed expression; immutable and safe to share."""

    source: str
    tree: object
    variables: frozenset[str]

    @property
    def is_constant(self) -> bool:
        return not self.variables

    @property
    def max_coordinate(self) -> int:
        """Largest ``k`` such that ``xk`` occurs (0 if no coordinate is used)."""
        ks = [int(v[1:]) for v in self.variables if v.startswith("x")]
        return max(ks, default=0)

    def evaluate(self, **env: "float | np.ndarray") -> np.ndarray:
        with np.errstate(all="ignore"):
            return self.tree.evaluate(env)

    def at_points(self, x: np.ndarray, **extra: "float | np.ndarray") -> np.ndarray:
        """Evaluate with ``x1..xn`` bound to the last axis of *x*."""
        x = np.asarray(x, dtype=float)
        env = {f"x{i + 1}": x[..., i] for i in range(x.shape[-1])}
        env.update(extra)
        value = self.evaluate(**env)
        return np.broadcast_to(value, np.broadcast_shapes(value.shape, x.shape[:-1]))

    def __str__(self) -> str:
        return self.source


# ----- Parser -----


class ExpressionParser:
    """Pratt parser producing :class:`Expression` trees."""

    _INFIX_BINDING = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 30}
    _PREFIX_BINDING = 25

    def __init__(self):
        self._tokens: list[tuple[str, str]] = []
        self._pos = 0
        self._source = ""

    def parse(self, source: str) -> Expression:
        if not isinstance(source, str) or not source.strip():
            raise ExpressionError("Empty expression")
        self._source = source
        self._tokens = self._tokenize(source)
        self._pos = 0
        tree = self._expression(0)
        kind, text = self._peek()
        if kind != "end":
            raise ExpressionError(f"Unexpected token {text!r} in {source!r}")
        variables = frozenset(_collect_variables(tree))
        logger.debug("Parsed %r (variables: %s)", source, sorted(variables))
        return Expression(source=source, tree=tree, variables=variables)

    # ----- Tokens -----

    def _tokenize(self, source: str) -> list[tuple[str, str]]:
        tokens: list[tuple[str, str]] = []
        pos = 0
        stripped_end = len(source.rstrip())
        while pos < stripped_end:
            match = _TOKEN_RE.match(source, pos)
            if match is None or match.end() == pos:
                raise ExpressionError(
                    f"Unexpected character {source[pos:].strip()[:1]!r} in {source!r}"
                )
            kind = match.lastgroup
            text = match.group(kind)
            if kind == "op" and text == "**":
                text = "^"
            tokens.append((kind, text))
            pos = match.end()
        tokens.append(("end", ""))
        return tokens

    def _peek(self) -> tuple[str, str]:
        return self._tokens[self._pos]

    def _advance(self) -> tuple[str, str]:
        token = self._tokens[self._pos]
        self._pos += 1
        return token

    def _expect(self, text: str) -> None:
        kind, got = self._advance()
        if got != text or kind != "op":
            raise ExpressionError(f"Expected {text!r}, got {got or 'end'!r} in {self._source!r}")

    # ----- Pratt loop -----

    def _expression(self, rbp: int):
        left = self._prefix(self._advance())
        while True:
            kind, text = self._peek()
            lbp = self._INFIX_BINDING.get(text, 0) if kind == "op" else 0
            if rbp >= lbp:
                return left
            self._advance()
            if text == "^":
                right = self._expression(lbp - 1)
            else:
                right = self._expression(lbp)
            left = _Binary(text, left, right)

    def _prefix(self, token: tuple[str, str]):
        kind, text = token
        if kind == "number":
            return _Number(float(text))
        if kind == "name":
            return self._name(text)
        if kind == "op" and text in "+-":
            operand = self._expression(self._PREFIX_BINDING)
            return _Unary(-1.0 if text == "-" else 1.0, operand)
        if kind == "op" and text == "(":
            inner = self._expression(0)
            self._expect(")")
            return inner
        raise ExpressionError(f"Unexpected token {text or 'end'!r} in {self._source!r}")

    def _name(self, name: str):
        if name in _FUNCTIONS:
            self._expect("(")
            args = [self._expression(0)]
            while self._peek() == ("op", ","):
                self._advance()
                args.append(self._expression(0))
            self._expect(")")
            _, lo, hi = _FUNCTIONS[name]
            if len(args) < lo or (hi is not None and len(args) > hi):
                raise ExpressionError(
                    f"{name}() takes {lo if hi == lo else f'at least {lo}'} "
                    f"argument(s), got {len(args)}"
                )
            return _Call(name, tuple(args))
        if name in _CONSTANTS:
            return _Number(_CONSTANTS[name])
        if _VARIABLE_RE.match(name):
            return _Variable(name)
        raise ExpressionError(f"Unknown identifier {name!r} in {self._source!r}")
