# Copyright (C) 2026 The perisolve authors. All rights reserved.
# SPDX-License-Identifier: MIT

"""
This module parses and evaluates the small expression language used for the time-dependent
coefficients of a model.

Grammar (lowest to highest precedence):
    expression := term (("+" | "-") term)*
    term       := unary (("*" | "/") unary)*
    unary      := "-" unary | power
    power      := primary ("^" unary)?
    primary    := number | "t" | "pi" | "e" | parameter | function "(" expression ")"
                  | "(" expression ")"

The power operator is right-associative and binds tighter than unary minus, so "-t^2" reads
"-(t^2)" and "2^3^2" reads "2^(3^2)".
"""

import math
import re
from dataclasses import dataclass
from typing import List, Mapping, NamedTuple

import numpy as np

from perisolve.errors import ExprNameError, ExprSyntaxError
from perisolve.expr.nodes import (
    FUNCTIONS,
    BinaryOp,
    Call,
    Constant,
    ExprNode,
    Negate,
    Value,
    Variable,
)

RESERVED_NAMES = ("t", "pi", "e")

PERIODICITY_TOLERANCE = 1e-9

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


class _Token(NamedTuple):
    kind: str
    text: str
    offset: int


def _byte_offset(source: str, index: int) -> int:
    return len(source[:index].encode("utf-8"))


def _tokenize(source: str) -> List[_Token]:
    tokens = []
    position = 0
    while position < len(source):
        if source[position:].strip() == "":
            break
        match = _TOKEN_RE.match(source, position)
        if match is None or match.end() == position:
            stripped = len(source[position:]) - len(source[position:].lstrip())
            raise ExprSyntaxError(
                message=f"unexpected character {source[position + stripped]!r}",
                offset=_byte_offset(source, position + stripped),
            )
        kind = match.lastgroup
        tokens.append(_Token(kind, match.group(kind), _byte_offset(source, match.start(kind))))
        position = match.end()
    tokens.append(_Token("end", "", _byte_offset(source, len(source))))
    return tokens


class _Parser:
    """
    Recursive descent parser over a token list.
    """

    def __init__(self, source: str, constants: Mapping[str, float]) -> None:
        self._tokens = _tokenize(source)
        self._position = 0
        self._constants = constants

    def parse(self) -> ExprNode:
        node = self._expression()
        token = self._peek()
        if token.kind != "end":
            raise ExprSyntaxError(message=f"unexpected token {token.text!r}", offset=token.offset)
        return node

    def _peek(self) -> _Token:
        return self._tokens[self._position]

    def _next(self) -> _Token:
        token = self._tokens[self._position]
        self._position += 1
        return token

    def _accept(self, text: str) -> bool:
        token = self._peek()
        if token.kind == "op" and token.text == text:
            self._position += 1
            return True
        return False

    def _expect(self, text: str) -> None:
        if not self._accept(text):
            token = self._peek()
            found = "end of input" if token.kind == "end" else repr(token.text)
            raise ExprSyntaxError(message=f"expected {text!r}, found {found}", offset=token.offset)

    def _expression(self) -> ExprNode:
        node = self._term()
        while True:
            if self._accept("+"):
                node = BinaryOp("+", node, self._term())
            elif self._accept("-"):
                node = BinaryOp("-", node, self._term())
            else:
                return node

    def _term(self) -> ExprNode:
        node = self._unary()
        while True:
            if self._accept("*"):
                node = BinaryOp("*", node, self._unary())
            elif self._accept("/"):
                node = BinaryOp("/", node, self._unary())
            else:
                return node

    def _unary(self) -> ExprNode:
        if self._accept("-"):
            operand = self._unary()
            if isinstance(operand, Constant):
                return Constant(-operand.value)
            return Negate(operand)
        return self._power()

    def _power(self) -> ExprNode:
        base = self._primary()
        if self._accept("^"):
            return BinaryOp("^", base, self._unary())
        return base

    def _primary(self) -> ExprNode:
        token = self._next()
        match token.kind:
            case "number":
                return Constant(float(token.text))
            case "name":
                return self._name(token)
            case "op" if token.text == "(":
                node = self._expression()
                self._expect(")")
                return node
            case "end":
                raise ExprSyntaxError(message="unexpected end of input", offset=token.offset)
            case _:
                raise ExprSyntaxError(
                    message=f"unexpected token {token.text!r}", offset=token.offset
                )

    def _name(self, token: _Token) -> ExprNode:
        following = self._peek()
        if following.kind == "op" and following.text == "(":
            if token.text not in FUNCTIONS:
                raise ExprNameError(f"unknown function {token.text!r} at offset {token.offset}")
            self._next()
            argument = self._expression()
            self._expect(")")
            return Call(token.text, argument)
        match token.text:
            case "t":
                return Variable()
            case "pi":
                return Constant(math.pi)
            case "e":
                return Constant(math.e)
            case name if name in self._constants:
                return Constant(float(self._constants[name]))
            case _:
                raise ExprNameError(f"unknown identifier {token.text!r} at offset {token.offset}")


def parse(source: str, constants: Mapping[str, float] | None = None) -> ExprNode:
    """
    Parses an expression.

    Parameters:
        source (str): The expression source text.
        constants (Mapping[str, float] | None): Named parameters usable as identifiers.

    Returns:
        ExprNode: The expression tree.

    Raises:
        ExprSyntaxError: On malformed input, with the byte offset where parsing stopped.
        ExprNameError: On unknown identifiers or function names.
    """
    return _Parser(source=source, constants=constants or {}).parse()


def to_source(node: ExprNode) -> str:
    """
    Prints an expression tree; parsing the result gives back a structurally identical tree.
    """
    return node.to_source()


def evaluate(node: ExprNode, t: Value) -> Value:
    """
    Evaluates an expression tree at a time or on an array of times.

    Parameters:
        node (ExprNode): The expression.
        t (Value): A time or an array of times.

    Returns:
        Value: A float for a scalar time, an array of the shape of t otherwise.

    Raises:
        ExprDomainError: On domain violations or non-finite results.
    """
    value = node.evaluate(t)
    if np.ndim(t) == 0:
        return float(value)
    return np.broadcast_to(np.asarray(value, dtype=float), np.shape(t)).copy()


@dataclass(frozen=True)
class PeriodicityCheck:
    """
    Outcome of a sampled periodicity check.
    """

    periodic: bool
    discrepancy: float
    worst_t: float


def check_periodicity(node: ExprNode, omega: float, samples: int = 64) -> PeriodicityCheck:
    """
    Checks |f(t + omega) - f(t)| <= 1e-9 (1 + |f(t)|) on evenly spaced samples of [0, omega).

    Parameters:
        node (ExprNode): The expression.
        omega (float): The candidate period.
        samples (int): Number of samples, at least 16.

    Returns:
        PeriodicityCheck: Whether the check passed, the largest absolute discrepancy and where.
    """
    if samples < 16:
        raise ValueError(f"At least 16 samples are required, got {samples}")
    if omega <= 0.0:
        raise ValueError(f"The period must be positive, got {omega}")
    times = np.arange(samples) * (omega / samples)
    values = evaluate(node, times)
    shifted = evaluate(node, times + omega)
    discrepancy = np.abs(shifted - values)
    scaled = discrepancy / (1.0 + np.abs(values))
    worst = int(np.argmax(scaled))
    return PeriodicityCheck(
        periodic=bool(scaled[worst] <= PERIODICITY_TOLERANCE),
        discrepancy=float(np.max(discrepancy)),
        worst_t=float(times[worst]),
    )


@dataclass(frozen=True, eq=False)
class PeriodicExpr:
    """
    An expression tagged with the period it was validated against.
    """

    node: ExprNode
    period: float
    source: str = ""

    def __call__(self, t: Value) -> Value:
        return evaluate(self.node, t)

    @property
    def is_constant(self) -> bool:
        """
        True when the expression does not depend on t.
        """
        return not self.node.depends_on_time()

    def range_on(self, times: np.ndarray) -> float:
        """
        Returns max - min of the expression over the given times.
        """
        values = self(times)
        return float(np.max(values) - np.min(values))


__all__ = [
    "ExprNode",
    "PeriodicExpr",
    "PeriodicityCheck",
    "RESERVED_NAMES",
    "check_periodicity",
    "evaluate",
    "parse",
    "to_source",
]
