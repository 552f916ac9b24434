# Copyright (C) 2026 The perisolve authors. All rights reserved.
# SPDX-License-Identifier: MIT

"""
This module defines the nodes of the expression trees used for time-dependent model coefficients.
Each node knows how to evaluate itself on a scalar time or on a numpy array of times, and how to
print itself back as source text that parses to the same tree.
"""

import math
from dataclasses import dataclass
from typing import Callable, Dict

import numpy as np

from perisolve.errors import ExprDomainError

Value = float | np.ndarray

BINARY_OPERATORS = ("+", "-", "*", "/", "^")


def _check_finite(value: Value, source: str) -> Value:
    if not np.all(np.isfinite(value)):
        raise ExprDomainError(f"non-finite value in {source}")
    return value


def _log(x: Value) -> Value:
    if np.any(x <= 0.0):
        raise ExprDomainError("log of a non-positive value")
    return np.log(x)


def _sqrt(x: Value) -> Value:
    if np.any(x < 0.0):
        raise ExprDomainError("sqrt of a negative value")
    return np.sqrt(x)


FUNCTIONS: Dict[str, Callable[[Value], Value]] = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "abs": np.abs,
    "log": _log,
    "sqrt": _sqrt,
}


class ExprNode:
    """
    Abstract base class for expression tree nodes.
    """

    def evaluate(self, t: Value) -> Value:
        """
        Evaluates the expression at time t.

        Parameters:
            t (Value): A time or an array of times.

        Returns:
            Value: The value(s) of the expression; constants are returned unbroadcast.

        Raises:
            NotImplementedError: If the method is not implemented by the subclass.
        """
        raise NotImplementedError

    def to_source(self) -> str:
        """
        Prints the expression as fully parenthesised source text.

        Raises:
            NotImplementedError: If the method is not implemented by the subclass.
        """
        raise NotImplementedError

    def depends_on_time(self) -> bool:
        """
        Tells whether the variable t appears in the expression.

        Raises:
            NotImplementedError: If the method is not implemented by the subclass.
        """
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(ExprNode):
    """
    A finite numeric literal (including the named constants pi and e).
    """

    value: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.value):
            raise ExprDomainError(f"constant {self.value!r} is not finite")

    def evaluate(self, t: Value) -> Value:
        return self.value

    def to_source(self) -> str:
        text = repr(float(self.value))
        return f"({text})" if self.value < 0 else text

    def depends_on_time(self) -> bool:
        return False


@dataclass(frozen=True)
class Variable(ExprNode):
    """
    The time variable t.
    """

    def evaluate(self, t: Value) -> Value:
        return t

    def to_source(self) -> str:
        return "t"

    def depends_on_time(self) -> bool:
        return True


@dataclass(frozen=True)
class Negate(ExprNode):
    """
    Unary minus.
    """

    operand: ExprNode

    def evaluate(self, t: Value) -> Value:
        return -self.operand.evaluate(t)

    def to_source(self) -> str:
        return f"(-{self.operand.to_source()})"

    def depends_on_time(self) -> bool:
        return self.operand.depends_on_time()


@dataclass(frozen=True)
class BinaryOp(ExprNode):
    """
    One of the binary operators + - * / ^.
    """

    operator: str
    left: ExprNode
    right: ExprNode

    def __post_init__(self) -> None:
        if self.operator not in BINARY_OPERATORS:
            raise ValueError(f"Unsupported operator: {self.operator}")

    def evaluate(self, t: Value) -> Value:
        lhs = self.left.evaluate(t)
        rhs = self.right.evaluate(t)
        with np.errstate(all="ignore"):
            match self.operator:
                case "+":
                    result = np.add(lhs, rhs)
                case "-":
                    result = np.subtract(lhs, rhs)
                case "*":
                    result = np.multiply(lhs, rhs)
                case "/":
                    if np.any(np.asarray(rhs) == 0.0):
                        raise ExprDomainError("division by zero")
                    result = np.divide(lhs, rhs)
                case "^":
                    if np.any((np.asarray(lhs) == 0.0) & (np.asarray(rhs) < 0.0)):
                        raise ExprDomainError("zero raised to a negative power")
                    result = np.power(np.asarray(lhs, dtype=float), rhs)
                case _:
                    raise ValueError(f"Unsupported operator: {self.operator}")
        return _check_finite(result, source=self.to_source())

    def to_source(self) -> str:
        return f"({self.left.to_source()} {self.operator} {self.right.to_source()})"

    def depends_on_time(self) -> bool:
        return self.left.depends_on_time() or self.right.depends_on_time()


@dataclass(frozen=True)
class Call(ExprNode):
    """
    Application of one of the built-in functions sin, cos, exp, abs, log, sqrt.
    """

    function: str
    argument: ExprNode

    def __post_init__(self) -> None:
        if self.function not in FUNCTIONS:
            raise ValueError(f"Unsupported function: {self.function}")

    def evaluate(self, t: Value) -> Value:
        argument = self.argument.evaluate(t)
        with np.errstate(all="ignore"):
            result = FUNCTIONS[self.function](argument)
        return _check_finite(result, source=self.to_source())

    def to_source(self) -> str:
        return f"{self.function}({self.argument.to_source()})"

    def depends_on_time(self) -> bool:
        return self.argument.depends_on_time()
