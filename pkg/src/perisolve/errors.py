# Copyright (C) 2026 The perisolve authors. All rights reserved.
# SPDX-License-Identifier: MIT

"""
Exception types raised by perisolve.
Every exception derives from PerisolveError and from the builtin exception matching its nature, so
callers can catch either.
"""


class PerisolveError(Exception):
    """
    Base class of every error raised by perisolve.
    """


class ExprSyntaxError(PerisolveError, ValueError):
    """
    Raised when an expression cannot be parsed.
    """

    def __init__(self, message: str, offset: int) -> None:
        """
        Parameters:
            message (str): What went wrong.
            offset (int): Byte offset in the source where parsing stopped.
        """
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class ExprNameError(PerisolveError, ValueError):
    """
    Raised for unknown identifiers or unknown function names.
    """


class ExprDomainError(PerisolveError, ArithmeticError):
    """
    Raised when an expression is evaluated outside of its domain (log of a non-positive value,
    division by zero, zero raised to a negative power, non-finite result).
    """


class ModelSchemaError(PerisolveError, ValueError):
    """
    Raised when a model document does not follow the model schema.
    """


class ModelSignError(PerisolveError, ValueError):
    """
    Raised when a coefficient violates its sign constraint on the validation grid.
    """

    def __init__(self, equation: int, coefficient: str, worst_t: float, value: float) -> None:
        """
        Parameters:
            equation (int): 1-based equation index.
            coefficient (str): Name of the offending coefficient.
            worst_t (float): Time of the worst violation.
            value (float): Coefficient value at worst_t.
        """
        super().__init__(
            f"equation {equation}: coefficient {coefficient} has the wrong sign "
            f"(value {value!r} at t={worst_t!r})"
        )
        self.equation = equation
        self.coefficient = coefficient
        self.worst_t = worst_t
        self.value = value


class ModelPeriodicityError(PerisolveError, ValueError):
    """
    Raised when a coefficient is not periodic with the model period.
    """


class HistorySpanError(PerisolveError, ValueError):
    """
    Raised when a history function is evaluated outside of its span.
    """


class InitialHistoryError(PerisolveError, ValueError):
    """
    Raised when an initial history is not in the admissible cone (nonnegative, positive at 0).
    """


class PositivityError(PerisolveError, RuntimeError):
    """
    Raised when a numerical solution leaves the nonnegative cone.
    """

    def __init__(self, time: float, component: int, value: float) -> None:
        """
        Parameters:
            time (float): Time of the breach.
            component (int): 0-based component index.
            value (float): The offending value.
        """
        super().__init__(
            f"positivity lost at t={time!r}: component {component + 1} equals {value!r}"
        )
        self.time = time
        self.component = component
        self.value = value


class SingularMatrixError(PerisolveError, ArithmeticError):
    """
    Raised when a matrix that must be invertible is numerically singular.
    """


class ConvergenceError(PerisolveError, RuntimeError):
    """
    Raised when an iterative method does not reach its tolerance.
    """


class SimplexError(PerisolveError, RuntimeError):
    """
    Raised when the simplex method ends in an unexpected state.
    """


class HypothesisError(PerisolveError, ValueError):
    """
    Raised when the input does not satisfy the hypotheses an operation relies on.
    """
