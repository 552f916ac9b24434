# Copyright (C) 2026 The perisolve authors. All rights reserved.
# SPDX-License-Identifier: MIT

"""
This module defines the birth nonlinearities h(t, x) of a model.
Every family has unit slope at the origin, is nonnegative and bounded for x >= 0 when c(t) > 0,
and is parameterised by a periodic coefficient c(t) and, for some families, a fixed exponent.
"""

import math
from typing import Any, Dict

import numpy as np

from perisolve.expr import PeriodicExpr
from perisolve.expr.nodes import Value


class Nonlinearity:
    """
    Abstract base class for the nonlinearities h(t, x).
    """

    kind = ""

    def __init__(self, c: PeriodicExpr, alpha: float = 1.0) -> None:
        """
        Initializes the nonlinearity.

        Parameters:
            c (PeriodicExpr): The periodic coefficient c(t).
            alpha (float): The exponent, where the family has one.
        """
        self._c = c
        self._alpha = float(alpha)

    @property
    def c(self) -> PeriodicExpr:
        """
        The periodic coefficient c(t).
        """
        return self._c

    @property
    def alpha(self) -> float:
        """
        The exponent of the family (1 for Ricker).
        """
        return self._alpha

    @property
    def envelope_scale(self) -> float:
        """
        Inverse slope at the origin; every built-in family is normalised to slope one.
        """
        return 1.0

    def evaluate(self, c: Value, x: Value) -> Value:
        """
        Evaluates h for given values of the coefficient c and the state x.

        Raises:
            NotImplementedError: If the method is not implemented by the subclass.
        """
        raise NotImplementedError

    def derivative(self, c: Value, x: Value) -> Value:
        """
        Evaluates the partial derivative of h with respect to x.

        Raises:
            NotImplementedError: If the method is not implemented by the subclass.
        """
        raise NotImplementedError

    def supremum(self, c: float) -> float:
        """
        Returns sup over x >= 0 of h for a fixed positive c.

        Raises:
            NotImplementedError: If the method is not implemented by the subclass.
        """
        raise NotImplementedError

    def rescaled_c(self, c: Value, scale: float) -> Value:
        """
        Returns the coefficient c' such that h(c, scale * x) / scale = h(c', x).
        """
        return c * scale**self._alpha

    def at(self, t: Value, x: Value) -> Value:
        """
        Evaluates h(t, x), sampling c at t.
        """
        return self.evaluate(c=self._c(t), x=x)

    def document(self) -> Dict[str, Any]:
        """
        Returns the model document fragment describing this nonlinearity.
        """
        fragment: Dict[str, Any] = {"type": self.kind, "c": self._c.source}
        if self.kind != Ricker.kind:
            fragment["alpha"] = self._alpha
        return fragment


class Ricker(Nonlinearity):
    """
    h(t, x) = x exp(-c(t) x).
    """

    kind = "ricker"

    def evaluate(self, c: Value, x: Value) -> Value:
        return x * np.exp(-c * x)

    def derivative(self, c: Value, x: Value) -> Value:
        return (1.0 - c * x) * np.exp(-c * x)

    def supremum(self, c: float) -> float:
        return 1.0 / (math.e * c)


class MackeyGlass(Nonlinearity):
    """
    h(t, x) = x / (1 + c(t) x^alpha), alpha >= 1.
    """

    kind = "mackey_glass"

    def __init__(self, c: PeriodicExpr, alpha: float = 1.0) -> None:
        if alpha < 1.0:
            raise ValueError(f"Mackey-Glass exponent must be at least 1, got {alpha}")
        super().__init__(c=c, alpha=alpha)

    def evaluate(self, c: Value, x: Value) -> Value:
        return x / (1.0 + c * x**self._alpha)

    def derivative(self, c: Value, x: Value) -> Value:
        power = c * x**self._alpha
        return (1.0 + power - self._alpha * power) / (1.0 + power) ** 2

    def supremum(self, c: float) -> float:
        if self._alpha == 1.0:
            return 1.0 / c
        argmax = (c * (self._alpha - 1.0)) ** (-1.0 / self._alpha)
        return argmax * (self._alpha - 1.0) / self._alpha


class ScaledRicker(Nonlinearity):
    """
    h(t, x) = x exp(-c(t) x^alpha), alpha > 0.
    """

    kind = "scaled_ricker"

    def __init__(self, c: PeriodicExpr, alpha: float = 1.0) -> None:
        if alpha <= 0.0:
            raise ValueError(f"Scaled Ricker exponent must be positive, got {alpha}")
        super().__init__(c=c, alpha=alpha)

    def evaluate(self, c: Value, x: Value) -> Value:
        return x * np.exp(-c * x**self._alpha)

    def derivative(self, c: Value, x: Value) -> Value:
        power = c * x**self._alpha
        return (1.0 - self._alpha * power) * np.exp(-power)

    def supremum(self, c: float) -> float:
        argmax = (1.0 / (self._alpha * c)) ** (1.0 / self._alpha)
        return argmax * math.exp(-1.0 / self._alpha)


def make_nonlinearity(kind: str, c: PeriodicExpr, alpha: float = 1.0) -> Nonlinearity:
    """
    Creates the nonlinearity of a given family.

    Parameters:
        kind (str): One of "ricker", "mackey_glass", "scaled_ricker".
        c (PeriodicExpr): The coefficient c(t).
        alpha (float): The exponent (ignored for Ricker).

    Returns:
        Nonlinearity: The nonlinearity object.

    Raises:
        ValueError: If the family is unknown or the exponent is out of range.
    """
    match kind:
        case Ricker.kind:
            return Ricker(c=c)
        case MackeyGlass.kind:
            return MackeyGlass(c=c, alpha=alpha)
        case ScaledRicker.kind:
            return ScaledRicker(c=c, alpha=alpha)
        case _:
            raise ValueError(f"Unsupported nonlinearity: {kind}")
