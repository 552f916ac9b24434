# Copyright (C) 2026 The perisolve authors. All rights reserved.
# SPDX-License-Identifier: MIT

"""
This module defines the commands recorded by model builders.
Each command knows how to apply itself to a model document under construction, so that builders
can be merged by concatenating their command lists and the document is assembled only at the end.
"""

from typing import Any, Dict, List

from perisolve.errors import ModelSchemaError

Source = str | float

ModelDocument = Dict[str, Any]


def _source(value: Source) -> Source:
    if isinstance(value, bool) or not isinstance(value, (str, int, float)):
        raise ModelSchemaError(f"expected an expression string or a number, got {value!r}")
    return value if isinstance(value, str) else float(value)


def _equation(document: ModelDocument, i: int) -> Dict[str, Any]:
    equations: List[Dict[str, Any]] = document["equations"]
    if not 0 <= i < len(equations):
        raise ModelSchemaError(f"equation index {i} out of range for n={len(equations)}")
    return equations[i]


class ModelCommand:
    """
    Abstract base class for model builder commands.
    """

    def apply(self, document: ModelDocument) -> None:
        """
        Applies the command to a model document in place.

        Raises:
            NotImplementedError: If the method is not implemented by the subclass.
        """
        raise NotImplementedError


class DeathRateCommand(ModelCommand):
    """
    Sets the death rate d_i(t) of one equation.
    """

    def __init__(self, i: int, d: Source) -> None:
        self._i = i
        self._d = _source(d)

    def apply(self, document: ModelDocument) -> None:
        _equation(document=document, i=self._i)["d"] = self._d


class MigrationCommand(ModelCommand):
    """
    Sets the immigration rate a_ij(t) from patch j into patch i.
    """

    def __init__(self, i: int, j: int, rate: Source) -> None:
        if i == j:
            raise ModelSchemaError(f"migration from patch {i} into itself")
        self._i = i
        self._j = j
        self._rate = _source(rate)

    def apply(self, document: ModelDocument) -> None:
        _equation(document=document, i=self._i)["a"][str(self._j + 1)] = self._rate


class TermCommand(ModelCommand):
    """
    Appends a delayed birth term beta(t) B(t, x_i) to one equation.
    """

    def __init__(
        self,
        i: int,
        beta: Source,
        tau: Source,
        nonlinearity: str,
        c: Source,
        alpha: float | None,
    ) -> None:
        """
        Initializes the term command.

        Parameters:
            i (int): 0-based equation index.
            beta (Source): The birth coefficient beta(t).
            tau (Source): The delay tau(t).
            nonlinearity (str): One of "ricker", "mackey_glass", "scaled_ricker".
            c (Source): The coefficient c(t) of the nonlinearity.
            alpha (float | None): The exponent of the nonlinearity, where it has one.
        """
        self._i = i
        self._beta = _source(beta)
        self._tau = _source(tau)
        self._nonlinearity: Dict[str, Any] = {"type": nonlinearity, "c": _source(c)}
        if alpha is not None:
            self._nonlinearity["alpha"] = float(alpha)

    def kernel(self) -> Dict[str, Any]:
        """
        Returns the kernel fragment of the term.

        Raises:
            NotImplementedError: If the method is not implemented by the subclass.
        """
        raise NotImplementedError

    def apply(self, document: ModelDocument) -> None:
        _equation(document=document, i=self._i)["terms"].append(
            {
                "beta": self._beta,
                "kernel": self.kernel(),
                "nonlinearity": dict(self._nonlinearity),
            }
        )


class DiscreteTermCommand(TermCommand):
    """
    A birth term with a discrete delay: beta(t) h(t, x_i(t - tau(t))).
    """

    def kernel(self) -> Dict[str, Any]:
        return {"type": "discrete", "tau": self._tau}


class DensityTermCommand(TermCommand):
    """
    A birth term with a delay density: beta(t) times the integral of gamma(s) h(s, x_i(s)) over
    [t - tau(t), t].
    """

    # pylint: disable=too-many-arguments
    def __init__(
        self,
        i: int,
        beta: Source,
        tau: Source,
        gamma: Source,
        nonlinearity: str,
        c: Source,
        alpha: float | None,
    ) -> None:
        super().__init__(i=i, beta=beta, tau=tau, nonlinearity=nonlinearity, c=c, alpha=alpha)
        self._gamma = _source(gamma)

    def kernel(self) -> Dict[str, Any]:
        return {"type": "density", "tau": self._tau, "gamma": self._gamma}


class ParameterCommand(ModelCommand):
    """
    Declares a named scalar parameter usable in every expression of the model.
    """

    def __init__(self, name: str, value: float) -> None:
        self._name = name
        self._value = float(value)

    def apply(self, document: ModelDocument) -> None:
        document["parameters"][self._name] = self._value
