# Copyright (C) 2026 The perisolve authors. All rights reserved.
# SPDX-License-Identifier: MIT

"""
This module provides classes for composing model documents programmatically: death rates,
migration between patches, delayed birth terms and named parameters are recorded as commands,
builders are merged with the "|" operator, and the resulting document is validated by the model
loader.
"""

import json
import logging
from pathlib import Path
from typing import List, Mapping

from perisolve.builders.terms import (
    DeathRateCommand,
    DensityTermCommand,
    DiscreteTermCommand,
    MigrationCommand,
    ModelCommand,
    ModelDocument,
    ParameterCommand,
    Source,
)
from perisolve.model import SystemModel, load_model
from perisolve.sysutils import PathType, mkdir_for_path

logger = logging.getLogger(__name__)


def _assemble_document(
    n: int, omega: Source, name: str, commands: List[ModelCommand]
) -> ModelDocument:
    """
    Applies a list of commands to an empty model document.

    Parameters:
        n (int): Number of patches.
        omega (Source): The period.
        name (str): The model name.
        commands (List[ModelCommand]): The commands, applied in order.

    Returns:
        ModelDocument: The assembled document; parameters come first so that they read first.
    """
    document: ModelDocument = {
        "name": name,
        "parameters": {},
        "n": n,
        "omega": omega,
        "equations": [{"a": {}, "terms": []} for _ in range(n)],
    }
    for command in commands:
        command.apply(document=document)
    if not document["parameters"]:
        del document["parameters"]
    return document


class PartialModelBuilder:
    """
    A class to record model fragments that can be extended or merged before the number of patches
    and the period are fixed.
    """

    def __init__(self) -> None:
        """
        Initializes a PartialModelBuilder with an empty list of commands.
        """
        self._commands: List[ModelCommand] = []

    def __or__(self, other: "PartialModelBuilder") -> "PartialModelBuilder":
        """
        Merges the current builder with another one, combining their commands.

        Parameters:
            other (PartialModelBuilder): The other builder to merge with.

        Returns:
            PartialModelBuilder: A new builder instance with combined commands.
        """
        result_builder = PartialModelBuilder()
        result_builder._extend(other=self)
        result_builder._extend(other=other)
        return result_builder

    def _extend(self, other: "PartialModelBuilder") -> None:
        # pylint: disable=protected-access
        self._commands.extend(other._commands)

    def equation(self, i: int, d: Source) -> None:
        """
        Sets the death rate of equation i.

        Parameters:
            i (int): 0-based equation index.
            d (Source): The death rate d_i(t), an expression or a number.
        """
        self._commands.append(DeathRateCommand(i=i, d=d))

    def migration(self, i: int, j: int, rate: Source) -> None:
        """
        Sets the immigration rate a_ij(t) from patch j into patch i.

        Parameters:
            i (int): 0-based target patch.
            j (int): 0-based source patch, different from i.
            rate (Source): The rate a_ij(t).
        """
        self._commands.append(MigrationCommand(i=i, j=j, rate=rate))

    # pylint: disable=too-many-arguments
    def discrete_term(
        self,
        i: int,
        beta: Source,
        tau: Source,
        nonlinearity: str = "ricker",
        c: Source = 1.0,
        alpha: float | None = None,
    ) -> None:
        """
        Appends a birth term with a discrete delay, beta(t) h(t, x_i(t - tau(t))), to equation i.

        Parameters:
            i (int): 0-based equation index.
            beta (Source): The birth coefficient.
            tau (Source): The delay.
            nonlinearity (str): The nonlinearity family.
            c (Source): The coefficient c(t) of the nonlinearity.
            alpha (float | None): The exponent of the nonlinearity, where it has one.
        """
        self._commands.append(
            DiscreteTermCommand(
                i=i, beta=beta, tau=tau, nonlinearity=nonlinearity, c=c, alpha=alpha
            )
        )

    # pylint: disable=too-many-arguments
    def density_term(
        self,
        i: int,
        beta: Source,
        tau: Source,
        gamma: Source = 1.0,
        nonlinearity: str = "ricker",
        c: Source = 1.0,
        alpha: float | None = None,
    ) -> None:
        """
        Appends a birth term with a delay density on [t - tau(t), t] to equation i.

        Parameters:
            i (int): 0-based equation index.
            beta (Source): The birth coefficient.
            tau (Source): The length of the delay window.
            gamma (Source): The density gamma(s).
            nonlinearity (str): The nonlinearity family.
            c (Source): The coefficient c(s) of the nonlinearity.
            alpha (float | None): The exponent of the nonlinearity, where it has one.
        """
        self._commands.append(
            DensityTermCommand(
                i=i, beta=beta, tau=tau, gamma=gamma, nonlinearity=nonlinearity, c=c, alpha=alpha
            )
        )

    def parameter(self, name: str, value: float) -> None:
        """
        Declares a named parameter; later declarations of the same name win.

        Parameters:
            name (str): The identifier used in expressions.
            value (float): The default value.
        """
        self._commands.append(ParameterCommand(name=name, value=value))


class ModelBuilder(PartialModelBuilder):
    """
    A builder for complete models, with a fixed number of patches and a fixed period.
    """

    def __init__(self, n: int, omega: Source, name: str = "") -> None:
        """
        Initializes the ModelBuilder.

        Parameters:
            n (int): Number of patches.
            omega (Source): The period, a positive number or a constant expression such as "pi".
            name (str): The model name.
        """
        super().__init__()
        self._n = n
        self._omega = omega if isinstance(omega, str) else float(omega)
        self._name = name

    @property
    def name(self) -> str:
        """
        The model name.
        """
        return self._name

    def __or__(self, other: PartialModelBuilder) -> "ModelBuilder":
        """
        Merges the current ModelBuilder with another builder.

        Parameters:
            other (PartialModelBuilder): Another builder to merge with.

        Returns:
            ModelBuilder: A new ModelBuilder with the same size, period and name.
        """
        result_builder = ModelBuilder(n=self._n, omega=self._omega, name=self._name)
        result_builder._extend(other=self)
        result_builder._extend(other=other)
        return result_builder

    def document(self) -> ModelDocument:
        """
        Returns the JSON-ready model document.

        Raises:
            ModelSchemaError: If a command refers to a patch outside the model.
        """
        return _assemble_document(
            n=self._n, omega=self._omega, name=self._name, commands=self._commands
        )

    def build(self, parameters: Mapping[str, float] | None = None) -> SystemModel:
        """
        Validates the document and returns the model.

        Parameters:
            parameters (Mapping[str, float] | None): Overrides for the declared parameters.

        Returns:
            SystemModel: The validated model.
        """
        return load_model(document=self.document(), parameters=parameters, name=self._name)

    def save(self, path: PathType) -> None:
        """
        Writes the model document as a JSON file.

        Parameters:
            path (PathType): The destination file.
        """
        mkdir_for_path(path=path)
        text = json.dumps(self.document(), indent=2) + "\n"
        Path(path).write_text(text, encoding="utf-8")
        logger.info("Saved model %s to %s", self._name, path)


__all__ = [
    "ModelBuilder",
    "PartialModelBuilder",
]
