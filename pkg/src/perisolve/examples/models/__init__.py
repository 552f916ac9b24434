# Copyright (C) 2026 The perisolve authors. All rights reserved.
# SPDX-License-Identifier: MIT

"""
This module provides ready-made builders for the periodic population systems shipped as fixtures:
planar Mackey-Glass and distributed-delay Nicholson systems with migration, scalar Nicholson
equations, a planar Nicholson system with a delay equal to a multiple of the period, an autonomous
patch system, and an extinction control.
"""

import math
from typing import Callable, Dict

from perisolve.builders import ModelBuilder


def planar_mackey_glass(
    eps1: float = 1.0,
    eps2: float = 1.0,
    delta1: float = 2.0,
    delta2: float = 2.0,
    alpha: float = 1.0,
    beta: float = 1.0,
) -> ModelBuilder:
    """
    Creates the pi-periodic planar system of Mackey-Glass type with time-dependent delays
    sin^2 t and cos^2 t and symmetric migration |cos 2t|.

    Parameters:
        eps1 (float): Constant part of the first death rate.
        eps2 (float): Constant part of the second death rate.
        delta1 (float): Constant part of the first birth coefficient.
        delta2 (float): Constant part of the second birth coefficient.
        alpha (float): Exponent of the first nonlinearity, at least 1.
        beta (float): Exponent of the second nonlinearity, at least 1.

    Returns:
        ModelBuilder: The builder; eps1, eps2, delta1 and delta2 are declared parameters.
    """
    builder = ModelBuilder(n=2, omega="pi", name="example_3_1")
    builder.parameter(name="eps1", value=eps1)
    builder.parameter(name="eps2", value=eps2)
    builder.parameter(name="delta1", value=delta1)
    builder.parameter(name="delta2", value=delta2)

    builder.equation(i=0, d="eps1 + sin(t)^2")
    builder.migration(i=0, j=1, rate="abs(cos(2*t))")
    builder.discrete_term(
        i=0,
        beta="delta1 + cos(t)^2",
        tau="sin(t)^2",
        nonlinearity="mackey_glass",
        c="exp(-sin(t)^2)",
        alpha=alpha,
    )

    builder.equation(i=1, d="eps2 + cos(t)^2")
    builder.migration(i=1, j=0, rate="abs(cos(2*t))")
    builder.discrete_term(
        i=1,
        beta="delta2 + sin(t)^2",
        tau="cos(t)^2",
        nonlinearity="mackey_glass",
        c="2 + cos(2*t)",
        alpha=beta,
    )
    return builder


def planar_distributed_nicholson(
    a12: float = 1.0,
    a21: float = 1.0,
    eps1: float = 1.0,
    eps2: float = 1.0,
    beta1: float = 1.0,
    beta2: float = 1.0,
) -> ModelBuilder:
    """
    Creates the pi-periodic planar Nicholson system with uniform delay densities on windows of
    length beta_i exp(-cos^2 t) + 1 (resp. exp(-sin^2 t)), so that the aggregated birth
    coefficients are beta_1 + exp(cos^2 t) and beta_2 + exp(sin^2 t).

    Returns:
        ModelBuilder: The builder; every argument is a declared parameter.
    """
    builder = ModelBuilder(n=2, omega="pi", name="example_3_2")
    builder.parameter(name="a12", value=a12)
    builder.parameter(name="a21", value=a21)
    builder.parameter(name="eps1", value=eps1)
    builder.parameter(name="eps2", value=eps2)
    builder.parameter(name="beta1", value=beta1)
    builder.parameter(name="beta2", value=beta2)

    builder.equation(i=0, d="eps1 + cos(t)^2")
    builder.migration(i=0, j=1, rate="a12*exp(-2 + sin(t)^2)")
    builder.density_term(
        i=0, beta="exp(cos(t)^2)", tau="beta1*exp(-cos(t)^2) + 1", c="1 + abs(sin(t))"
    )

    builder.equation(i=1, d="eps2 + sin(t)^2")
    builder.migration(i=1, j=0, rate="a21*exp(cos(t)^2)")
    builder.density_term(
        i=1, beta="exp(sin(t)^2)", tau="beta2*exp(-sin(t)^2) + 1", c="exp(sin(2*t))"
    )
    return builder


def scalar_nicholson(
    d: float = 1.0,
    beta: float = math.exp(2.0),
    c: float = 1.0,
    tau: float = 1.0,
    omega: float = 1.0,
) -> ModelBuilder:
    """
    Creates the autonomous scalar Nicholson equation x' = -d x + beta x(t - tau) exp(-c x(t - tau)).
    Its positive equilibrium is log(beta / d) / c, which is 2 for the defaults.
    """
    builder = ModelBuilder(n=1, omega=omega, name="scalar_nicholson")
    builder.parameter(name="d", value=d)
    builder.parameter(name="beta", value=beta)
    builder.parameter(name="c", value=c)
    builder.parameter(name="tau", value=tau)
    builder.equation(i=0, d="d")
    builder.discrete_term(i=0, beta="beta", tau="tau", c="c")
    return builder


def periodic_nicholson(amplitude: float = 1.0, delay: str = "pi") -> ModelBuilder:
    """
    Creates the pi-periodic scalar Nicholson equation with d = 1, beta(t) = 4 + amplitude sin^2 t,
    c = 1 and the given delay.

    Parameters:
        amplitude (float): Amplitude of the periodic part of the birth coefficient.
        delay (str): The delay expression, pi by default (one period).

    Returns:
        ModelBuilder: The builder.
    """
    builder = ModelBuilder(n=1, omega="pi", name="periodic_nicholson")
    builder.parameter(name="amplitude", value=amplitude)
    builder.equation(i=0, d=1.0)
    builder.discrete_term(i=0, beta="4 + amplitude*sin(t)^2", tau=delay, c=1.0)
    return builder


def half_period_delay() -> ModelBuilder:
    """
    Creates the periodic scalar Nicholson equation with a delay of half a period, which is not a
    multiple of the period of its coefficients.
    """
    base = periodic_nicholson(delay="pi/2")
    builder = ModelBuilder(n=1, omega="pi", name="half_period_delay")
    return builder | base


def planar_nicholson(
    a: float = 2.0,
    b: float = 0.5,
    c: float = 3.0,
    amplitude: float = 1.0,
    multiple: int = 1,
) -> ModelBuilder:
    """
    Creates a 1-periodic planar Nicholson system with one discrete delay equal to a multiple of the
    period: death rates a, migration b in both directions and birth coefficients
    c + amplitude cos(2 pi t) (resp. sin).

    Parameters:
        a (float): Death rate of both patches.
        b (float): Migration rate between the patches.
        c (float): Mean birth coefficient.
        amplitude (float): Amplitude of the periodic part of the birth coefficients.
        multiple (int): The delay in periods.

    Returns:
        ModelBuilder: The builder; a, b, c and amplitude are declared parameters.
    """
    builder = ModelBuilder(n=2, omega=1.0, name="planar_nicholson")
    builder.parameter(name="a", value=a)
    builder.parameter(name="b", value=b)
    builder.parameter(name="c", value=c)
    builder.parameter(name="amplitude", value=amplitude)
    for i, wave in enumerate(("cos", "sin")):
        builder.equation(i=i, d="a")
        builder.migration(i=i, j=1 - i, rate="b")
        builder.discrete_term(i=i, beta=f"c + amplitude*{wave}(2*pi*t)", tau=float(multiple), c=1.0)
    return builder


def autonomous_patches(
    d: float = 2.0, a: float = 0.5, beta: float = 3.0, taus: tuple = (1.0, 2.0)
) -> ModelBuilder:
    """
    Creates an autonomous two-patch Nicholson system with symmetric migration and the birth rate
    split evenly over several discrete delays.
    """
    builder = ModelBuilder(n=2, omega=1.0, name="autonomous_patches")
    builder.parameter(name="d", value=d)
    builder.parameter(name="a", value=a)
    builder.parameter(name="beta", value=beta)
    share = f"beta/{len(taus)}"
    for i in range(2):
        builder.equation(i=i, d="d")
        builder.migration(i=i, j=1 - i, rate="a")
        for tau in taus:
            builder.discrete_term(i=i, beta=share, tau=float(tau), c=1.0)
    return builder


def extinction() -> ModelBuilder:
    """
    Creates the scalar Nicholson equation with birth rate below the death rate, whose solutions
    tend to zero.
    """
    builder = ModelBuilder(n=1, omega=1.0, name="extinction")
    builder.equation(i=0, d=1.0)
    builder.discrete_term(i=0, beta=0.5, tau=1.0, c=1.0)
    return builder


FIXTURES: Dict[str, Callable[[], ModelBuilder]] = {
    "example_3_1": planar_mackey_glass,
    "example_3_2": planar_distributed_nicholson,
    "scalar_nicholson": scalar_nicholson,
    "periodic_nicholson": periodic_nicholson,
    "half_period_delay": half_period_delay,
    "planar_nicholson": planar_nicholson,
    "autonomous_patches": autonomous_patches,
    "extinction": extinction,
}
