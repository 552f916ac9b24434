# Copyright (C) 2026 The perisolve authors. All rights reserved.
# SPDX-License-Identifier: MIT

"""
Global attractivity criteria for Nicholson systems with Ricker births: the ratios alpha_i(v) and
gamma_i(v) of the birth coefficient to the net loss along a vector v, the detection of delays that
are multiples of the period, and the bound delta(x) on the difference quotients of x exp(-x).
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, List, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from perisolve.errors import HypothesisError
from perisolve.expr import check_periodicity
from perisolve.linalg import find_positive_vector
from perisolve.model import (
    CONSTANCY_TOLERANCE,
    DelayTerm,
    SystemModel,
    beta_i,
    matrix_series,
)

logger = logging.getLogger(__name__)

GRID_POINTS = 512
TIME_TOLERANCE = 1e-10
MULTIPLE_TOLERANCE = 1e-9
MAX_MULTIPLE = 100
MAX_DENOMINATOR = 16
TAYLOR_THRESHOLD = 1e-7
DELTA_GRID = 4096
BOUNDARY_TOLERANCE = 1e-12

ScalarFunction = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Extrema:
    """
    Minimum and maximum of a periodic function, with the times where they are attained.
    """

    minimum: float
    argmin: float
    maximum: float
    argmax: float


def extrema(function: ScalarFunction, omega: float, points: int = GRID_POINTS) -> Extrema:
    """
    Locates the extrema of an omega-periodic function: a grid scan refined by bounded scalar
    minimisation on the two grid cells around each grid extremum.

    Parameters:
        function (ScalarFunction): Vectorised function of time.
        omega (float): The period.
        points (int): Number of grid points.

    Returns:
        Extrema: Refined minimum and maximum.
    """
    step = omega / points
    times = np.arange(points) * step
    values = np.asarray(function(times), dtype=float)
    lowest = int(np.argmin(values))
    highest = int(np.argmax(values))
    low, t_low = _refine(function=function, center=float(times[lowest]), step=step, sign=1.0)
    high, t_high = _refine(function=function, center=float(times[highest]), step=step, sign=-1.0)
    if low > values[lowest]:
        low, t_low = float(values[lowest]), float(times[lowest])
    if high < values[highest]:
        high, t_high = float(values[highest]), float(times[highest])
    return Extrema(minimum=low, argmin=t_low, maximum=high, argmax=t_high)


def _refine(
    function: ScalarFunction, center: float, step: float, sign: float
) -> Tuple[float, float]:
    result = minimize_scalar(
        lambda s: sign * float(np.asarray(function(np.array([s])))[0]),
        bounds=(center - step, center + step),
        method="bounded",
        options={"xatol": TIME_TOLERANCE},
    )
    return sign * float(result.fun), float(result.x)


def _ratio_function(model: SystemModel, v: np.ndarray, i: int) -> ScalarFunction:
    def ratio(times: np.ndarray) -> np.ndarray:
        series = matrix_series(model=model, times=times)
        loss = series.d[:, i] * v[i] - series.a[:, i, :] @ v
        if np.any(loss <= 0.0):
            worst = int(np.argmin(loss))
            raise HypothesisError(
                f"equation {i + 1}: d_i v_i - sum_j a_ij v_j = {loss[worst]!r} is not positive "
                f"at t={times[worst]!r}"
            )
        return beta_i(model=model, i=i, t=times) * v[i] / loss

    return ratio


def compute_alpha_gamma(
    model: SystemModel, v: np.ndarray | None = None, points: int = GRID_POINTS
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Computes alpha_i(v) and gamma_i(v), the minimum and maximum over a period of
    beta_i(t) v_i / (d_i(t) v_i - sum_j a_ij(t) v_j).

    Parameters:
        model (SystemModel): The model.
        v (np.ndarray | None): A positive vector (defaults to all ones).
        points (int): Grid points before refinement.

    Returns:
        Tuple[np.ndarray, np.ndarray]: alpha and gamma, one entry per equation.

    Raises:
        HypothesisError: If a denominator is not positive somewhere on the grid.
    """
    v = _as_weight(model=model, v=v)
    alpha = np.empty(model.n)
    gamma = np.empty(model.n)
    for i in range(model.n):
        ratio = _ratio_function(model=model, v=v, i=i)
        bounds = extrema(function=ratio, omega=model.omega, points=points)
        alpha[i] = bounds.minimum
        gamma[i] = bounds.maximum
    return alpha, gamma


def _as_weight(model: SystemModel, v: np.ndarray | None) -> np.ndarray:
    if v is None:
        return np.ones(model.n)
    v = np.asarray(v, dtype=float)
    if v.shape != (model.n,) or np.any(v <= 0.0):
        raise ValueError(f"v must be a positive vector with {model.n} entries, got {v}")
    return v


def ricker_c_bounds(model: SystemModel, points: int = GRID_POINTS) -> Tuple[np.ndarray, np.ndarray]:
    """
    Returns c_i^- and c_i^+, the extrema over a period and over the terms of equation i of the
    Ricker coefficients c(t).

    Raises:
        HypothesisError: If a nonlinearity is not of Ricker type or an equation has no term.
    """
    if not model.is_nicholson():
        raise HypothesisError("every birth nonlinearity must be of Ricker type")
    lower = np.full(model.n, np.inf)
    upper = np.full(model.n, -np.inf)
    for i, _, term in model.terms():
        bounds = extrema(function=term.nonlinearity.c, omega=model.omega, points=points)
        lower[i] = min(lower[i], bounds.minimum)
        upper[i] = max(upper[i], bounds.maximum)
    if np.any(np.isinf(lower)):
        raise HypothesisError("every equation needs a birth term")
    return lower, upper


def default_weight(model: SystemModel, points: int = 256) -> np.ndarray:
    """
    The vector v used when none is given: the witness of M(t) v >> 0 when one exists, else ones.
    """
    times = model.grid(points)
    result = find_positive_vector(
        matrices=matrix_series(model=model, times=times).m(),
        times=times,
        matrix_fn=lambda grid: matrix_series(model=model, times=grid).m(),
        period=model.omega,
    )
    return result.witness if result.found else np.ones(model.n)


@dataclass(frozen=True, eq=False)
class AttractivityReport:
    """
    The quantities of the global attractivity criterion for a weight vector v.
    """

    v: np.ndarray
    alpha: np.ndarray | None
    gamma: np.ndarray | None
    c_minus: np.ndarray
    c_plus: np.ndarray
    c0: float
    c0_sup: float
    threshold: float
    delays_are_multiples: bool
    delay_multiples: List[List[int | None]]
    effective_period: float
    extended_case: bool
    condition_met: bool
    reason: str | None = None
    confirmation: float | None = field(default=None)


def _delay_ratio(model: SystemModel, term: DelayTerm) -> float | None:
    if not term.kernel.is_discrete:
        return None
    tau = term.kernel.tau
    if not (tau.is_constant or tau.range_on(model.grid()) < CONSTANCY_TOLERANCE):
        return None
    return float(tau(0.0)) / model.omega


def _delay_multiples(model: SystemModel) -> Tuple[List[List[int | None]], float]:
    ratios = [
        [_delay_ratio(model=model, term=term) for term in equation.terms]
        for equation in model.equations
    ]
    flat = [ratio for row in ratios for ratio in row]
    if any(ratio is None for ratio in flat):
        return [[None] * len(row) for row in ratios], model.omega
    fractions = [Fraction(ratio).limit_denominator(MAX_DENOMINATOR) for ratio in flat]
    denominators = [
        fraction.denominator
        for fraction, ratio in zip(fractions, flat)
        if abs(ratio - float(fraction)) * model.omega <= MULTIPLE_TOLERANCE and fraction > 0
    ]
    if len(denominators) != len(flat):
        return [[None] * len(row) for row in ratios], model.omega
    common = math.lcm(*denominators)
    period = model.omega / common
    if common > 1 and not all(
        check_periodicity(expr.node, period).periodic for _, _, expr in model.coefficients()
    ):
        logger.debug(
            "Delays are rational multiples of omega but the coefficients are not %s-periodic",
            period,
        )
        return [[None] * len(row) for row in ratios], model.omega

    def multiple(ratio: float) -> int | None:
        count = round(ratio * common)
        if 1 <= count <= MAX_MULTIPLE and abs(ratio * model.omega - count * period) <= (
            MULTIPLE_TOLERANCE
        ):
            return int(count)
        return None

    return [[multiple(ratio) for ratio in row] for row in ratios], period


def check_attractivity(
    model: SystemModel, v: np.ndarray | None = None, points: int = GRID_POINTS
) -> AttractivityReport:
    """
    Evaluates the global attractivity criterion for Nicholson systems whose delays are constant
    multiples of the period: alpha_i(v) > 1 and gamma_i(v) < exp(2 c0(v) / c0_sup(v)), where
    c0(v) = min_i v_i c_i^- and c0_sup(v) = max_i v_i c_i^+.

    Delays that are rational multiples p/q of the period (q <= 16) count as multiples of the
    reduced period when every coefficient is periodic with that reduced period. Several delay
    terms per equation are accepted when all of them qualify (reported as extended_case).

    Parameters:
        model (SystemModel): A model with Ricker nonlinearities only.
        v (np.ndarray | None): The weight vector; defaults to the witness of M(t) v >> 0.
        points (int): Grid points for the extrema.

    Returns:
        AttractivityReport: The report; condition_met summarises the criterion.

    Raises:
        HypothesisError: If a nonlinearity is not of Ricker type.
    """
    c_minus, c_plus = ricker_c_bounds(model=model, points=points)
    v = default_weight(model=model) if v is None else _as_weight(model=model, v=v)
    c0 = float(np.min(v * c_minus))
    c0_sup = float(np.max(v * c_plus))
    threshold = math.exp(2.0 * c0 / c0_sup)
    multiples, period = _delay_multiples(model=model)
    delays_ok = all(m is not None for row in multiples for m in row)
    extended = any(len(equation.terms) > 1 for equation in model.equations)
    reason = None
    alpha = gamma = None
    try:
        alpha, gamma = compute_alpha_gamma(model=model, v=v, points=points)
    except HypothesisError as err:
        reason = str(err)
    met = False
    if alpha is not None:
        below = np.max(gamma) < threshold * (1.0 - BOUNDARY_TOLERANCE)
        met = bool(np.min(alpha) > 1.0 and below and delays_ok)
        if np.min(alpha) <= 1.0:
            reason = f"min alpha_i(v) = {np.min(alpha)!r} is not above 1"
        elif not below:
            reason = f"max gamma_i(v) = {np.max(gamma)!r} is not below {threshold!r}"
    if not delays_ok and reason is None:
        reason = "delays are not constant multiples of the period"
    logger.info("Attractivity of %s with v=%s: %s", model.name, v, "met" if met else reason)
    return AttractivityReport(
        v=v,
        alpha=alpha,
        gamma=gamma,
        c_minus=c_minus,
        c_plus=c_plus,
        c0=c0,
        c0_sup=c0_sup,
        threshold=threshold,
        delays_are_multiples=delays_ok,
        delay_multiples=multiples,
        effective_period=period,
        extended_case=extended,
        condition_met=met,
        reason=reason,
    )


@dataclass(frozen=True, eq=False)
class AutonomousAttractivityReport:
    """
    The criterion for autonomous Nicholson systems: 1 < gamma_i(v) < exp(2 min(v c) / max(v c)).
    """

    v: np.ndarray
    gamma: np.ndarray
    threshold: float
    allow_boundary: bool
    simplified: bool
    condition_met: bool


def check_autonomous_attractivity(
    model: SystemModel,
    v: np.ndarray | None = None,
    allow_boundary: bool = False,
    simplified: bool = False,
) -> AutonomousAttractivityReport:
    """
    Checks the attractivity criterion of the positive equilibrium of an autonomous Nicholson
    system, whatever its (constant) delays.

    Parameters:
        model (SystemModel): An autonomous model with Ricker nonlinearities.
        v (np.ndarray | None): The weight vector; defaults to the witness of M v >> 0.
        allow_boundary (bool): Accept gamma_i(v) equal to the threshold.
        simplified (bool): Use v = 1 (the plain ratios beta_i / (d_i - sum_j a_ij)).

    Raises:
        HypothesisError: If the model is not autonomous, a nonlinearity is not Ricker, or a
                         denominator is not positive.
    """
    if not model.is_autonomous():
        raise HypothesisError(f"model {model.name} does not have constant coefficients")
    c_minus, c_plus = ricker_c_bounds(model=model, points=16)
    if simplified:
        v = np.ones(model.n)
    else:
        v = default_weight(model=model, points=16) if v is None else _as_weight(model, v)
    series = matrix_series(model=model, times=np.zeros(1))
    loss = series.d[0] * v - series.a[0] @ v
    if np.any(loss <= 0.0):
        raise HypothesisError(f"d_i v_i - sum_j a_ij v_j must be positive, got {loss}")
    gamma = series.b[0] * v / loss
    threshold = math.exp(2.0 * float(np.min(v * c_minus)) / float(np.max(v * c_plus)))
    if allow_boundary:
        upper = np.all(gamma <= threshold * (1.0 + BOUNDARY_TOLERANCE))
    else:
        upper = np.all(gamma < threshold * (1.0 - BOUNDARY_TOLERANCE))
    return AutonomousAttractivityReport(
        v=v,
        gamma=gamma,
        threshold=threshold,
        allow_boundary=allow_boundary,
        simplified=simplified,
        condition_met=bool(np.all(gamma > 1.0) and upper),
    )


def difference_quotient(x: float, y: np.ndarray | float) -> np.ndarray | float:
    """
    G_x(y) = (h(y) - h(x)) / (y - x) for h(y) = y exp(-y), extended by h'(x) at y = x.
    """
    y_array = np.asarray(y, dtype=float)
    gap = y_array - x
    near = np.abs(gap) < TAYLOR_THRESHOLD
    safe_gap = np.where(near, 1.0, gap)
    quotient = (y_array * np.exp(-y_array) - x * math.exp(-x)) / safe_gap
    # second order expansion around x
    taylor = (1.0 - x) * math.exp(-x) + 0.5 * (x - 2.0) * math.exp(-x) * gap
    result = np.where(near, taylor, quotient)
    return float(result) if np.ndim(y) == 0 else result


def delta_of_x(x: float, m: float, y_max: float = 50.0) -> float:
    """
    Computes delta(x) = max over y in [m, y_max] of |G_x(y)|: a 4096-point grid scan refined by
    bounded scalar minimisation around the best grid point.

    Parameters:
        x (float): A point of (0, 2).
        m (float): The lower end of the search range, in (0, 1).
        y_max (float): The upper end of the search range.

    Returns:
        float: delta(x).

    Raises:
        ValueError: If x is outside (0, 2) or m outside (0, 1).
    """
    if not 0.0 < x < 2.0:
        raise ValueError(f"x must lie in (0, 2), got {x}")
    if not 0.0 < m < 1.0:
        raise ValueError(f"m must lie in (0, 1), got {m}")
    grid = np.linspace(m, y_max, DELTA_GRID)
    values = np.abs(difference_quotient(x=x, y=grid))
    best = int(np.argmax(values))
    low = grid[max(best - 1, 0)]
    high = grid[min(best + 1, DELTA_GRID - 1)]
    result = minimize_scalar(
        lambda y: -abs(difference_quotient(x=x, y=y)),
        bounds=(low, high),
        method="bounded",
        options={"xatol": TIME_TOLERANCE},
    )
    return max(float(values[best]), -float(result.fun))


__all__ = [
    "AttractivityReport",
    "AutonomousAttractivityReport",
    "Extrema",
    "check_attractivity",
    "check_autonomous_attractivity",
    "compute_alpha_gamma",
    "default_weight",
    "delta_of_x",
    "difference_quotient",
    "extrema",
    "ricker_c_bounds",
]
