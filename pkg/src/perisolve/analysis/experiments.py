# Copyright (C) 2026 The perisolve authors. All rights reserved.
# SPDX-License-Identifier: MIT

"""
Numerical experiments giving empirical evidence for permanence and global attractivity.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from perisolve.integrator import (
    HistoryFunction,
    Integrator,
    SolverConfig,
    constant_history,
    history_span,
)
from perisolve.model import SystemModel

logger = logging.getLogger(__name__)

HISTORY_RANGE = (1e-3, 1e2)
PERMANENCE_FLOOR = 1e-6


@dataclass(frozen=True, eq=False)
class PermanenceEstimate:
    """
    Empirical bounds m_emp <= x_i(t) <= l_emp over the tail window of random trials.
    """

    m_emp: float
    l_emp: float
    trials: int
    horizon_periods: int
    tail_periods: int
    seed: int
    permanence_observed: bool
    trial_minima: List[float] = field(default_factory=list)
    trial_maxima: List[float] = field(default_factory=list)


def _tail_range(
    model: SystemModel,
    value: np.ndarray,
    horizon_periods: int,
    tail_periods: int,
    config: SolverConfig,
) -> Tuple[float, float]:
    integrator = Integrator(
        model=model,
        initial_history=constant_history(model=model, value=value, config=config),
        config=config,
        capacity_periods=horizon_periods,
    )
    integrator.advance(steps=horizon_periods * config.steps_per_period)
    tail = integrator.history.values[-(tail_periods * config.steps_per_period + 1) :]
    return float(np.min(tail)), float(np.max(tail))


def estimate_permanence(
    model: SystemModel,
    trials: int = 20,
    horizon_periods: int = 200,
    tail_periods: int = 20,
    seed: int = 0,
    config: SolverConfig | None = None,
    jobs: int = 1,
) -> PermanenceEstimate:
    """
    Integrates the model from random constant histories, log-uniform in [1e-3, 1e2] per component,
    and records the extreme values over the last periods.

    Parameters:
        model (SystemModel): The model.
        trials (int): Number of random histories.
        horizon_periods (int): Integration horizon in periods.
        tail_periods (int): Length of the observation window at the end of the horizon.
        seed (int): Seed of the random generator.
        config (SolverConfig | None): Numerical settings.
        jobs (int): Number of worker processes; results keep the trial order.

    Returns:
        PermanenceEstimate: The empirical bounds.

    Raises:
        PositivityError: If a trial leaves the nonnegative cone.
    """
    if not 0 < tail_periods <= horizon_periods:
        raise ValueError(f"tail_periods must lie in [1, {horizon_periods}], got {tail_periods}")
    config = config or SolverConfig()
    rng = np.random.default_rng(seed)
    low, high = np.log(HISTORY_RANGE[0]), np.log(HISTORY_RANGE[1])
    values = np.exp(rng.uniform(low, high, size=(trials, model.n)))
    arguments = [(model, value, horizon_periods, tail_periods, config) for value in values]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            ranges = list(executor.map(_tail_range, *zip(*arguments)))
    else:
        ranges = [_tail_range(*argument) for argument in arguments]
    minima = [low_value for low_value, _ in ranges]
    maxima = [high_value for _, high_value in ranges]
    m_emp = min(minima)
    logger.info("Permanence of %s over %s trials: [%s, %s]", model.name, trials, m_emp, max(maxima))
    return PermanenceEstimate(
        m_emp=m_emp,
        l_emp=max(maxima),
        trials=trials,
        horizon_periods=horizon_periods,
        tail_periods=tail_periods,
        seed=seed,
        permanence_observed=m_emp > PERMANENCE_FLOOR,
        trial_minima=minima,
        trial_maxima=maxima,
    )


def convergence_experiment(
    model: SystemModel,
    phi_a: HistoryFunction,
    phi_b: HistoryFunction,
    horizon_periods: int,
    config: SolverConfig | None = None,
) -> float:
    """
    Integrates two solutions and returns the largest difference between them over the final
    period, at the integration knots.

    Raises:
        PositivityError: If a solution leaves the nonnegative cone.
    """
    config = config or SolverConfig()
    steps = config.steps_per_period
    tails = []
    for history in (phi_a, phi_b):
        integrator = Integrator(
            model=model, initial_history=history, config=config, capacity_periods=horizon_periods
        )
        integrator.advance(steps=horizon_periods * steps)
        tails.append(np.asarray(integrator.history.values[-(steps + 1) :]))
    difference = float(np.max(np.abs(tails[0] - tails[1])))
    logger.info(
        "Tail difference of %s after %s periods: %s", model.name, horizon_periods, difference
    )
    return difference


def constant_pair(
    model: SystemModel, low: float, high: float, config: SolverConfig | None = None
) -> Tuple[HistoryFunction, HistoryFunction]:
    """
    Two constant initial histories, e.g. for convergence_experiment.
    """
    config = config or SolverConfig()
    span = history_span(model=model, config=config)
    return (
        HistoryFunction.constant(value=np.full(model.n, low), t_start=-span),
        HistoryFunction.constant(value=np.full(model.n, high), t_start=-span),
    )


__all__ = [
    "PermanenceEstimate",
    "constant_pair",
    "convergence_experiment",
    "estimate_permanence",
]
