# Copyright (C) 2026 The perisolve authors. All rights reserved.
# SPDX-License-Identifier: MIT

"""
This module integrates a model forward in time by the method of steps: classical fourth order
Runge-Kutta with a fixed step dividing the period, delayed lookups answered by the dense cubic
Hermite history of the solution, and delay densities integrated by the composite trapezoid rule.
"""

import dataclasses
import logging
import time
from dataclasses import dataclass
from typing import Callable, List, NamedTuple

import numpy as np
from scipy.integrate import trapezoid

from perisolve.errors import InitialHistoryError, PositivityError
from perisolve.integrator.history import HistoryFunction
from perisolve.model import DelayTerm, SystemModel, tabulate
from perisolve.model.nonlinearities import Nonlinearity
from perisolve.sysutils import PathType, write_csv

logger = logging.getLogger(__name__)

MIN_STEPS_PER_PERIOD = 32


@dataclass(frozen=True)
class SolverConfig:
    """
    Numerical settings shared by the integrator and the periodic machinery.
    """

    steps_per_period: int = 256
    quad_nodes: int = 33
    positivity_tolerance: float = 1e-10

    def __post_init__(self) -> None:
        if self.steps_per_period < MIN_STEPS_PER_PERIOD:
            raise ValueError(
                f"steps_per_period must be at least {MIN_STEPS_PER_PERIOD}, "
                f"got {self.steps_per_period}"
            )
        if self.quad_nodes < 3 or self.quad_nodes % 2 == 0:
            raise ValueError(f"quad_nodes must be odd and at least 3, got {self.quad_nodes}")
        if self.positivity_tolerance < 0.0:
            raise ValueError("positivity_tolerance must be nonnegative")

    def with_overrides(self, **overrides) -> "SolverConfig":
        """
        Returns a copy with the given fields replaced; None values are ignored.
        """
        return dataclasses.replace(
            self, **{key: value for key, value in overrides.items() if value is not None}
        )

    def step(self, omega: float) -> float:
        """
        The integration step for a model of period omega.
        """
        return omega / self.steps_per_period


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    A computed solution: the dense history from the start of the initial history to t_end.
    """

    history: HistoryFunction
    model_name: str
    config: SolverConfig
    t_start: float
    t_end: float
    wall_time: float = 0.0


class _CompiledTerm(NamedTuple):
    component: int
    term: DelayTerm
    nonlinearity: Nonlinearity
    discrete: bool
    beta: List[float]
    tau: List[float]
    c: List[float]


def _compile_terms(model: SystemModel, times: np.ndarray) -> tuple:
    table = tabulate(model=model, times=times)
    terms = []
    for i, k, term in model.terms():
        samples = table.terms[i][k]
        terms.append(
            _CompiledTerm(
                component=i,
                term=term,
                nonlinearity=term.nonlinearity,
                discrete=term.kernel.is_discrete,
                beta=samples.beta.tolist(),
                tau=samples.tau.tolist(),
                c=samples.c.tolist(),
            )
        )
    return table, terms


Lookup = Callable[[int, float], float]
LookupMany = Callable[[int, np.ndarray], np.ndarray]


def _field(
    t: float,
    index: int,
    state: np.ndarray,
    d: np.ndarray,
    a: np.ndarray,
    terms: List[_CompiledTerm],
    lookup: Lookup,
    lookup_many: LookupMany,
    unit: np.ndarray,
) -> np.ndarray:
    result = a @ state - d * state
    for term in terms:
        beta = term.beta[index]
        if beta == 0.0:
            continue
        tau = term.tau[index]
        if term.discrete:
            delayed = max(lookup(term.component, t - tau), 0.0)
            result[term.component] += beta * term.nonlinearity.evaluate(term.c[index], delayed)
        elif tau > 0.0:
            nodes = (t - tau) + tau * unit
            delayed = np.maximum(lookup_many(term.component, nodes), 0.0)
            births = term.term.kernel.gamma(nodes) * term.nonlinearity.evaluate(
                term.nonlinearity.c(nodes), delayed
            )
            result[term.component] += beta * trapezoid(births, dx=tau / (len(unit) - 1))
    return result


def rhs(
    model: SystemModel,
    t: float,
    history: HistoryFunction,
    quad_nodes: int = 33,
) -> np.ndarray:
    """
    Evaluates the right-hand side of the model at time t for a given history.

    Parameters:
        model (SystemModel): The model.
        t (float): The time.
        history (HistoryFunction): A history covering [t - tau_max, t].
        quad_nodes (int): Trapezoid nodes for delay densities.

    Returns:
        np.ndarray: The derivative x'(t).

    Raises:
        HistorySpanError: If a delayed lookup falls outside the history span.
    """
    table, terms = _compile_terms(model=model, times=np.array([t]))
    state = np.asarray(history.evaluate(t), dtype=float)
    return _field(
        t=t,
        index=0,
        state=state,
        d=table.d[0],
        a=table.a[0],
        terms=terms,
        lookup=history.lookup,
        lookup_many=history.evaluate_component,
        unit=np.linspace(0.0, 1.0, quad_nodes),
    )


def history_span(model: SystemModel, config: SolverConfig | None = None) -> float:
    """
    Returns the length of initial history needed to integrate the model from any start time: the
    largest delay, on the validation grid or at the stage times, plus one step.
    """
    config = config or SolverConfig()
    step = config.step(model.omega)
    half_times = np.arange(2 * config.steps_per_period) * (step / 2.0)
    stage_max = max(
        (float(np.max(term.kernel.tau(half_times))) for _, _, term in model.terms()), default=0.0
    )
    longest = max(model.tau_max, stage_max)
    return longest + step if longest > 0.0 else 0.0


def constant_history(
    model: SystemModel, value: float | np.ndarray, config: SolverConfig | None = None
) -> HistoryFunction:
    """
    Returns the constant initial history equal to value, ending at 0 and long enough for the model.
    """
    value = np.broadcast_to(np.asarray(value, dtype=float), (model.n,)).copy()
    return HistoryFunction.constant(value=value, t_start=-history_span(model, config), t_end=0.0)


class Integrator:
    """
    Fixed-step RK4 integration of a model from an initial history.
    The integrator owns its history; several integrators may share one model.
    """

    def __init__(
        self,
        model: SystemModel,
        initial_history: HistoryFunction,
        config: SolverConfig | None = None,
        capacity_periods: int = 4,
    ) -> None:
        """
        Prepares an integration starting at the last knot of the initial history.

        Parameters:
            model (SystemModel): The model.
            initial_history (HistoryFunction): The history; must lie in the admissible cone.
            config (SolverConfig | None): Numerical settings.
            capacity_periods (int): Number of periods of knots to preallocate.

        Raises:
            InitialHistoryError: If the history is negative somewhere, not positive at its end,
                                 too short for the delays, or of the wrong dimension.
        """
        self._model = model
        self._config = config or SolverConfig()
        self._step = self._config.step(model.omega)
        self._t0 = initial_history.t_end
        steps = self._config.steps_per_period
        half_times = self._t0 + np.arange(2 * steps) * (self._step / 2.0)
        self._table, self._terms = _compile_terms(model=model, times=half_times)
        self._d = list(self._table.d)
        self._a = list(self._table.a)
        self._unit = np.linspace(0.0, 1.0, self._config.quad_nodes)
        self._check_history(history=initial_history)
        self._history = initial_history.copy(
            capacity=len(initial_history.knots) + capacity_periods * steps + 1
        )
        self._steps_done = 0
        self._warned_bend = False
        self._x = np.array(self._history.values[-1], dtype=float)
        self._stage_t = self._t0
        self._stage_y = self._x
        self._k1 = np.zeros(model.n)
        self._k1 = self._derivative(index=0, t=self._t0, state=self._x)
        self._history.set_outgoing_slope(self._k1)
        taus = [min(term.tau) for term in self._terms]
        if taus and min(taus) < self._step:
            logger.warning(
                "Model %s has delays shorter than the step (%s < %s); lookups inside the current "
                "step use the stage extension",
                model.name,
                min(taus),
                self._step,
            )

    @property
    def history(self) -> HistoryFunction:
        """
        The dense history computed so far.
        """
        return self._history

    @property
    def t(self) -> float:
        """
        The current time.
        """
        return self._t0 + self._steps_done * self._step

    @property
    def step_size(self) -> float:
        """
        The fixed integration step.
        """
        return self._step

    @property
    def start_time(self) -> float:
        """
        The time at which the integration started.
        """
        return self._t0

    def _check_history(self, history: HistoryFunction) -> None:
        tolerance = self._config.positivity_tolerance
        if history.dimension != self._model.n:
            raise InitialHistoryError(
                f"history has {history.dimension} components, model has {self._model.n}"
            )
        tau_needed = max((max(term.tau) for term in self._terms), default=0.0)
        if history.t_start > self._t0 - tau_needed + 1e-12 * max(1.0, tau_needed):
            raise InitialHistoryError(
                f"history starts at {history.t_start}, delays need {self._t0 - tau_needed}"
            )
        if np.any(history.values < -tolerance):
            raise InitialHistoryError("initial history has negative values")
        if np.any(history.values[-1] <= 0.0):
            raise InitialHistoryError(
                f"initial value {history.values[-1]} is not strictly positive"
            )

    def _lookup(self, component: int, s: float) -> float:
        if s <= self._history.t_end:
            return self._history.lookup(component, s)
        return float(self._bend(component=component, s=np.asarray(s)))

    def _lookup_many(self, component: int, s: np.ndarray) -> np.ndarray:
        t_committed = self._history.t_end
        inside = s > t_committed
        if not np.any(inside):
            return self._history.evaluate_component(component, s)
        result = np.empty_like(s)
        result[~inside] = self._history.evaluate_component(component, s[~inside])
        result[inside] = self._bend(component=component, s=s[inside])
        return result

    def _bend(self, component: int, s: np.ndarray) -> np.ndarray:
        # quadratic through the last knot (value and slope) and the current stage state
        if not self._warned_bend:
            logger.debug("Delayed lookup inside the current step at t=%s", self._stage_t)
            self._warned_bend = True
        t_n = self._history.t_end
        x_n = self._x[component]
        slope = self._k1[component]
        span = self._stage_t - t_n
        elapsed = s - t_n
        if span <= 0.0:
            return x_n + slope * elapsed
        curvature = (self._stage_y[component] - x_n - slope * span) / span**2
        return x_n + slope * elapsed + curvature * elapsed**2

    def _derivative(self, index: int, t: float, state: np.ndarray) -> np.ndarray:
        self._stage_t = t
        self._stage_y = state
        position = index % len(self._d)
        return _field(
            t=t,
            index=position,
            state=state,
            d=self._d[position],
            a=self._a[position],
            terms=self._terms,
            lookup=self._lookup,
            lookup_many=self._lookup_many,
            unit=self._unit,
        )

    def advance(self, steps: int) -> None:
        """
        Performs a number of RK4 steps.

        Raises:
            PositivityError: If a component drops below -positivity_tolerance.
        """
        h = self._step
        tolerance = self._config.positivity_tolerance
        for _ in range(steps):
            n = self._steps_done
            t_n = self._t0 + n * h
            t_mid = t_n + 0.5 * h
            t_next = self._t0 + (n + 1) * h
            x = self._x
            k1 = self._k1
            k2 = self._derivative(index=2 * n + 1, t=t_mid, state=x + 0.5 * h * k1)
            k3 = self._derivative(index=2 * n + 1, t=t_mid, state=x + 0.5 * h * k2)
            k4 = self._derivative(index=2 * n + 2, t=t_next, state=x + h * k3)
            x_next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            worst = int(np.argmin(x_next))
            if x_next[worst] < -tolerance:
                raise PositivityError(time=t_next, component=worst, value=float(x_next[worst]))
            x_next = np.maximum(x_next, 0.0)
            slope = self._derivative(index=2 * n + 2, t=t_next, state=x_next)
            self._history.append(t=t_next, value=x_next, slope=slope)
            self._x = x_next
            self._k1 = slope
            self._steps_done = n + 1

    def advance_to(self, t_end: float) -> None:
        """
        Integrates until the current time reaches t_end (rounded up to a whole step).
        """
        remaining = int(np.ceil((t_end - self.t) / self._step - 1e-9))
        if remaining > 0:
            self.advance(steps=remaining)

    def trajectory(self, wall_time: float = 0.0) -> Trajectory:
        """
        Wraps the current history as a Trajectory.
        """
        return Trajectory(
            history=self._history,
            model_name=self._model.name,
            config=self._config,
            t_start=self._t0,
            t_end=self.t,
            wall_time=wall_time,
        )


def integrate(
    model: SystemModel,
    initial_history: HistoryFunction,
    t_end: float,
    config: SolverConfig | None = None,
) -> Trajectory:
    """
    Integrates the model from an initial history ending at 0 up to t_end.

    Parameters:
        model (SystemModel): The model.
        initial_history (HistoryFunction): Nonnegative history on [-tau_max, 0], positive at 0.
        t_end (float): Final time, positive.
        config (SolverConfig | None): Numerical settings.

    Returns:
        Trajectory: The solution, knots every step.

    Raises:
        InitialHistoryError: If the initial history is not admissible.
        PositivityError: If the solution leaves the nonnegative cone.
    """
    if t_end <= initial_history.t_end:
        raise ValueError(f"t_end must exceed the history end {initial_history.t_end}, got {t_end}")
    config = config or SolverConfig()
    started = time.perf_counter()
    periods = int(np.ceil((t_end - initial_history.t_end) / model.omega)) + 1
    integrator = Integrator(
        model=model, initial_history=initial_history, config=config, capacity_periods=periods
    )
    integrator.advance_to(t_end=t_end)
    wall_time = time.perf_counter() - started
    logger.debug("Integrated %s up to t=%s in %.3fs", model.name, integrator.t, wall_time)
    return integrator.trajectory(wall_time=wall_time)


def sample(trajectory: Trajectory, t: float | np.ndarray) -> np.ndarray:
    """
    Returns the Hermite-interpolated state of a trajectory.

    Raises:
        HistorySpanError: If t lies outside the trajectory span.
    """
    return trajectory.history.evaluate(t)


def write_trajectory_csv(
    trajectory: Trajectory, path: PathType, resolution: float | None = None
) -> None:
    """
    Writes a trajectory as CSV with header t,x1,...,xn: one row per knot, or one row every
    resolution time units when given.
    """
    history = trajectory.history
    if resolution is None:
        times = np.asarray(history.knots)
        values = np.asarray(history.values)
    else:
        count = int(np.floor((history.t_end - history.t_start) / resolution + 1e-9))
        times = history.t_start + resolution * np.arange(count + 1)
        values = history.evaluate(times)
    header = ["t"] + [f"x{i + 1}" for i in range(history.dimension)]
    write_csv(path=path, header=header, rows=np.column_stack([times, values]))


__all__ = [
    "HistoryFunction",
    "Integrator",
    "SolverConfig",
    "Trajectory",
    "constant_history",
    "history_span",
    "integrate",
    "rhs",
    "sample",
    "write_trajectory_csv",
]
