# Copyright (C) 2026 The perisolve authors. All rights reserved.
# SPDX-License-Identifier: MIT

"""
This module locates positive periodic solutions.

The main route iterates the operator F whose fixed points in the cone of nonnegative omega-periodic
functions are the periodic solutions,

    F(phi)(theta) = (I - T(theta))^-1 X(omega + theta) integral over [theta, omega + theta] of
                    X(s)^-1 M(s, phi_s) ds,

where X is the fundamental matrix of the linear part, T(theta) = X(theta) C X(theta)^-1 and
M(s, phi_s) gathers the delayed birth terms evaluated along the periodic extension of phi. The
period map route integrates the system until consecutive periods agree. Autonomous systems have
their equilibria found by Newton's method.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid
from scipy.interpolate import CubicSpline

from perisolve.analysis import HypothesisReport, check_hypotheses
from perisolve.analysis.attractivity import compute_alpha_gamma, ricker_c_bounds
from perisolve.errors import ConvergenceError, HypothesisError
from perisolve.integrator import (
    HistoryFunction,
    Integrator,
    SolverConfig,
    constant_history,
    history_span,
)
from perisolve.linalg import (
    FeasibilityResult,
    LinearFlowCache,
    find_positive_vector,
    is_nonsingular_m_matrix,
    solve_i_minus_t,
)
from perisolve.model import (
    CONSTANCY_TOLERANCE,
    SystemModel,
    matrix_series,
    tabulate,
    term_weight,
)
from perisolve.sysutils import PathType, write_csv

logger = logging.getLogger(__name__)

DDE_TOLERANCE = 1e-5
STALL_WINDOW = 10
MIN_DAMPING = 2.0**-10
NEWTON_TOLERANCE = 1e-12
NEWTON_MAX_ITER = 200
NEWTON_MAX_HALVINGS = 40


class PeriodicProfile:
    """
    An omega-periodic function sampled on N evenly spaced points of [0, omega), with the periodic
    cubic spline through the samples.
    """

    def __init__(self, omega: float, values: np.ndarray) -> None:
        """
        Parameters:
            omega (float): The period.
            values (np.ndarray): Samples at t_k = k omega / N, shape (N, n).
        """
        values = np.array(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if len(values) < 4:
            raise ValueError(f"A profile needs at least 4 samples, got {len(values)}")
        self._omega = float(omega)
        self._values = values
        self._values.flags.writeable = False
        knots = np.arange(len(values) + 1) * (self._omega / len(values))
        closed = np.vstack([values, values[:1]])
        self._spline = CubicSpline(
            knots, closed, bc_type="periodic", axis=0, extrapolate="periodic"
        )

    @classmethod
    def constant(
        cls, omega: float, value: float | np.ndarray, n: int, points: int
    ) -> "PeriodicProfile":
        """
        The constant profile equal to value.
        """
        row = np.broadcast_to(np.asarray(value, dtype=float), (n,))
        return cls(omega=omega, values=np.tile(row, (points, 1)))

    @classmethod
    def from_function(
        cls, omega: float, function: Callable[[np.ndarray], np.ndarray], points: int
    ) -> "PeriodicProfile":
        """
        Samples a vectorised omega-periodic function returning shape (K, n).
        """
        times = np.arange(points) * (omega / points)
        return cls(omega=omega, values=np.asarray(function(times), dtype=float).reshape(points, -1))

    @property
    def omega(self) -> float:
        """
        The period.
        """
        return self._omega

    @property
    def values(self) -> np.ndarray:
        """
        Samples on the grid, shape (N, n).
        """
        return self._values

    @property
    def times(self) -> np.ndarray:
        """
        The grid t_k = k omega / N.
        """
        return np.arange(len(self._values)) * (self._omega / len(self._values))

    @property
    def dimension(self) -> int:
        """
        Number of components.
        """
        return self._values.shape[1]

    def __call__(self, t: float | np.ndarray) -> np.ndarray:
        return self._spline(t)

    def derivative(self, t: float | np.ndarray) -> np.ndarray:
        """
        Evaluates the derivative of the spline.
        """
        return self._spline(t, 1)

    def periodicity_gap(self) -> float:
        """
        Returns max_i |phi_i(0) - phi_i(omega^-)|.
        """
        end = np.nextafter(self._omega, 0.0)
        return float(np.max(np.abs(self._spline(0.0) - self._spline(end))))

    def sup_distance(self, other: "PeriodicProfile") -> float:
        """
        Sup-norm distance to another profile, on the union of both grids.
        """
        times = np.union1d(self.times, other.times)
        return float(np.max(np.abs(self(times) - other(times))))

    def write_csv(self, path: PathType) -> None:
        """
        Writes the profile as CSV with header t,phi1,...,phin, one row per grid point.
        """
        header = ["t"] + [f"phi{i + 1}" for i in range(self.dimension)]
        write_csv(path=path, header=header, rows=np.column_stack([self.times, self._values]))


def _nonlinear_term(
    model: SystemModel, phi: PeriodicProfile, times: np.ndarray, quad_nodes: int
) -> np.ndarray:
    """
    M(s, phi_s) at every time, using the periodic extension of phi; shape (K, n).
    """
    table = tabulate(model=model, times=times)
    result = np.zeros((len(times), model.n))
    unit = np.linspace(0.0, 1.0, quad_nodes)
    for i, k, term in model.terms():
        samples = table.terms[i][k]
        nonlinearity = term.nonlinearity
        if term.kernel.is_discrete:
            delayed = np.maximum(phi(times - samples.tau)[:, i], 0.0)
            result[:, i] += samples.beta * nonlinearity.evaluate(samples.c, delayed)
            continue
        nodes = (times - samples.tau)[:, None] + samples.tau[:, None] * unit[None, :]
        delayed = np.maximum(phi(nodes.ravel())[:, i].reshape(nodes.shape), 0.0)
        births = term.kernel.gamma(nodes) * nonlinearity.evaluate(nonlinearity.c(nodes), delayed)
        integral = trapezoid(births, dx=1.0, axis=1) * samples.tau / (quad_nodes - 1)
        result[:, i] += samples.beta * integral
    return result


def operator_f(
    model: SystemModel,
    cache: LinearFlowCache,
    phi: PeriodicProfile,
    quad_nodes: int = 33,
    rule: str = "spline",
) -> PeriodicProfile:
    """
    Applies F to a profile on the grid of the linear flow cache.

    Using X(s + omega) = X(s) C, the value at theta_k is
    (I - T_k)^-1 X_k [C (S_N - S_k) + S_k] with S_k the integral of X(s)^-1 M(s, phi_s) over
    [0, theta_k].

    Parameters:
        model (SystemModel): The model.
        cache (LinearFlowCache): The linear flow of the model; its spectral radius must be below 1.
        phi (PeriodicProfile): A nonnegative profile with the model's period.
        quad_nodes (int): Trapezoid nodes for delay densities.
        rule (str): "spline" integrates the not-a-knot cubic spline through the integrand samples,
                    "trapezoid" uses the composite trapezoid rule.

    Returns:
        PeriodicProfile: F(phi) on the cache grid.

    Raises:
        SingularMatrixError: If I - T(theta_k) is singular.
    """
    times = cache.times
    steps = cache.steps
    forcing = _nonlinear_term(model=model, phi=phi, times=times[:-1], quad_nodes=quad_nodes)
    forcing = np.vstack([forcing, forcing[:1]])
    integrand = np.stack([cache.apply_x_inverse(k, forcing[k]) for k in range(steps + 1)])
    match rule:
        case "spline":
            integral = CubicSpline(times, integrand, axis=0).antiderivative()(times)
        case "trapezoid":
            integral = cumulative_trapezoid(integrand, x=times, axis=0, initial=0.0)
        case _:
            raise ValueError(f"Unsupported quadrature rule: {rule}")
    total = integral[-1]
    values = np.empty((steps, model.n))
    for k in range(steps):
        inner = cache.monodromy @ (total - integral[k]) + integral[k]
        values[k] = solve_i_minus_t(cache=cache, k=k, rhs=cache.x[k] @ inner)
    return PeriodicProfile(omega=cache.omega, values=values)


@dataclass(frozen=True)
class FixedPointDiagnostics:
    """
    Convergence information of the fixed-point iteration.
    """

    iterations: int
    final_delta: float
    operator_residual: float
    dde_residual: float | None
    converged: bool
    damping: float
    certified: bool


def default_initial_profile(model: SystemModel, cache: LinearFlowCache) -> PeriodicProfile:
    """
    The constant profile at half the a-priori bound of Nicholson systems, or at 1 when the bound
    is not available.
    """
    level = np.ones(model.n)
    if model.is_nicholson():
        try:
            level = 0.5 * lemma52_bound(model=model)
        except HypothesisError as err:
            logger.debug("No a-priori bound for %s: %s", model.name, err)
    return PeriodicProfile.constant(omega=model.omega, value=level, n=model.n, points=cache.steps)


def find_periodic_fixed_point(
    model: SystemModel,
    cache: LinearFlowCache,
    init: PeriodicProfile | None = None,
    max_iter: int = 500,
    tol: float = 1e-10,
    damping: float = 1.0,
    quad_nodes: int = 33,
    rule: str = "spline",
    config: SolverConfig | None = None,
    hypotheses: HypothesisReport | None = None,
) -> Tuple[PeriodicProfile, FixedPointDiagnostics]:
    """
    Iterates phi <- (1 - damping) phi + damping F(phi).

    H0 to H5 are checked first; failures are logged as warnings and the iteration is attempted
    anyway. The damping is halved whenever the update has not decreased over the last ten
    iterations, and when alternating updates shrink by less than half over that window.
    Non-convergence is reported in the diagnostics, not raised.

    Parameters:
        model (SystemModel): The model.
        cache (LinearFlowCache): Its linear flow cache.
        init (PeriodicProfile | None): Starting profile (defaults to default_initial_profile).
        max_iter (int): Iteration bound.
        tol (float): Convergence threshold on the sup-norm of the update.
        damping (float): Initial damping factor in (0, 1].
        quad_nodes (int): Trapezoid nodes for delay densities.
        rule (str): Quadrature rule of operator_f.
        config (SolverConfig | None): Settings of the re-integration check (dde_residual).
        hypotheses (HypothesisReport | None): Verdicts already computed for the model (checked on
            the cache grid when omitted).

    Returns:
        Tuple[PeriodicProfile, FixedPointDiagnostics]: The last iterate and its diagnostics.
    """
    if not 0.0 < damping <= 1.0:
        raise ValueError(f"damping must lie in (0, 1], got {damping}")
    if hypotheses is None:
        hypotheses = check_hypotheses(model=model, grid_points=cache.steps, config=config)
    _warn_failed_hypotheses(model=model, report=hypotheses)
    phi = init if init is not None else default_initial_profile(model=model, cache=cache)
    if cache.spectral_radius >= 1.0:
        logger.warning(
            "Spectral radius of the monodromy matrix is %s >= 1, F is not well defined",
            cache.spectral_radius,
        )
    image = operator_f(model=model, cache=cache, phi=phi, quad_nodes=quad_nodes, rule=rule)
    residual = _distance(image, phi)
    updates: List[float] = []
    previous: np.ndarray | None = None
    converged = False
    delta = np.inf
    iteration = 0
    while iteration < max_iter:
        iteration += 1
        step = image(phi.times) - phi.values
        phi = PeriodicProfile(omega=phi.omega, values=phi.values + damping * step)
        delta = damping * residual
        image = operator_f(model=model, cache=cache, phi=phi, quad_nodes=quad_nodes, rule=rule)
        residual = _distance(image, phi)
        logger.debug("F-iteration %s: update %s, residual %s", iteration, delta, residual)
        if delta <= tol and residual <= 10.0 * tol:
            converged = True
            break
        updates.append(delta)
        oscillating = previous is not None and float(np.sum(step * previous)) < 0.0
        previous = step
        if len(updates) > STALL_WINDOW and damping > MIN_DAMPING:
            earlier = updates[-1 - STALL_WINDOW]
            stalled = updates[-1] >= earlier
            if stalled or (oscillating and updates[-1] > 0.5 * earlier):
                damping *= 0.5
                reason = "stalls" if stalled else "oscillates slowly"
                logger.warning("F-iteration %s, damping halved to %s", reason, damping)
                updates.clear()
    dde = None
    if np.min(phi.values) > 0.0:
        dde = dde_residual(model=model, phi=phi, config=config)
    certified = converged and dde is not None and dde <= DDE_TOLERANCE
    diagnostics = FixedPointDiagnostics(
        iterations=iteration,
        final_delta=float(delta),
        operator_residual=residual,
        dde_residual=dde,
        converged=converged,
        damping=damping,
        certified=certified,
    )
    if converged:
        logger.info("F-iteration on %s converged after %s iterations", model.name, iteration)
    else:
        logger.warning(
            "F-iteration on %s did not converge after %s iterations (update %s)",
            model.name,
            iteration,
            delta,
        )
    return phi, diagnostics


def _warn_failed_hypotheses(model: SystemModel, report: HypothesisReport) -> None:
    for name, verdict in report.hypotheses.items():
        if not verdict.status.holds:
            logger.warning(
                "%s is %s for %s, a positive periodic solution may not exist; iterating anyway",
                name,
                verdict.status.value,
                model.name,
            )


def _distance(image: PeriodicProfile, phi: PeriodicProfile) -> float:
    return float(np.max(np.abs(image(phi.times) - phi.values)))


@dataclass(frozen=True)
class PoincareDiagnostics:
    """
    Convergence information of the period map iteration.
    """

    periods: int
    gap: float
    converged: bool


def find_periodic_poincare(
    model: SystemModel,
    init: HistoryFunction | None = None,
    max_periods: int = 400,
    tol: float = 1e-8,
    config: SolverConfig | None = None,
) -> Tuple[PeriodicProfile, PoincareDiagnostics]:
    """
    Integrates the model period by period until sup |x(t + omega) - x(t)| over the last period,
    at the integration knots, drops below tol.

    Parameters:
        model (SystemModel): The model.
        init (HistoryFunction | None): Initial history ending at 0 (defaults to the constant
                                       history equal to 1).
        max_periods (int): Horizon in periods.
        tol (float): Threshold on the gap between consecutive periods.
        config (SolverConfig | None): Numerical settings.

    Returns:
        Tuple[PeriodicProfile, PoincareDiagnostics]: The last period as a profile.

    Raises:
        ConvergenceError: If the horizon is exhausted; the message carries the last gap.
        PositivityError: If the solution leaves the nonnegative cone.
    """
    config = config or SolverConfig()
    init = init or constant_history(model=model, value=1.0, config=config)
    steps = config.steps_per_period
    integrator = Integrator(
        model=model, initial_history=init, config=config, capacity_periods=max_periods
    )
    integrator.advance(steps=steps)
    gap = np.inf
    for period in range(2, max_periods + 1):
        integrator.advance(steps=steps)
        values = integrator.history.values
        gap = float(np.max(np.abs(values[-(steps + 1) :] - values[-(2 * steps + 1) : -steps])))
        logger.debug("Period %s: gap %s", period, gap)
        if gap <= tol:
            logger.info("Period map of %s converged after %s periods", model.name, period)
            profile = PeriodicProfile(omega=model.omega, values=values[-(steps + 1) : -1])
            return profile, PoincareDiagnostics(periods=period, gap=gap, converged=True)
    raise ConvergenceError(
        f"period map did not converge within {max_periods} periods (last gap {gap!r})"
    )


def dde_residual(
    model: SystemModel, phi: PeriodicProfile, config: SolverConfig | None = None
) -> float:
    """
    Integrates one period from the periodic extension of phi and returns the sup-norm distance
    between the solution and phi at the integration knots.

    Raises:
        InitialHistoryError: If phi is not positive.
    """
    config = (config or SolverConfig()).with_overrides(steps_per_period=len(phi.values))
    step = config.step(model.omega)
    span = max(history_span(model=model, config=config), step)
    history = HistoryFunction.from_function(
        function=phi, derivative=phi.derivative, t_start=-span, t_end=0.0, step=step
    )
    integrator = Integrator(model=model, initial_history=history, config=config)
    integrator.advance(steps=config.steps_per_period)
    count = config.steps_per_period + 1
    knots = np.asarray(integrator.history.knots[-count:])
    values = np.asarray(integrator.history.values[-count:])
    return float(np.max(np.abs(values - phi(knots))))


def lemma52_bound(model: SystemModel, v: np.ndarray | None = None) -> np.ndarray:
    """
    The a-priori bound of positive periodic solutions of Nicholson systems:
    x_i(t) <= v_i max_j log(gamma_j(v)) / (v_j c_j^-).

    Parameters:
        model (SystemModel): A model with Ricker nonlinearities only.
        v (np.ndarray | None): A positive vector (defaults to all ones).

    Returns:
        np.ndarray: The bound of each component.

    Raises:
        HypothesisError: If a nonlinearity is not Ricker, or alpha_i(v) <= 1 for some i.
    """
    c_minus, _ = ricker_c_bounds(model=model)
    v = np.ones(model.n) if v is None else np.asarray(v, dtype=float)
    alpha, gamma = compute_alpha_gamma(model=model, v=v)
    if np.any(alpha <= 1.0):
        raise HypothesisError(f"alpha_i(v) must exceed 1, got {alpha}")
    return v * float(np.max(np.log(gamma) / (v * c_minus)))


@dataclass(frozen=True, eq=False)
class EquilibriumConditions:
    """
    Sufficient conditions for a positive equilibrium of an autonomous system: D - A is a
    non-singular M-matrix and M v >> 0 for some v >> 0.
    """

    d_minus_a_m_matrix: bool
    positive_vector: FeasibilityResult

    @property
    def satisfied(self) -> bool:
        """
        True when both conditions hold.
        """
        return self.d_minus_a_m_matrix and self.positive_vector.found


def check_equilibrium_conditions(model: SystemModel) -> EquilibriumConditions:
    """
    Checks the existence conditions for a positive equilibrium at t = 0.
    """
    series = matrix_series(model=model, times=np.zeros(1))
    return EquilibriumConditions(
        d_minus_a_m_matrix=is_nonsingular_m_matrix(series.d_minus_a()[0]),
        positive_vector=find_positive_vector(matrices=series.m()),
    )


def _equilibrium_field(model: SystemModel) -> Tuple[Callable, Callable]:
    series = matrix_series(model=model, times=np.zeros(1))
    linear = series.a[0] - np.diag(series.d[0])
    terms = [
        (
            i,
            float(term_weight(term=term, t=0.0)),
            term.nonlinearity,
            float(term.nonlinearity.c(0.0)),
        )
        for i, _, term in model.terms()
    ]

    def balance(x: np.ndarray) -> np.ndarray:
        value = linear @ x
        for i, weight, nonlinearity, c in terms:
            value[i] += weight * nonlinearity.evaluate(c, x[i])
        return value

    def jacobian(x: np.ndarray) -> np.ndarray:
        matrix = linear.copy()
        for i, weight, nonlinearity, c in terms:
            matrix[i, i] += weight * nonlinearity.derivative(c, x[i])
        return matrix

    return balance, jacobian


def find_equilibrium(model: SystemModel, init: np.ndarray | None = None) -> np.ndarray:
    """
    Finds a positive equilibrium of an autonomous model by damped Newton iteration on
    g(x) = -D x + A x + sum_k beta_k h_k(x).

    Parameters:
        model (SystemModel): A model whose coefficients are all constant.
        init (np.ndarray | None): Starting point (defaults to half the a-priori bound for Nicholson
                                  systems, ones otherwise).

    Returns:
        np.ndarray: The equilibrium, with ||g||_inf <= 1e-12.

    Raises:
        HypothesisError: If a coefficient is not constant.
        ConvergenceError: If Newton's method stagnates or exceeds 200 iterations.
    """
    times = model.grid()
    for i, name, expr in model.coefficients():
        if not expr.is_constant and expr.range_on(times) >= CONSTANCY_TOLERANCE:
            raise HypothesisError(f"equation {i + 1}: coefficient {name} is not constant")
    conditions = check_equilibrium_conditions(model=model)
    if not conditions.satisfied:
        logger.warning(
            "Equilibrium conditions fail for %s (D - A M-matrix: %s, M v >> 0: %s)",
            model.name,
            conditions.d_minus_a_m_matrix,
            conditions.positive_vector.found,
        )
    balance, jacobian = _equilibrium_field(model=model)
    if init is None:
        x = np.ones(model.n)
        if model.is_nicholson():
            try:
                x = 0.5 * lemma52_bound(model=model)
            except HypothesisError as err:
                logger.debug("Starting Newton from ones: %s", err)
    else:
        x = np.asarray(init, dtype=float).copy()
    value = balance(x)
    norm = float(np.max(np.abs(value)))
    for iteration in range(NEWTON_MAX_ITER):
        if norm <= NEWTON_TOLERANCE:
            logger.info("Equilibrium of %s found after %s Newton steps", model.name, iteration)
            return x
        try:
            direction = np.linalg.solve(jacobian(x), value)
        except np.linalg.LinAlgError as err:
            raise ConvergenceError(f"singular Jacobian at x={x}") from err
        scale = 1.0
        for _ in range(NEWTON_MAX_HALVINGS):
            candidate = x - scale * direction
            if np.all(candidate > 0.0):
                candidate_value = balance(candidate)
                candidate_norm = float(np.max(np.abs(candidate_value)))
                if candidate_norm < norm:
                    break
            scale *= 0.5
        else:
            raise ConvergenceError(f"Newton's method stagnated at x={x} (|g| = {norm!r})")
        x, value, norm = candidate, candidate_value, candidate_norm
    if norm <= NEWTON_TOLERANCE:
        return x
    raise ConvergenceError(
        f"Newton's method did not converge in {NEWTON_MAX_ITER} iterations (|g| = {norm!r})"
    )


__all__ = [
    "EquilibriumConditions",
    "FixedPointDiagnostics",
    "PeriodicProfile",
    "PoincareDiagnostics",
    "check_equilibrium_conditions",
    "dde_residual",
    "default_initial_profile",
    "find_equilibrium",
    "find_periodic_fixed_point",
    "find_periodic_poincare",
    "lemma52_bound",
    "operator_f",
]
