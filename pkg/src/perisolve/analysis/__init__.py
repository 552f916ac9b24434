# Copyright (C) 2026 The perisolve authors. All rights reserved.
# SPDX-License-Identifier: MIT

"""
This module verifies the hypotheses guaranteeing a positive periodic solution, on a time grid:

    H0  every coefficient is omega-periodic;
    H1  d_i(t) > 0 and a_ij(t), beta_ik(t), tau_ik(t), gamma_ik(t) >= 0;
    H2  (D(t) - A(t)) u >= 0 for some u >> 0, with strict inequality somewhere;
    H3  the aggregated birth coefficients beta_i(t) are positive;
    H4  the birth nonlinearities are bounded with unit slope at the origin;
    H5  M(t) v >> 0 for some v >> 0, where M = B + A - D.

It also evaluates the classical scalar and planar criteria that follow from them.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List

import numpy as np

from perisolve.analysis.attractivity import extrema
from perisolve.errors import ConvergenceError, HypothesisError, SingularMatrixError
from perisolve.expr import check_periodicity
from perisolve.integrator import SolverConfig
from perisolve.linalg import (
    FEASIBILITY_MARGIN,
    FeasibilityResult,
    find_nonnegative_vector,
    find_positive_vector,
    fundamental_matrix,
)
from perisolve.model import SystemModel, beta_i, matrix_series

logger = logging.getLogger(__name__)

HYPOTHESES = ("H0", "H1", "H2", "H3", "H4", "H5")
PROPAGATOR_TOLERANCE = 1e-9


class Status(str, Enum):
    """
    Outcome of a hypothesis check.
    """

    SATISFIED = "satisfied"
    SATISFIED_WEAK = "satisfied-weak"
    FAILED = "failed"
    NOT_CHECKABLE = "not-checkable"

    @property
    def holds(self) -> bool:
        """
        True for satisfied and satisfied-weak.
        """
        return self in (Status.SATISFIED, Status.SATISFIED_WEAK)


@dataclass(frozen=True)
class HypothesisStatus:
    """
    The verdict on one hypothesis with its numerical margin and the worst time on the grid.
    """

    status: Status
    margin: float | None = None
    worst_time: float | None = None
    detail: str = ""


@dataclass(frozen=True, eq=False)
class HypothesisReport:
    """
    Verdicts on H0 to H5, the witnesses of H2 (u) and H5 (v), and the stability of the linear part.
    """

    model: str
    grid_points: int
    hypotheses: Dict[str, HypothesisStatus]
    witness_u: np.ndarray | None
    witness_v: np.ndarray | None
    spectral_radius: float | None
    min_propagator_entry: float | None
    linear_part_stable: bool
    h2_profile: np.ndarray | None = field(default=None, repr=False)
    h5_profile: np.ndarray | None = field(default=None, repr=False)
    profile_times: np.ndarray | None = field(default=None, repr=False)

    @property
    def all_satisfied(self) -> bool:
        """
        True when every hypothesis holds (weakly or strictly).
        """
        return all(self.hypotheses[name].status.holds for name in HYPOTHESES)

    @property
    def weak(self) -> List[str]:
        """
        Hypotheses that hold only weakly.
        """
        return [
            name for name in HYPOTHESES if self.hypotheses[name].status == Status.SATISFIED_WEAK
        ]


def _check_h0(model: SystemModel) -> HypothesisStatus:
    worst, where, culprit = 0.0, 0.0, ""
    for i, name, expr in model.coefficients():
        check = check_periodicity(expr.node, model.omega)
        if not check.periodic:
            return HypothesisStatus(
                status=Status.FAILED,
                margin=check.discrepancy,
                worst_time=check.worst_t,
                detail=f"equation {i + 1}: {name} is not periodic",
            )
        if check.discrepancy >= worst:
            worst, where, culprit = check.discrepancy, check.worst_t, f"equation {i + 1}: {name}"
    return HypothesisStatus(
        status=Status.SATISFIED,
        margin=worst,
        worst_time=where,
        detail=f"largest periodicity discrepancy at {culprit}" if culprit else "",
    )


_NONNEGATIVE = ("a[", ".beta", ".tau", ".gamma")


def _check_h1(model: SystemModel, times: np.ndarray) -> HypothesisStatus:
    margin, where, culprit = np.inf, 0.0, ""
    for i, name, expr in model.coefficients():
        if name != "d" and not any(marker in name for marker in _NONNEGATIVE):
            continue
        values = np.broadcast_to(expr(times), times.shape)
        worst = int(np.argmin(values))
        strict = name == "d"
        if values[worst] < 0.0 or (strict and values[worst] <= 0.0):
            return HypothesisStatus(
                status=Status.FAILED,
                margin=float(values[worst]),
                worst_time=float(times[worst]),
                detail=f"equation {i + 1}: {name} has the wrong sign",
            )
        if strict and values[worst] < margin:
            margin, where, culprit = float(values[worst]), float(times[worst]), f"{i + 1}"
    return HypothesisStatus(
        status=Status.SATISFIED,
        margin=None if np.isinf(margin) else margin,
        worst_time=where,
        detail=f"smallest death rate in equation {culprit}" if culprit else "",
    )


def _classify_h2(model: SystemModel, times: np.ndarray) -> tuple:
    def stack(grid: np.ndarray) -> np.ndarray:
        return matrix_series(model=model, times=grid).d_minus_a()

    strict = find_positive_vector(
        matrices=stack(times), times=times, matrix_fn=stack, period=model.omega
    )
    if strict.found:
        return (
            HypothesisStatus(
                status=Status.SATISFIED, margin=strict.margin, worst_time=strict.worst_time
            ),
            strict,
        )
    weak = find_nonnegative_vector(
        matrices=stack(times), times=times, matrix_fn=stack, period=model.omega
    )
    somewhere = weak.profile is not None and bool(np.any(weak.profile > FEASIBILITY_MARGIN))
    if weak.found and somewhere:
        return (
            HypothesisStatus(
                status=Status.SATISFIED_WEAK,
                margin=weak.margin,
                worst_time=weak.worst_time,
                detail="(D - A) u >= 0 with equality at some times",
            ),
            weak,
        )
    return (
        HypothesisStatus(
            status=Status.FAILED,
            margin=strict.margin,
            worst_time=strict.worst_time,
            detail="no u >> 0 with (D - A) u >= 0",
        ),
        strict,
    )


def _check_h3(model: SystemModel, times: np.ndarray) -> HypothesisStatus:
    margin, where = np.inf, 0.0
    for i in range(model.n):
        values = np.broadcast_to(beta_i(model=model, i=i, t=times), times.shape)
        worst = int(np.argmin(values))
        if values[worst] <= 0.0:
            return HypothesisStatus(
                status=Status.FAILED,
                margin=float(values[worst]),
                worst_time=float(times[worst]),
                detail=f"beta_{i + 1} vanishes",
            )
        if values[worst] < margin:
            margin, where = float(values[worst]), float(times[worst])
    return HypothesisStatus(status=Status.SATISFIED, margin=margin, worst_time=where)


def _check_h4(model: SystemModel, times: np.ndarray) -> HypothesisStatus:
    envelope = c_max = 0.0
    for i, k, term in model.terms():
        c = np.broadcast_to(term.nonlinearity.c(times), times.shape)
        worst = int(np.argmin(c))
        if c[worst] <= 0.0:
            return HypothesisStatus(
                status=Status.NOT_CHECKABLE,
                margin=float(c[worst]),
                worst_time=float(times[worst]),
                detail=f"equation {i + 1}, term {k + 1}: c(t) is not positive",
            )
        envelope = max(envelope, term.nonlinearity.supremum(float(c[worst])))
        c_max = max(c_max, float(np.max(c)))
    return HypothesisStatus(
        status=Status.SATISFIED,
        margin=envelope,
        detail=(
            f"lower envelope constant c = {c_max!r} (max of c(t) over the terms); margin holds "
            "the bound of the nonlinearities (sup of h over t and x)"
        ),
    )


def _check_h5(model: SystemModel, times: np.ndarray) -> tuple:
    def stack(grid: np.ndarray) -> np.ndarray:
        return matrix_series(model=model, times=grid).m()

    result = find_positive_vector(
        matrices=stack(times), times=times, matrix_fn=stack, period=model.omega
    )
    status = Status.SATISFIED if result.found else Status.FAILED
    verdict = HypothesisStatus(status=status, margin=result.margin, worst_time=result.worst_time)
    return verdict, result


def check_hypotheses(
    model: SystemModel, grid_points: int = 256, config: SolverConfig | None = None
) -> HypothesisReport:
    """
    Checks H0 to H5 on an evenly spaced grid of one period; witnesses are verified on a 4 times
    finer grid. Failures are statuses, not exceptions.

    Parameters:
        model (SystemModel): The model.
        grid_points (int): Number of grid points.
        config (SolverConfig | None): Settings of the fundamental matrix (linear part stability).

    Returns:
        HypothesisReport: The verdicts.
    """
    times = model.grid(grid_points)
    h2, h2_result = _classify_h2(model=model, times=times)
    h5, h5_result = _check_h5(model=model, times=times)
    hypotheses = {
        "H0": _check_h0(model=model),
        "H1": _check_h1(model=model, times=times),
        "H2": h2,
        "H3": _check_h3(model=model, times=times),
        "H4": _check_h4(model=model, times=times),
        "H5": h5,
    }
    rho = min_entry = None
    config = (config or SolverConfig()).with_overrides(steps_per_period=grid_points)
    try:
        cache = fundamental_matrix(model=model, config=config)
        rho = cache.spectral_radius
        min_entry = cache.min_propagator_entry()
    except (SingularMatrixError, ConvergenceError) as err:
        logger.warning("Linear part of %s: %s", model.name, err)
    stable = rho is not None and rho < 1.0 and min_entry >= -PROPAGATOR_TOLERANCE
    for name, verdict in hypotheses.items():
        if not verdict.status.holds:
            logger.warning(
                "%s of %s is %s: %s", name, model.name, verdict.status.value, verdict.detail
            )
    return HypothesisReport(
        model=model.name,
        grid_points=grid_points,
        hypotheses=hypotheses,
        witness_u=h2_result.witness if h2.status.holds else None,
        witness_v=h5_result.witness if h5.status.holds else None,
        spectral_radius=rho,
        min_propagator_entry=min_entry,
        linear_part_stable=stable,
        h2_profile=h2_result.profile,
        h5_profile=h5_result.profile,
        profile_times=h5_result.profile_times,
    )


@dataclass(frozen=True)
class CorollaryResult:
    """
    Verdict of a scalar criterion with its margin and worst time.
    """

    holds: bool
    margin: float
    worst_time: float


def _scalar_margin(model: SystemModel) -> CorollaryResult:
    equation = model.equations[0]

    def margin(times: np.ndarray) -> np.ndarray:
        return beta_i(model=model, i=0, t=times) - equation.d(times)

    bounds = extrema(function=margin, omega=model.omega)
    return CorollaryResult(
        holds=bounds.minimum > 0.0, margin=bounds.minimum, worst_time=bounds.argmin
    )


def check_corollary_31(model: SystemModel) -> CorollaryResult:
    """
    Scalar criterion: sum_k beta_k(t) > d(t) over the period.

    Raises:
        HypothesisError: If the model is not scalar.
    """
    if model.n != 1:
        raise HypothesisError(f"the scalar criterion needs n = 1, got n = {model.n}")
    return _scalar_margin(model=model)


def check_corollary_32(model: SystemModel) -> CorollaryResult:
    """
    Scalar criterion for Nicholson equations with delay densities:
    sum_k beta_k(t) times the integral of gamma_k over [t - tau_k(t), t] exceeds d(t).

    Raises:
        HypothesisError: If the model is not scalar, or a term is not a Ricker density term.
    """
    if model.n != 1:
        raise HypothesisError(f"the scalar criterion needs n = 1, got n = {model.n}")
    if not model.is_nicholson() or any(term.kernel.is_discrete for _, _, term in model.terms()):
        raise HypothesisError("every term must be a Ricker term with a delay density")
    return _scalar_margin(model=model)


@dataclass(frozen=True, eq=False)
class PlanarResult:
    """
    Verdict of the planar criterion: (i) min d1/a1 > max a2/d2, (ii) M(t) u >> 0 for some u >> 0.
    Condition (i) is not checkable when a1 vanishes; the full H2 check replaces it then.
    """

    holds: bool
    condition_i: Status
    h2_fallback: Status | None
    ratio_min: float | None
    ratio_max: float | None
    condition_ii: bool
    witness: np.ndarray | None
    feasibility: FeasibilityResult = field(repr=False)


def check_corollary_33(model: SystemModel, grid_points: int = 256) -> PlanarResult:
    """
    Planar criterion for a positive periodic solution.

    Raises:
        HypothesisError: If the model is not planar.
    """
    if model.n != 2:
        raise HypothesisError(f"the planar criterion needs n = 2, got n = {model.n}")
    times = model.grid(grid_points)
    series = matrix_series(model=model, times=times)
    a1, a2 = series.a[:, 0, 1], series.a[:, 1, 0]
    ratio_min = ratio_max = h2_fallback = None
    if np.min(a1) <= 1e-12:
        logger.info("a1 vanishes on the grid, checking H2 instead of the ratio condition")
        condition_i = Status.NOT_CHECKABLE
        h2_fallback = _classify_h2(model=model, times=times)[0].status
    else:
        d1 = model.equations[0].d
        d2 = model.equations[1].d
        a1_expr = model.equations[0].a[1]
        a2_expr = model.equations[1].a.get(0)
        ratio_min = extrema(function=lambda t: d1(t) / a1_expr(t), omega=model.omega).minimum
        ratio_max = (
            0.0
            if a2_expr is None
            else extrema(function=lambda t: a2_expr(t) / d2(t), omega=model.omega).maximum
        )
        condition_i = Status.SATISFIED if ratio_min > ratio_max else Status.FAILED

    def stack(grid: np.ndarray) -> np.ndarray:
        return matrix_series(model=model, times=grid).m()

    feasibility = find_positive_vector(
        matrices=series.m(), times=times, matrix_fn=stack, period=model.omega
    )
    return PlanarResult(
        holds=(h2_fallback or condition_i).holds and feasibility.found,
        condition_i=condition_i,
        h2_fallback=h2_fallback,
        ratio_min=ratio_min,
        ratio_max=ratio_max,
        condition_ii=feasibility.found,
        witness=feasibility.witness if feasibility.found else None,
        feasibility=feasibility,
    )


__all__ = [
    "CorollaryResult",
    "HYPOTHESES",
    "HypothesisReport",
    "HypothesisStatus",
    "PlanarResult",
    "Status",
    "check_corollary_31",
    "check_corollary_32",
    "check_corollary_33",
    "check_hypotheses",
]
