# Copyright (C) 2026 The perisolve authors. All rights reserved.
# SPDX-License-Identifier: MIT

"""
This module provides the linear algebra behind the periodic analysis: the fundamental matrix of the
linear part x' = (A(t) - D(t)) x over one period with its monodromy matrix and cached
factorizations, the Perron root of nonnegative matrices, M-matrix tests and the search for vectors
v >> 0 with M(t) v >> 0 on a time grid.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Sequence, Tuple

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from perisolve.errors import ConvergenceError, SingularMatrixError
from perisolve.integrator import SolverConfig
from perisolve.linalg.simplex import LpStatus, maximize
from perisolve.model import SystemModel, tabulate

logger = logging.getLogger(__name__)

FEASIBILITY_MARGIN = 1e-9
NONNEGATIVITY_TOLERANCE = 1e-9
SINGULARITY_RATIO = 1e-14
MAX_REFINEMENTS = 2

LuFactors = Tuple[np.ndarray, np.ndarray]
MatrixFunction = Callable[[np.ndarray], np.ndarray]


def _factor(matrix: np.ndarray, what: str) -> LuFactors:
    scale = np.max(np.abs(matrix))
    if scale == 0.0:
        raise SingularMatrixError(f"{what} is the zero matrix")
    factors = lu_factor(matrix, check_finite=True)
    pivots = np.abs(np.diag(factors[0]))
    if np.min(pivots) <= SINGULARITY_RATIO * scale:
        raise SingularMatrixError(f"{what} is numerically singular")
    return factors


@dataclass(frozen=True, eq=False)
class LinearFlowCache:
    """
    Fundamental matrix X(t_k) of the linear part on the grid t_k = k omega / N (k = 0..N), its
    monodromy matrix C = X(omega), and LU factorizations of X(t_k) and of I - T(t_k) with
    T(t) = X(t) C X(t)^-1.
    """

    omega: float
    times: np.ndarray
    x: np.ndarray
    monodromy: np.ndarray
    spectral_radius: float
    x_factors: List[LuFactors] = field(repr=False)
    i_minus_t_factors: List[LuFactors | None] = field(repr=False)

    @property
    def steps(self) -> int:
        """
        Number of grid intervals N per period.
        """
        return len(self.times) - 1

    def apply_x_inverse(self, k: int, vectors: np.ndarray) -> np.ndarray:
        """
        Solves X(t_k) y = vectors (vectors may be a matrix of right-hand sides).
        """
        return lu_solve(self.x_factors[k], vectors)

    def t_matrix(self, k: int) -> np.ndarray:
        """
        Returns T(t_k) = X(t_k) C X(t_k)^-1.
        """
        product = self.x[k] @ self.monodromy
        return lu_solve(self.x_factors[k], product.T, trans=1).T

    def propagator(self, k: int, j: int) -> np.ndarray:
        """
        Returns X(t_k) X(t_j)^-1, the solution operator from t_j to t_k.
        """
        return lu_solve(self.x_factors[j], self.x[k].T, trans=1).T

    def min_propagator_entry(self, stride: int = 8) -> float:
        """
        Smallest entry of X(t_k) X(t_j)^-1 over grid pairs j <= k (every stride-th point).
        """
        indices = range(0, len(self.times), stride)
        return min(
            float(np.min(self.propagator(k=k, j=j))) for k in indices for j in indices if j <= k
        )


def fundamental_matrix(model: SystemModel, config: SolverConfig | None = None) -> LinearFlowCache:
    """
    Integrates X' = (A(t) - D(t)) X, X(0) = I, over one period with fixed-step RK4.

    Parameters:
        model (SystemModel): The model (only D and A are used).
        config (SolverConfig | None): Numerical settings; steps_per_period sets the grid.

    Returns:
        LinearFlowCache: The fundamental matrix on the grid and cached factorizations.

    Raises:
        SingularMatrixError: If X(t_k) is numerically singular.
        ConvergenceError: If the monodromy matrix has clearly negative entries (grid too coarse).
    """
    config = config or SolverConfig()
    steps = config.steps_per_period
    h = model.omega / steps
    table = tabulate(model=model, times=np.arange(2 * steps + 1) * (h / 2.0))
    generators = table.a - np.einsum("ki,ij->kij", table.d, np.eye(model.n))
    x = np.empty((steps + 1, model.n, model.n))
    x[0] = np.eye(model.n)
    for k in range(steps):
        current = x[k]
        k1 = generators[2 * k] @ current
        k2 = generators[2 * k + 1] @ (current + 0.5 * h * k1)
        k3 = generators[2 * k + 1] @ (current + 0.5 * h * k2)
        k4 = generators[2 * k + 2] @ (current + h * k3)
        x[k + 1] = current + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    monodromy = x[-1]
    x_factors = [_factor(matrix=x[k], what=f"X({k * h})") for k in range(steps + 1)]
    try:
        rho = spectral_radius(matrix=monodromy)
    except ValueError as err:
        raise ConvergenceError(
            f"monodromy matrix of {model.name} is not nonnegative with {steps} steps: {err}"
        ) from err
    identity = np.eye(model.n)
    i_minus_t = []
    for k in range(steps):
        t_k = lu_solve(x_factors[k], (x[k] @ monodromy).T, trans=1).T
        try:
            i_minus_t.append(_factor(matrix=identity - t_k, what=f"I - T({k * h})"))
        except SingularMatrixError:
            i_minus_t.append(None)
    logger.info("Monodromy matrix of %s has spectral radius %s", model.name, rho)
    return LinearFlowCache(
        omega=model.omega,
        times=np.arange(steps + 1) * h,
        x=x,
        monodromy=monodromy,
        spectral_radius=rho,
        x_factors=x_factors,
        i_minus_t_factors=i_minus_t,
    )


def spectral_radius(matrix: np.ndarray, max_iter: int = 10000, tol: float = 1e-12) -> float:
    """
    Computes the Perron root of a nonnegative matrix by power iteration.

    The iteration runs on the matrix itself, then on the matrix shifted by its largest diagonal
    entry plus one (which breaks cyclic structures), and finally falls back to the roots of the
    characteristic polynomial for matrices of order at most 4.

    Parameters:
        matrix (np.ndarray): A square nonnegative matrix; entries down to -1e-9 count as zero.
        max_iter (int): Iteration bound for each power iteration.
        tol (float): Relative tolerance on successive estimates.

    Returns:
        float: The spectral radius.

    Raises:
        ValueError: If an entry is below -1e-9.
        ConvergenceError: If no method converged.
    """
    matrix = np.asarray(matrix, dtype=float)
    if np.any(matrix < -NONNEGATIVITY_TOLERANCE):
        raise ValueError(f"matrix has a negative entry {float(np.min(matrix))!r}")
    positive = np.maximum(matrix, 0.0)
    if not np.any(positive):
        return 0.0
    half = max(1, max_iter // 2)
    estimate = _power_iteration(matrix=positive, max_iter=half, tol=tol)
    if estimate is not None:
        return estimate
    shift = float(np.max(np.diag(positive))) + 1.0
    shifted = positive + shift * np.eye(len(positive))
    estimate = _power_iteration(matrix=shifted, max_iter=max_iter - half, tol=tol)
    if estimate is not None:
        return estimate - shift
    if len(positive) <= 4:
        logger.debug("Power iteration stalled, using the characteristic polynomial")
        return float(np.max(np.abs(np.roots(np.poly(positive)))))
    raise ConvergenceError(f"power iteration did not converge in {max_iter} iterations")


def _power_iteration(matrix: np.ndarray, max_iter: int, tol: float) -> float | None:
    vector = np.ones(len(matrix))
    previous = np.inf
    for _ in range(max_iter):
        image = matrix @ vector
        estimate = float(np.max(image))
        if estimate == 0.0:
            return 0.0
        vector = image / estimate
        if abs(estimate - previous) <= tol * estimate:
            return estimate
        previous = estimate
    return None


def floquet_multipliers(cache: LinearFlowCache) -> np.ndarray:
    """
    Eigenvalues of the monodromy matrix, sorted by decreasing modulus.
    """
    values = np.linalg.eigvals(cache.monodromy)
    return values[np.argsort(-np.abs(values), kind="stable")]


def solve_i_minus_t(cache: LinearFlowCache, k: int, rhs: np.ndarray) -> np.ndarray:
    """
    Solves (I - T(t_k)) y = rhs with the cached factorization.

    Parameters:
        cache (LinearFlowCache): The linear flow cache; its spectral radius must be below 1.
        k (int): Grid index of theta, 0 <= k < N.
        rhs (np.ndarray): Right-hand side(s).

    Raises:
        SingularMatrixError: If I - T(t_k) is singular.
    """
    factors = cache.i_minus_t_factors[k % cache.steps]
    if factors is None:
        raise SingularMatrixError(
            f"I - T({cache.times[k % cache.steps]}) is singular (spectral radius "
            f"{cache.spectral_radius})"
        )
    return lu_solve(factors, rhs)


@dataclass(frozen=True, eq=False)
class FeasibilityResult:
    """
    Outcome of a witness search: maximise delta subject to M_k v >= delta 1, v >= delta 1,
    sum(v) = n.
    """

    found: bool
    witness: np.ndarray | None
    margin: float
    lp_margin: float
    worst_time: float | None
    grid_points: int
    refinements: int
    profile_times: np.ndarray | None = field(default=None, repr=False)
    profile: np.ndarray | None = field(default=None, repr=False)


def _unique_matrices(matrices: np.ndarray) -> np.ndarray:
    flat = np.round(matrices.reshape(len(matrices), -1), decimals=15)
    _, keep = np.unique(flat, axis=0, return_index=True)
    return matrices[np.sort(keep)]


def _solve_lp(matrices: np.ndarray, strict: bool = True) -> Tuple[float, np.ndarray]:
    matrices = _unique_matrices(matrices=matrices)
    count, n, _ = matrices.shape
    # v = delta 1 + w with w >= 0 and delta = p - q
    row_sums = matrices.sum(axis=2) - (1.0 if strict else 0.0)
    a_ub = np.zeros((count * n, n + 2))
    a_ub[:, :n] = -matrices.reshape(count * n, n)
    a_ub[:, n] = -row_sums.reshape(count * n)
    a_ub[:, n + 1] = row_sums.reshape(count * n)
    a_eq = np.concatenate([np.ones(n), [float(n), -float(n)]])[None, :]
    objective = np.zeros(n + 2)
    objective[n] = 1.0
    objective[n + 1] = -1.0
    result = maximize(
        c=objective, a_ub=a_ub, b_ub=np.zeros(count * n), a_eq=a_eq, b_eq=np.array([float(n)])
    )
    if result.status != LpStatus.OPTIMAL:
        raise ConvergenceError(f"witness LP ended with status {result.status.value}")
    delta = result.x[n] - result.x[n + 1]
    return float(delta), delta + result.x[:n]


def margin_profile(matrices: np.ndarray, v: np.ndarray) -> np.ndarray:
    """
    Returns min_i (M_k v)_i for every matrix of a stack.
    """
    return np.min(matrices @ v, axis=1)


def verify_witness(
    matrix_fn: MatrixFunction, v: np.ndarray, times: np.ndarray
) -> Tuple[float, float, np.ndarray]:
    """
    Evaluates a candidate witness on a time grid.

    Returns:
        Tuple[float, float, np.ndarray]: The margin min(min_k min_i (M(t_k) v)_i, min_i v_i), the
        time of the worst constraint and the per-time margin profile.
    """
    v = np.asarray(v, dtype=float)
    profile = margin_profile(matrices=matrix_fn(times), v=v)
    worst = int(np.argmin(profile))
    return min(float(profile[worst]), float(np.min(v))), float(times[worst]), profile


def _refined(times: np.ndarray, period: float | None) -> np.ndarray:
    if period is None:
        period = len(times) * (times[1] - times[0]) if len(times) > 1 else 1.0
    count = 4 * len(times)
    return times[0] + np.arange(count) * (period / count)


def _search(
    stack: np.ndarray,
    times: np.ndarray | None,
    matrix_fn: MatrixFunction | None,
    period: float | None,
    strict: bool,
) -> FeasibilityResult:
    threshold = FEASIBILITY_MARGIN if strict else -FEASIBILITY_MARGIN
    refinements = 0
    constraints = stack
    while True:
        delta, witness = _solve_lp(matrices=constraints, strict=strict)
        if times is None or matrix_fn is None:
            profile = margin_profile(matrices=stack, v=witness)
            worst = int(np.argmin(profile))
            return FeasibilityResult(
                found=delta > FEASIBILITY_MARGIN,
                witness=witness,
                margin=delta,
                lp_margin=delta,
                worst_time=None if times is None else float(times[worst]),
                grid_points=len(stack),
                refinements=refinements,
                profile_times=times,
                profile=profile,
            )
        fine = _refined(times=times, period=period)
        fine_stack = matrix_fn(fine)
        fine_margin, worst_time, profile = verify_witness(
            matrix_fn=lambda _: fine_stack, v=witness, times=fine
        )
        if not strict:
            fine_margin = float(np.min(profile))
        verified = fine_margin > threshold
        if delta <= FEASIBILITY_MARGIN or verified or refinements == MAX_REFINEMENTS:
            logger.debug(
                "Witness search on %s points: lp margin %s, verified margin %s",
                len(constraints),
                delta,
                fine_margin,
            )
            return FeasibilityResult(
                found=delta > FEASIBILITY_MARGIN and verified,
                witness=witness,
                margin=min(delta, fine_margin) if strict else fine_margin,
                lp_margin=delta,
                worst_time=worst_time,
                grid_points=len(stack),
                refinements=refinements,
                profile_times=fine,
                profile=profile,
            )
        logger.info("Witness failed verification (margin %s), refining the grid", fine_margin)
        # the violated constraints of the finer grid join the LP
        violated = profile <= threshold
        constraints = np.concatenate([constraints, fine_stack[violated]], axis=0)
        refinements += 1


def find_positive_vector(
    matrices: Sequence[np.ndarray] | np.ndarray,
    times: np.ndarray | None = None,
    matrix_fn: MatrixFunction | None = None,
    period: float | None = None,
) -> FeasibilityResult:
    """
    Searches v >> 0 with M_k v >> 0 for every matrix of a family by linear programming:
    maximise delta subject to M_k v >= delta 1, v >= delta 1 and sum(v) = n.

    With a time grid and a matrix function, the witness is verified on a 4 times finer grid; when
    the verification fails, the violated constraints of the finer grid are added and the LP is
    solved again (at most twice).

    Parameters:
        matrices (Sequence[np.ndarray] | np.ndarray): The matrices M_k, each n x n.
        times (np.ndarray | None): Sampling times of the matrices, evenly spaced over a period.
        matrix_fn (MatrixFunction | None): Vectorised M(t), returning shape (K, n, n).
        period (float | None): The period covered by the time grid.

    Returns:
        FeasibilityResult: found is True iff the LP margin and the verified margin exceed 1e-9.

    Raises:
        SimplexError: If the simplex pivot bound is exceeded.
    """
    stack = np.asarray(matrices, dtype=float)
    if stack.ndim == 2:
        stack = stack[None]
    if len(stack) == 0:
        raise ValueError("At least one constraint matrix is required")
    grid = None if times is None else np.asarray(times, dtype=float)
    return _search(stack=stack, times=grid, matrix_fn=matrix_fn, period=period, strict=True)


def find_nonnegative_vector(
    matrices: Sequence[np.ndarray] | np.ndarray,
    times: np.ndarray | None = None,
    matrix_fn: MatrixFunction | None = None,
    period: float | None = None,
) -> FeasibilityResult:
    """
    Searches v >> 0 with M_k v >= 0 for every matrix of a family: maximise rho subject to
    M_k v >= 0, v >= rho 1 and sum(v) = n.

    The result's lp_margin is rho, its margin the smallest entry of M(t) v on the verification
    grid; found is True iff rho exceeds 1e-9 and the verified margin is at least -1e-9.
    """
    stack = np.asarray(matrices, dtype=float)
    if stack.ndim == 2:
        stack = stack[None]
    grid = None if times is None else np.asarray(times, dtype=float)
    try:
        return _search(stack=stack, times=grid, matrix_fn=matrix_fn, period=period, strict=False)
    except ConvergenceError:
        # only v = 0 satisfies the constraints
        return FeasibilityResult(
            found=False,
            witness=None,
            margin=-np.inf,
            lp_margin=-np.inf,
            worst_time=None,
            grid_points=len(stack),
            refinements=0,
        )


def is_nonsingular_m_matrix(matrix: np.ndarray) -> bool:
    """
    Decides whether a Z-matrix is a non-singular M-matrix, i.e. admits u >> 0 with A u >> 0.

    Raises:
        ValueError: If an off-diagonal entry is positive.
    """
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    off_diagonal = matrix - np.diag(np.diag(matrix))
    if np.any(off_diagonal > 1e-12):
        raise ValueError("Not a Z-matrix: positive off-diagonal entries")
    return find_positive_vector(matrices=[matrix]).found


__all__ = [
    "FeasibilityResult",
    "LinearFlowCache",
    "find_nonnegative_vector",
    "find_positive_vector",
    "floquet_multipliers",
    "fundamental_matrix",
    "is_nonsingular_m_matrix",
    "margin_profile",
    "solve_i_minus_t",
    "spectral_radius",
    "verify_witness",
]
