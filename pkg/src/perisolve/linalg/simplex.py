# Copyright (C) 2026 The perisolve authors. All rights reserved.
# SPDX-License-Identifier: MIT

"""
A dense two-phase tableau simplex method with Bland's anti-cycling rule.

It solves small linear programs

    maximize c.x  subject to  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0

such as the witness searches of the linear algebra package, without any external LP solver.
"""

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from perisolve.errors import SimplexError

logger = logging.getLogger(__name__)

PIVOT_TOLERANCE = 1e-11
FEASIBILITY_TOLERANCE = 1e-9


class LpStatus(str, Enum):
    """
    Outcome of a linear program.
    """

    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True, eq=False)
class LpResult:
    """
    Solution of a linear program; x and objective are only meaningful when optimal.
    """

    status: LpStatus
    x: np.ndarray
    objective: float
    pivots: int


class _Tableau:
    """
    A simplex tableau: constraint rows, one objective row (last) and the right-hand side column
    (last). The objective row stores reduced costs of a maximisation, z + r.x = value.
    """

    def __init__(self, table: np.ndarray, basis: np.ndarray, max_pivots: int) -> None:
        self.table = table
        self.basis = basis
        self.pivots = 0
        self._max_pivots = max_pivots

    def run(self, allowed: int) -> LpStatus:
        """
        Pivots until optimal or unbounded; only the first `allowed` columns may enter.
        """
        while True:
            costs = self.table[-1, :allowed]
            candidates = np.flatnonzero(costs < -PIVOT_TOLERANCE)
            if len(candidates) == 0:
                return LpStatus.OPTIMAL
            entering = int(candidates[0])
            column = self.table[:-1, entering]
            positive = np.flatnonzero(column > PIVOT_TOLERANCE)
            if len(positive) == 0:
                return LpStatus.UNBOUNDED
            ratios = np.maximum(self.table[positive, -1], 0.0) / column[positive]
            best = np.min(ratios)
            ties = positive[ratios <= best + PIVOT_TOLERANCE * max(1.0, abs(best))]
            leaving = int(ties[np.argmin(self.basis[ties])])
            self.pivot(row=leaving, column=entering)

    def pivot(self, row: int, column: int) -> None:
        """
        Makes `column` basic in `row`.
        """
        self.pivots += 1
        if self.pivots > self._max_pivots:
            raise SimplexError(f"simplex exceeded {self._max_pivots} pivots")
        table = self.table
        table[row] /= table[row, column]
        factors = table[:, column].copy()
        factors[row] = 0.0
        table -= np.outer(factors, table[row])
        self.basis[row] = column


def maximize(
    c: np.ndarray,
    a_ub: np.ndarray | None = None,
    b_ub: np.ndarray | None = None,
    a_eq: np.ndarray | None = None,
    b_eq: np.ndarray | None = None,
    max_pivots: int = 50000,
) -> LpResult:
    """
    Maximizes c.x over x >= 0 under inequality and equality constraints.

    Parameters:
        c (np.ndarray): Objective coefficients, shape (m,).
        a_ub (np.ndarray | None): Inequality matrix, shape (p, m).
        b_ub (np.ndarray | None): Inequality bounds, shape (p,).
        a_eq (np.ndarray | None): Equality matrix, shape (q, m).
        b_eq (np.ndarray | None): Equality right-hand sides, shape (q,).
        max_pivots (int): Safety bound on the number of pivots.

    Returns:
        LpResult: Status, solution, objective value and number of pivots.

    Raises:
        SimplexError: If the pivot bound is exceeded.
    """
    c = np.asarray(c, dtype=float)
    count = len(c)
    a_ub = np.zeros((0, count)) if a_ub is None else np.atleast_2d(np.asarray(a_ub, dtype=float))
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float)
    a_eq = np.zeros((0, count)) if a_eq is None else np.atleast_2d(np.asarray(a_eq, dtype=float))
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float)
    n_ub, n_eq = len(b_ub), len(b_eq)
    rows = n_ub + n_eq

    # rows with a negative right-hand side are negated and receive an artificial variable
    flip_ub = b_ub < 0.0
    flip_eq = b_eq < 0.0
    needs_artificial = np.concatenate([flip_ub, np.ones(n_eq, dtype=bool)])
    n_art = int(np.sum(needs_artificial))
    width = count + n_ub + n_art + 1
    table = np.zeros((rows + 1, width))
    table[:n_ub, :count] = np.where(flip_ub[:, None], -a_ub, a_ub)
    table[:n_ub, count : count + n_ub] = np.diag(np.where(flip_ub, -1.0, 1.0))
    table[:n_ub, -1] = np.abs(b_ub)
    table[n_ub:rows, :count] = np.where(flip_eq[:, None], -a_eq, a_eq)
    table[n_ub:rows, -1] = np.abs(b_eq)

    basis = np.empty(rows, dtype=int)
    basis[:n_ub] = count + np.arange(n_ub)
    artificial_rows = np.flatnonzero(needs_artificial)
    for offset, row in enumerate(artificial_rows):
        column = count + n_ub + offset
        table[row, column] = 1.0
        basis[row] = column

    tableau = _Tableau(table=table, basis=basis, max_pivots=max_pivots)
    first_artificial = count + n_ub
    if n_art:
        table[-1, first_artificial:-1] = 1.0
        table[-1] -= table[artificial_rows].sum(axis=0)
        tableau.run(allowed=width - 1)
        if table[-1, -1] < -FEASIBILITY_TOLERANCE * max(1.0, np.abs(b_eq).sum()):
            logger.debug("LP infeasible after phase one (%s pivots)", tableau.pivots)
            return LpResult(LpStatus.INFEASIBLE, np.zeros(count), np.nan, tableau.pivots)
        _drive_out_artificials(tableau=tableau, first_artificial=first_artificial)
        table = tableau.table
    table = np.delete(table, np.s_[first_artificial:-1], axis=1)
    tableau.table = table
    table[-1] = 0.0
    table[-1, :count] = -c
    for row, column in enumerate(tableau.basis):
        if table[-1, column] != 0.0:
            table[-1] -= table[-1, column] * table[row]

    status = tableau.run(allowed=first_artificial)
    x = np.zeros(first_artificial)
    x[tableau.basis] = tableau.table[:-1, -1]
    objective = float(tableau.table[-1, -1]) if status == LpStatus.OPTIMAL else np.nan
    logger.debug("LP %s after %s pivots, objective %s", status.value, tableau.pivots, objective)
    return LpResult(status=status, x=x[:count], objective=objective, pivots=tableau.pivots)


def _drive_out_artificials(tableau: _Tableau, first_artificial: int) -> None:
    keep = []
    for row in range(len(tableau.basis)):
        if tableau.basis[row] < first_artificial:
            keep.append(row)
            continue
        candidates = np.flatnonzero(np.abs(tableau.table[row, :first_artificial]) > PIVOT_TOLERANCE)
        if len(candidates) == 0:
            # redundant equality
            continue
        tableau.pivot(row=row, column=int(candidates[0]))
        keep.append(row)
    rows = keep + [len(tableau.table) - 1]
    tableau.table = tableau.table[rows]
    tableau.basis = tableau.basis[keep]
