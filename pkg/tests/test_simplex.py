# Copyright (C) 2026 The perisolve authors. All rights reserved.
# SPDX-License-Identifier: MIT

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.optimize import linprog

from perisolve.errors import SimplexError
from perisolve.linalg.simplex import LpStatus, maximize


def test_small_problem():
    # max 3x + 2y, x + y <= 4, x + 3y <= 6, x <= 3
    result = maximize(
        c=np.array([3.0, 2.0]),
        a_ub=np.array([[1.0, 1.0], [1.0, 3.0], [1.0, 0.0]]),
        b_ub=np.array([4.0, 6.0, 3.0]),
    )
    assert result.status == LpStatus.OPTIMAL
    assert result.objective == pytest.approx(11.0)
    assert_allclose(result.x, [3.0, 1.0], atol=1e-12)


def test_negative_right_hand_side():
    result = maximize(c=np.array([-1.0]), a_ub=np.array([[-1.0]]), b_ub=np.array([-2.0]))
    assert result.status == LpStatus.OPTIMAL
    assert result.objective == pytest.approx(-2.0)


def test_infeasible():
    result = maximize(c=np.array([1.0, 1.0]), a_ub=np.array([[1.0, 1.0]]), b_ub=np.array([-1.0]))
    assert result.status == LpStatus.INFEASIBLE


def test_unbounded():
    result = maximize(c=np.array([1.0, 0.0]), a_ub=np.array([[1.0, -1.0]]), b_ub=np.array([1.0]))
    assert result.status == LpStatus.UNBOUNDED


def test_redundant_equalities():
    result = maximize(
        c=np.array([1.0, 0.0]),
        a_eq=np.array([[1.0, 1.0], [2.0, 2.0]]),
        b_eq=np.array([1.0, 2.0]),
    )
    assert result.status == LpStatus.OPTIMAL
    assert_allclose(result.x, [1.0, 0.0], atol=1e-12)


def test_degenerate_cycling_example():
    # cycles under the largest-coefficient rule
    c = np.array([0.75, -20.0, 0.5, -6.0])
    a_ub = np.array([[0.25, -8.0, -1.0, 9.0], [0.5, -12.0, -0.5, 3.0], [0.0, 0.0, 1.0, 0.0]])
    b_ub = np.array([0.0, 0.0, 1.0])
    result = maximize(c=c, a_ub=a_ub, b_ub=b_ub, max_pivots=100)
    assert result.status == LpStatus.OPTIMAL
    assert result.objective == pytest.approx(1.25)
    assert_allclose(result.x, [1.0, 0.0, 1.0, 0.0], atol=1e-12)


def test_pivot_bound():
    with pytest.raises(SimplexError):
        maximize(c=np.array([1.0]), a_ub=np.array([[1.0]]), b_ub=np.array([1.0]), max_pivots=0)


@pytest.mark.parametrize("seed", range(20))
def test_random_programs_against_scipy(seed):
    rng = np.random.default_rng(seed)
    variables, inequalities = 6, 8
    c = rng.normal(size=variables)
    a_ub = rng.uniform(-0.5, 1.0, size=(inequalities, variables))
    b_ub = a_ub.sum(axis=1) / variables + rng.uniform(0.1, 1.0, size=inequalities)
    a_eq = np.ones((1, variables))
    b_eq = np.array([1.0])
    a_ub = np.vstack([a_ub, np.eye(variables)])
    b_ub = np.concatenate([b_ub, np.full(variables, 10.0)])

    result = maximize(c=c, a_ub=a_ub, b_ub=b_ub, a_eq=a_eq, b_eq=b_eq)
    expected = linprog(-c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, method="highs")

    assert expected.status == 0
    assert result.status == LpStatus.OPTIMAL
    assert result.objective == pytest.approx(-expected.fun, abs=1e-9)
    assert np.all(a_ub @ result.x <= b_ub + 1e-9)
    assert a_eq @ result.x == pytest.approx(b_eq)
    assert np.all(result.x >= -1e-12)
