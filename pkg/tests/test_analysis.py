# Copyright (C) 2026 The perisolve authors. All rights reserved.
# SPDX-License-Identifier: MIT

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from perisolve.analysis import (
    HYPOTHESES,
    Status,
    check_corollary_31,
    check_corollary_32,
    check_corollary_33,
    check_hypotheses,
)
from perisolve.analysis.attractivity import (
    check_attractivity,
    check_autonomous_attractivity,
    compute_alpha_gamma,
    delta_of_x,
    difference_quotient,
    extrema,
)
from perisolve.analysis.experiments import (
    constant_pair,
    convergence_experiment,
    estimate_permanence,
)
from perisolve.errors import HypothesisError
from perisolve.examples.models import half_period_delay, scalar_nicholson
from perisolve.integrator import SolverConfig
from perisolve.model import load_model
from tests.helpers import ricker_term, scalar_document


def test_hypotheses_of_mackey_glass_example(example_3_1):
    report = check_hypotheses(model=example_3_1)
    assert report.all_satisfied
    assert report.weak == ["H2"]
    assert report.hypotheses["H5"].status == Status.SATISFIED
    assert_allclose(report.witness_u, [1.0, 1.0], atol=1e-6)
    assert report.witness_v is not None
    assert report.linear_part_stable
    assert report.spectral_radius < 1.0


def test_hypotheses_of_distributed_example(example_3_2):
    report = check_hypotheses(model=example_3_2, grid_points=128)
    assert report.all_satisfied
    assert report.hypotheses["H2"].status == Status.SATISFIED_WEAK
    u = report.witness_u
    assert u[1] / u[0] == pytest.approx(math.e, rel=1e-4)
    assert report.hypotheses["H5"].status == Status.SATISFIED
    assert report.hypotheses["H4"].margin > 0.0


def test_hypotheses_of_planar_system(planar_model):
    report = check_hypotheses(model=planar_model)
    assert [report.hypotheses[name].status for name in HYPOTHESES] == [Status.SATISFIED] * 6
    assert report.weak == []
    assert np.all(report.witness_v > 0.0)
    assert report.h5_profile is not None


def test_extinction_fails_h5(extinction_model):
    report = check_hypotheses(model=extinction_model, grid_points=64)
    assert not report.all_satisfied
    assert report.hypotheses["H5"].status == Status.FAILED
    assert report.witness_v is None
    assert report.hypotheses["H3"].status == Status.SATISFIED


def test_vanishing_birth_coefficient_fails_h3():
    model = load_model(document=scalar_document(terms=[ricker_term(beta="sin(pi*t)^2")]))
    report = check_hypotheses(model=model, grid_points=64)
    assert report.hypotheses["H3"].status == Status.FAILED
    assert report.hypotheses["H3"].worst_time == pytest.approx(0.0)


def test_vanishing_ricker_coefficient_is_not_checkable():
    model = load_model(document=scalar_document(terms=[ricker_term(beta=2.0, c="sin(pi*t)^2")]))
    report = check_hypotheses(model=model, grid_points=64)
    assert report.hypotheses["H4"].status == Status.NOT_CHECKABLE
    assert not report.hypotheses["H4"].status.holds
    assert not report.all_satisfied


def test_h4_reports_the_envelope_constant():
    model = load_model(document=scalar_document(terms=[ricker_term(c="1 + 0.5*cos(2*pi*t)")]))
    verdict = check_hypotheses(model=model, grid_points=64).hypotheses["H4"]
    assert verdict.status == Status.SATISFIED
    assert "lower envelope constant c = 1.5" in verdict.detail
    assert verdict.margin == pytest.approx(1.0 / (0.5 * math.e), rel=1e-9)


def test_scalar_criteria(scalar_model, extinction_model, planar_model):
    result = check_corollary_31(model=scalar_model)
    assert result.holds
    assert result.margin == pytest.approx(math.exp(2.0) - 1.0)
    result = check_corollary_31(model=extinction_model)
    assert not result.holds
    assert result.margin == pytest.approx(-0.5)
    with pytest.raises(HypothesisError):
        check_corollary_31(model=planar_model)
    with pytest.raises(HypothesisError):
        check_corollary_32(model=scalar_model)


def test_scalar_density_criterion():
    term = {
        "beta": 2.0,
        "kernel": {"type": "density", "tau": 1.0, "gamma": 1.0},
        "nonlinearity": {"type": "ricker", "c": 1.0},
    }
    result = check_corollary_32(model=load_model(document=scalar_document(terms=[term])))
    assert result.holds
    assert result.margin == pytest.approx(1.0)


def test_planar_criterion(planar_model, scalar_model):
    result = check_corollary_33(model=planar_model)
    assert result.holds
    assert result.condition_i == Status.SATISFIED
    assert result.ratio_min == pytest.approx(4.0)
    assert result.ratio_max == pytest.approx(0.25)
    assert result.condition_ii
    with pytest.raises(HypothesisError):
        check_corollary_33(model=scalar_model)


def test_planar_criterion_falls_back_to_h2(example_3_1):
    result = check_corollary_33(model=example_3_1)
    assert result.condition_i == Status.NOT_CHECKABLE
    assert result.h2_fallback == Status.SATISFIED_WEAK
    assert result.holds


def test_extrema_are_refined():
    bounds = extrema(function=lambda t: np.sin(t + 0.1234), omega=2.0 * math.pi, points=16)
    assert bounds.maximum == pytest.approx(1.0, abs=1e-12)
    assert bounds.argmax == pytest.approx(math.pi / 2.0 - 0.1234, abs=1e-5)
    assert bounds.minimum == pytest.approx(-1.0, abs=1e-12)


def test_alpha_gamma_of_planar_system(planar_model):
    alpha, gamma = compute_alpha_gamma(model=planar_model, v=np.array([1.0, 1.0]))
    assert_allclose(alpha, [4.0 / 3.0] * 2, rtol=1e-9)
    assert_allclose(gamma, [8.0 / 3.0] * 2, rtol=1e-9)
    with pytest.raises(HypothesisError):
        compute_alpha_gamma(model=planar_model, v=np.array([1.0, 10.0]))


def test_attractivity_of_planar_system(planar_model):
    report = check_attractivity(model=planar_model, v=np.array([1.0, 1.0]))
    assert report.condition_met
    assert report.reason is None
    assert report.threshold == pytest.approx(math.exp(2.0))
    assert report.delay_multiples == [[1], [1]]
    assert not report.extended_case
    scaled = check_attractivity(model=planar_model, v=np.array([2.0, 2.0]))
    assert scaled.condition_met
    assert_allclose(scaled.gamma, report.gamma, rtol=1e-9)
    assert scaled.threshold == pytest.approx(report.threshold)


def test_attractivity_below_and_at_the_threshold(scalar_model):
    report = check_attractivity(model=scalar_nicholson(beta=5.0).build())
    assert report.condition_met
    assert report.gamma[0] == pytest.approx(5.0)
    report = check_attractivity(model=scalar_model)
    assert not report.condition_met
    assert "not below" in report.reason


def test_attractivity_needs_delays_multiple_of_the_period():
    report = check_attractivity(model=half_period_delay().build())
    assert not report.delays_are_multiples
    assert not report.condition_met
    assert report.delay_multiples == [[None]]


def test_attractivity_on_the_reduced_period():
    document = scalar_document(terms=[ricker_term(beta="4 + sin(2*t)^2", tau="pi/2")], omega="pi")
    report = check_attractivity(model=load_model(document=document))
    assert report.delays_are_multiples
    assert report.effective_period == pytest.approx(math.pi / 2.0)
    assert report.delay_multiples == [[1]]
    assert report.condition_met


def test_attractivity_needs_ricker(example_3_1):
    with pytest.raises(HypothesisError):
        check_attractivity(model=example_3_1)


def test_autonomous_attractivity(patches_model, scalar_model, periodic_model):
    report = check_autonomous_attractivity(model=patches_model)
    assert report.condition_met
    assert_allclose(report.gamma, [2.0, 2.0], rtol=1e-9)
    assert check_attractivity(model=patches_model).extended_case
    boundary = check_autonomous_attractivity(model=scalar_model, simplified=True)
    assert not boundary.condition_met
    relaxed = check_autonomous_attractivity(model=scalar_model, allow_boundary=True)
    assert relaxed.condition_met
    with pytest.raises(HypothesisError):
        check_autonomous_attractivity(model=periodic_model)


def test_difference_quotient():
    assert difference_quotient(x=1.0, y=1.0) == pytest.approx(0.0, abs=1e-15)
    near = difference_quotient(x=0.5, y=0.5 + 1e-9)
    assert near == pytest.approx(0.5 * math.exp(-0.5), rel=1e-8)
    far = difference_quotient(x=0.5, y=np.array([2.0]))
    assert far[0] == pytest.approx((2.0 * math.exp(-2.0) - 0.5 * math.exp(-0.5)) / 1.5)


@pytest.mark.parametrize("x, m", [(1.0, 0.1), (0.5, 0.5), (1.5, 0.9)])
def test_delta_matches_a_dense_scan(x, m):
    grid = np.linspace(m, 50.0, 10**6)
    brute = float(np.max(np.abs(difference_quotient(x=x, y=grid))))
    delta = delta_of_x(x=x, m=m)
    assert brute - 1e-12 <= delta <= brute + 1e-6


def test_delta_at_one():
    expected = (math.exp(-1.0) - 0.1 * math.exp(-0.1)) / 0.9
    assert delta_of_x(x=1.0, m=0.1) == pytest.approx(expected, rel=1e-9)


@pytest.mark.parametrize("x, m", [(0.0, 0.5), (2.0, 0.5), (1.0, 0.0), (1.0, 1.0)])
def test_delta_domain(x, m):
    with pytest.raises(ValueError):
        delta_of_x(x=x, m=m)


@pytest.mark.slow
def test_permanence_of_scalar_equation(scalar_model):
    config = SolverConfig(steps_per_period=64)
    estimate = estimate_permanence(
        model=scalar_model, trials=4, horizon_periods=100, tail_periods=10, seed=1, config=config
    )
    assert estimate.permanence_observed
    assert estimate.m_emp == pytest.approx(2.0, abs=1e-3)
    assert estimate.l_emp == pytest.approx(2.0, abs=1e-3)
    assert len(estimate.trial_minima) == 4


@pytest.mark.slow
def test_extinction_is_observed(extinction_model):
    config = SolverConfig(steps_per_period=64)
    estimate = estimate_permanence(
        model=extinction_model, trials=3, horizon_periods=100, tail_periods=10, config=config
    )
    assert not estimate.permanence_observed
    assert estimate.l_emp < 1e-6


@pytest.mark.slow
def test_solutions_converge(periodic_model):
    config = SolverConfig(steps_per_period=64)
    phi_a, phi_b = constant_pair(model=periodic_model, low=0.5, high=3.0, config=config)
    difference = convergence_experiment(
        model=periodic_model, phi_a=phi_a, phi_b=phi_b, horizon_periods=60, config=config
    )
    assert difference < 1e-4


def test_permanence_window_validation(scalar_model):
    with pytest.raises(ValueError):
        estimate_permanence(model=scalar_model, horizon_periods=10, tail_periods=0)
    with pytest.raises(ValueError):
        estimate_permanence(model=scalar_model, horizon_periods=10, tail_periods=11)
