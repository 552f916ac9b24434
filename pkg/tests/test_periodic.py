# Copyright (C) 2026 The perisolve authors. All rights reserved.
# SPDX-License-Identifier: MIT

import logging
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from perisolve.analysis import check_hypotheses
from perisolve.errors import ConvergenceError, HypothesisError
from perisolve.examples.models import extinction, scalar_nicholson
from perisolve.integrator import SolverConfig
from perisolve.linalg import fundamental_matrix
from perisolve.periodic import (
    PeriodicProfile,
    check_equilibrium_conditions,
    dde_residual,
    default_initial_profile,
    find_equilibrium,
    find_periodic_fixed_point,
    find_periodic_poincare,
    lemma52_bound,
    operator_f,
)


def test_constant_profile():
    profile = PeriodicProfile.constant(omega=2.0, value=[1.0, 3.0], n=2, points=8)
    assert profile.values.shape == (8, 2)
    assert profile.dimension == 2
    assert_allclose(profile.times, np.arange(8) * 0.25)
    assert_allclose(profile(np.array([0.1, 1.9, 5.3])), [[1.0, 3.0]] * 3)
    assert_allclose(profile.derivative(0.7), [0.0, 0.0], atol=1e-14)
    assert profile.periodicity_gap() == pytest.approx(0.0, abs=1e-14)


def test_profile_interpolation():
    profile = PeriodicProfile.from_function(
        omega=1.0, function=lambda t: np.sin(2.0 * math.pi * t), points=64
    )
    assert profile(0.3)[0] == pytest.approx(math.sin(0.6 * math.pi), abs=1e-5)
    assert profile(1.3)[0] == pytest.approx(profile(0.3)[0], abs=1e-12)
    assert profile.derivative(0.0)[0] == pytest.approx(2.0 * math.pi, rel=1e-3)
    other = PeriodicProfile.constant(omega=1.0, value=0.0, n=1, points=16)
    assert profile.sup_distance(other) == pytest.approx(1.0, abs=1e-3)
    with pytest.raises(ValueError):
        PeriodicProfile(omega=1.0, values=np.ones(3))


def test_profile_csv(tmp_path):
    path = tmp_path / "profile.csv"
    PeriodicProfile.constant(omega=1.0, value=[1.0, 2.0], n=2, points=4).write_csv(path=path)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "t,phi1,phi2"
    assert len(lines) == 5


@pytest.fixture
def scalar_cache(scalar_model):
    return fundamental_matrix(model=scalar_model)


def test_operator_maps_equilibrium_to_itself(scalar_model, scalar_cache):
    phi = PeriodicProfile.constant(omega=1.0, value=2.0, n=1, points=256)
    image = operator_f(model=scalar_model, cache=scalar_cache, phi=phi)
    assert_allclose(image.values, 2.0, atol=1e-8)
    image = operator_f(model=scalar_model, cache=scalar_cache, phi=phi, rule="trapezoid")
    assert_allclose(image.values, 2.0, atol=1e-5)
    with pytest.raises(ValueError):
        operator_f(model=scalar_model, cache=scalar_cache, phi=phi, rule="simpson")


def test_operator_preserves_the_cone(planar_model):
    cache = fundamental_matrix(model=planar_model)
    values = np.random.default_rng(5).uniform(0.0, 3.0, size=(256, 2))
    phi = PeriodicProfile(omega=1.0, values=values)
    image = operator_f(model=planar_model, cache=cache, phi=phi)
    assert np.min(image.values) >= -1e-12


def test_fixed_point_of_scalar_equation(scalar_model, scalar_cache):
    init = PeriodicProfile.constant(omega=1.0, value=0.5, n=1, points=256)
    phi, diagnostics = find_periodic_fixed_point(model=scalar_model, cache=scalar_cache, init=init)
    assert diagnostics.converged
    assert diagnostics.certified
    assert diagnostics.damping < 1.0
    assert diagnostics.final_delta <= 1e-10
    assert_allclose(phi.values, 2.0, atol=1e-6)


def test_fixed_point_halves_damping_when_updates_stall(caplog):
    model = scalar_nicholson(beta=20.0).build()
    cache = fundamental_matrix(model=model)
    with caplog.at_level(logging.WARNING, logger="perisolve.periodic"):
        phi, diagnostics = find_periodic_fixed_point(model=model, cache=cache)
    assert diagnostics.converged
    assert diagnostics.damping <= 0.5
    assert any("damping halved" in record.getMessage() for record in caplog.records)
    assert_allclose(phi.values, math.log(20.0), atol=1e-6)


def test_fixed_point_warns_about_failed_hypotheses(extinction_model, caplog):
    cache = fundamental_matrix(model=extinction_model)
    with caplog.at_level(logging.WARNING, logger="perisolve.periodic"):
        find_periodic_fixed_point(model=extinction_model, cache=cache, max_iter=50)
    messages = [
        record.getMessage() for record in caplog.records if record.name == "perisolve.periodic"
    ]
    assert any(message.startswith("H5 is failed for extinction") for message in messages)


def test_fixed_point_uses_given_hypotheses(scalar_model, scalar_cache, caplog):
    report = check_hypotheses(model=extinction().build(), grid_points=64)
    with caplog.at_level(logging.WARNING, logger="perisolve.periodic"):
        _, diagnostics = find_periodic_fixed_point(
            model=scalar_model, cache=scalar_cache, hypotheses=report
        )
    assert diagnostics.converged
    assert any(record.getMessage().startswith("H5 is failed") for record in caplog.records)


def test_fixed_point_rejects_bad_damping(scalar_model, scalar_cache):
    with pytest.raises(ValueError):
        find_periodic_fixed_point(model=scalar_model, cache=scalar_cache, damping=0.0)
    with pytest.raises(ValueError):
        find_periodic_fixed_point(model=scalar_model, cache=scalar_cache, damping=1.5)


def test_fixed_point_of_periodic_equation(periodic_model):
    cache = fundamental_matrix(model=periodic_model)
    init = default_initial_profile(model=periodic_model, cache=cache)
    assert_allclose(init.values, 0.5 * math.log(5.0), rtol=1e-9)
    phi, diagnostics = find_periodic_fixed_point(model=periodic_model, cache=cache)
    assert diagnostics.converged
    assert diagnostics.dde_residual < 1e-5
    assert np.min(phi.values) > 0.0
    assert np.max(phi.values) <= lemma52_bound(model=periodic_model)[0] + 1e-9
    assert np.max(phi.values) - np.min(phi.values) > 1e-3


@pytest.mark.slow
def test_fixed_point_and_period_map_agree(periodic_model):
    cache = fundamental_matrix(model=periodic_model)
    phi, _ = find_periodic_fixed_point(model=periodic_model, cache=cache)
    psi, diagnostics = find_periodic_poincare(model=periodic_model)
    assert diagnostics.converged
    assert diagnostics.gap <= 1e-8
    assert phi.sup_distance(psi) <= 1e-5


def test_period_map_exhausts_its_horizon(periodic_model):
    config = SolverConfig(steps_per_period=64)
    with pytest.raises(ConvergenceError, match="last gap"):
        find_periodic_poincare(model=periodic_model, max_periods=3, config=config)


def test_dde_residual_at_equilibrium(scalar_model):
    phi = PeriodicProfile.constant(omega=1.0, value=2.0, n=1, points=128)
    assert dde_residual(model=scalar_model, phi=phi) < 1e-9
    off = PeriodicProfile.constant(omega=1.0, value=1.0, n=1, points=128)
    assert dde_residual(model=scalar_model, phi=off) > 1e-2


def test_a_priori_bound(scalar_model, planar_model, extinction_model):
    assert_allclose(lemma52_bound(model=scalar_model), [2.0], rtol=1e-9)
    bound = lemma52_bound(model=planar_model, v=np.array([1.0, 1.0]))
    assert_allclose(lemma52_bound(model=planar_model, v=np.array([3.0, 3.0])), bound, rtol=1e-9)
    with pytest.raises(HypothesisError):
        lemma52_bound(model=extinction_model)


def test_a_priori_bound_needs_ricker(example_3_1):
    with pytest.raises(HypothesisError):
        lemma52_bound(model=example_3_1)


def test_equilibria(scalar_model, patches_model):
    assert_allclose(find_equilibrium(model=scalar_model), [2.0], atol=1e-10)
    assert_allclose(find_equilibrium(model=patches_model), [math.log(2.0)] * 2, atol=1e-10)
    assert_allclose(find_equilibrium(model=scalar_model, init=np.array([3.5])), [2.0], atol=1e-10)
    conditions = check_equilibrium_conditions(model=patches_model)
    assert conditions.d_minus_a_m_matrix
    assert conditions.satisfied


def test_equilibrium_needs_constant_coefficients(periodic_model):
    with pytest.raises(HypothesisError, match="not constant"):
        find_equilibrium(model=periodic_model)
