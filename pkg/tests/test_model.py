# Copyright (C) 2026 The perisolve authors. All rights reserved.
# SPDX-License-Identifier: MIT

import copy
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from perisolve.errors import ModelPeriodicityError, ModelSchemaError, ModelSignError
from perisolve.examples.models import scalar_nicholson
from perisolve.expr import PeriodicExpr, parse
from perisolve.model import (
    MackeyGlass,
    Ricker,
    ScaledRicker,
    beta_i,
    community_matrices,
    load_model,
    matrix_series,
    nonlinearity_eval,
    read_model,
    tabulate,
)
from perisolve.sysutils import fixtures_dir
from tests.helpers import fixture_document, ricker_term, scalar_document


def test_read_fixture_uses_the_file_name():
    model = read_model(fixtures_dir() / "example_3_1.json")
    assert model.name == "example_3_1"
    assert model.n == 2
    assert model.omega == pytest.approx(math.pi)
    assert model.parameters == {"eps1": 1.0, "eps2": 1.0, "delta1": 2.0, "delta2": 2.0}


def test_example_3_1_matrices_at_zero(example_3_1):
    bundle = community_matrices(model=example_3_1, t=0.0)
    assert_allclose(bundle.d - bundle.a, [[1.0, -1.0], [-1.0, 2.0]], atol=1e-12)
    assert_allclose(bundle.m, [[2.0, 1.0], [1.0, 0.0]], atol=1e-12)


def test_example_3_1_matrices_over_the_period(example_3_1):
    times = np.linspace(0.0, math.pi, 9)
    series = matrix_series(model=example_3_1, times=times)
    m = series.m()
    assert_allclose(m[:, 0, 0], 1.0 + np.cos(2.0 * times), atol=1e-12)
    assert_allclose(m[:, 1, 1], 1.0 - np.cos(2.0 * times), atol=1e-12)
    assert_allclose(m[:, 0, 1], np.abs(np.cos(2.0 * times)), atol=1e-12)


def test_density_terms_aggregate_to_window_length(example_3_2):
    times = np.linspace(0.0, math.pi, 13)
    assert_allclose(beta_i(model=example_3_2, i=0, t=times), 1.0 + np.exp(np.cos(times) ** 2))
    assert_allclose(beta_i(model=example_3_2, i=1, t=times), 1.0 + np.exp(np.sin(times) ** 2))
    assert beta_i(model=example_3_2, i=0, t=0.0) == pytest.approx(1.0 + math.e)


def test_density_quadrature_is_second_order():
    term = {
        "beta": 1.0,
        "kernel": {"type": "density", "tau": 1.0, "gamma": "2 + sin(t)"},
        "nonlinearity": {"type": "ricker", "c": 1.0},
    }
    model = load_model(document=scalar_document(terms=[term], omega="2*pi"))
    exact = 2.0 + math.cos(-1.0) - 1.0
    coarse = abs(beta_i(model=model, i=0, t=0.0, quad_nodes=33) - exact)
    fine = abs(beta_i(model=model, i=0, t=0.0, quad_nodes=65) - exact)
    assert coarse / fine == pytest.approx(4.0, rel=0.05)
    assert beta_i(model=model, i=0, t=0.0, quad_nodes=2) == pytest.approx(exact, rel=0.2)
    with pytest.raises(ValueError):
        beta_i(model=model, i=0, t=0.0, quad_nodes=1)


def test_density_quadrature_doubling_nodes(example_3_2):
    times = np.linspace(0.0, 2.0 * math.pi, 17)
    for i in range(example_3_2.n):
        coarse = beta_i(model=example_3_2, i=i, t=times, quad_nodes=33)
        fine = beta_i(model=example_3_2, i=i, t=times, quad_nodes=66)
        assert np.max(np.abs(coarse - fine)) < 1e-8


def test_tabulate_shapes(example_3_2):
    table = tabulate(model=example_3_2, times=np.linspace(0.0, 1.0, 5))
    assert table.d.shape == (5, 2)
    assert table.a.shape == (5, 2, 2)
    assert len(table.terms) == 2
    assert table.terms[0][0].tau.shape == (5,)


def test_model_properties(scalar_model, periodic_model, example_3_1, example_3_2):
    assert scalar_model.is_autonomous()
    assert not periodic_model.is_autonomous()
    assert example_3_2.is_nicholson()
    assert not example_3_1.is_nicholson()
    assert example_3_1.tau_max == pytest.approx(1.0, abs=1e-6)
    assert periodic_model.tau_max == pytest.approx(math.pi)
    names = [name for _, name, _ in example_3_2.coefficients()]
    assert "a[1,2]" in names
    assert "terms[1].kernel.gamma" in names


def test_parameter_overrides():
    model = scalar_nicholson().build(parameters={"beta": 3.0})
    assert beta_i(model=model, i=0, t=0.5) == pytest.approx(3.0)
    with pytest.raises(ModelSchemaError):
        scalar_nicholson().build(parameters={"unknown": 1.0})


def test_rescaling(planar_model, scalar_model):
    rescaled = scalar_model.rescaled(np.array([2.0]))
    assert rescaled.equations[0].terms[0].nonlinearity.c(0.0) == pytest.approx(2.0)
    planar = planar_model.rescaled(np.array([1.0, 4.0]))
    assert planar.equations[0].a[1](0.0) == pytest.approx(0.5 * 4.0)
    assert planar.equations[1].a[0](0.0) == pytest.approx(0.5 / 4.0)
    with pytest.raises(ValueError):
        planar_model.rescaled(np.array([1.0, -1.0]))


def _with(document, path, value):
    result = copy.deepcopy(document)
    target = result
    for key in path[:-1]:
        target = target[key]
    target[path[-1]] = value
    return result


@pytest.mark.parametrize(
    "path, value",
    [
        (("n",), 0),
        (("omega",), -1.0),
        (("omega",), "t"),
        (("equations", 0, "d"), "unknown_name"),
        (("equations", 0, "d"), "1 +"),
        (("equations", 0, "a"), {"1": 1.0}),
        (("equations", 0, "a"), {"x": 1.0}),
        (("equations", 0, "terms", 0, "kernel", "type"), "gamma"),
        (("equations", 0, "terms", 0, "nonlinearity", "type"), "logistic"),
        (("equations", 0, "terms", 0, "beta"), [1.0]),
    ],
)
def test_schema_errors(path, value):
    document = fixture_document("example_3_1")
    with pytest.raises(ModelSchemaError):
        load_model(document=_with(document, path, value))


def test_missing_field_and_bad_json():
    document = fixture_document("extinction")
    del document["omega"]
    with pytest.raises(ModelSchemaError, match="omega"):
        load_model(document=document)
    with pytest.raises(ModelSchemaError):
        load_model(document="{not json")


def test_reserved_parameter_names():
    document = scalar_document()
    document["parameters"] = {"t": 1.0}
    with pytest.raises(ModelSchemaError, match="reserved"):
        load_model(document=document)


def test_mackey_glass_exponent_below_one():
    document = fixture_document("example_3_1")
    document["equations"][0]["terms"][0]["nonlinearity"]["alpha"] = 0.5
    with pytest.raises(ModelSchemaError):
        load_model(document=document)


def test_sign_errors_name_the_coefficient():
    with pytest.raises(ModelSignError) as info:
        load_model(document=scalar_document(d="cos(2*pi*t)"))
    assert info.value.equation == 1
    assert info.value.coefficient == "d"
    assert info.value.value < 0.0
    with pytest.raises(ModelSignError) as info:
        load_model(document=scalar_document(terms=[ricker_term(beta="sin(2*pi*t)")]))
    assert info.value.coefficient == "terms[1].beta"


def test_non_periodic_coefficient():
    with pytest.raises(ModelPeriodicityError, match="terms\\[1\\].beta"):
        load_model(document=scalar_document(terms=[ricker_term(beta="2 + sin(t)")]))


def test_periodicity_is_checked_on_a_fine_grid():
    document = scalar_document(d="1 + 0.01*t*sin(64*t)", terms=[ricker_term()], omega="2*pi")
    with pytest.raises(ModelPeriodicityError, match="coefficient d"):
        load_model(document=document)


def _expr(source):
    return PeriodicExpr(node=parse(source), period=1.0)


@pytest.mark.parametrize(
    "nonlinearity, supremum",
    [
        (Ricker(c=_expr("2")), 1.0 / (2.0 * math.e)),
        (MackeyGlass(c=_expr("1"), alpha=1.0), 1.0),
        (MackeyGlass(c=_expr("1"), alpha=2.0), 0.5),
        (ScaledRicker(c=_expr("1"), alpha=2.0), math.exp(-0.5) / math.sqrt(2.0)),
    ],
)
def test_nonlinearities(nonlinearity, supremum):
    c = nonlinearity.c(0.0)
    assert nonlinearity.supremum(c) == pytest.approx(supremum)
    assert nonlinearity.derivative(c, 0.0) == pytest.approx(1.0)
    grid = np.linspace(0.0, 5.0, 200001)
    if nonlinearity.kind == "mackey_glass" and nonlinearity.alpha == 1.0:
        assert np.max(nonlinearity.evaluate(c, grid)) < supremum
    else:
        assert np.max(nonlinearity.evaluate(c, grid)) == pytest.approx(supremum, abs=1e-6)
    x, h = 0.8, 1e-6
    numeric = (nonlinearity.evaluate(c, x + h) - nonlinearity.evaluate(c, x - h)) / (2.0 * h)
    assert nonlinearity.derivative(c, x) == pytest.approx(numeric, rel=1e-6)


def test_nonlinearity_eval():
    ricker = Ricker(c=_expr("1"))
    assert nonlinearity_eval(nonlinearity=ricker, t=0.3, x=1.0) == pytest.approx(math.exp(-1.0))
    glass = MackeyGlass(c=_expr("1"), alpha=1.0)
    assert nonlinearity_eval(nonlinearity=glass, t=0.3, x=1.0) == pytest.approx(0.5)
    periodic = Ricker(c=_expr("1 + sin(2*pi*t)^2"))
    assert nonlinearity_eval(nonlinearity=periodic, t=0.25, x=1.0) == pytest.approx(math.exp(-2.0))
    for nonlinearity in (ricker, glass, periodic):
        assert nonlinearity_eval(nonlinearity=nonlinearity, t=0.7, x=0.0) == 0.0


def test_rescaled_coefficient():
    ricker = Ricker(c=_expr("1.5"))
    x, scale = 0.7, 3.0
    c_prime = ricker.rescaled_c(1.5, scale)
    assert ricker.evaluate(1.5, scale * x) / scale == pytest.approx(ricker.evaluate(c_prime, x))
    glass = MackeyGlass(c=_expr("1"), alpha=2.0)
    c_prime = glass.rescaled_c(1.0, scale)
    assert glass.evaluate(1.0, scale * x) / scale == pytest.approx(glass.evaluate(c_prime, x))
