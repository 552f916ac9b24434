# Copyright (C) 2026 The perisolve authors. All rights reserved.
# SPDX-License-Identifier: MIT

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from perisolve.errors import ExprDomainError, ExprNameError, ExprSyntaxError
from perisolve.expr import PeriodicExpr, check_periodicity, evaluate, parse, to_source
from perisolve.expr.nodes import Constant


@pytest.mark.parametrize(
    "source, expected",
    [
        ("1 + 2*3", 7.0),
        ("(1 + 2)*3", 9.0),
        ("-t^2", -9.0),
        ("2^3^2", 512.0),
        ("2*-t", -6.0),
        ("t/2/3", 0.5),
        ("10 - 4 - 3", 3.0),
        ("1.5e1 + .5", 15.5),
    ],
)
def test_precedence_and_associativity(source, expected):
    assert evaluate(parse(source), 3.0) == pytest.approx(expected)


def test_constants_and_functions():
    assert evaluate(parse("pi"), 0.0) == math.pi
    assert evaluate(parse("e"), 0.0) == math.e
    assert evaluate(parse("sqrt(abs(-4)) + log(e) + exp(0)"), 0.0) == pytest.approx(4.0)
    assert evaluate(parse("sin(t)^2 + cos(t)^2"), 0.7) == pytest.approx(1.0)


def test_parameters_are_substituted():
    node = parse("a*t + b", constants={"a": 2.0, "b": -1.0})
    assert evaluate(node, 3.0) == pytest.approx(5.0)


def test_array_evaluation_keeps_the_shape():
    times = np.linspace(0.0, 1.0, 7)
    assert_allclose(evaluate(parse("2*t + 1"), times), 2.0 * times + 1.0)
    constant = evaluate(parse("3"), times)
    assert constant.shape == times.shape
    assert_allclose(constant, 3.0)


@pytest.mark.parametrize("source", ["-2", "2^-1", "sin(t)^2 - abs(cos(2*t))/(1 + t)", "-(t - pi)"])
def test_printed_source_parses_back_to_the_same_tree(source):
    node = parse(source)
    assert parse(to_source(node)) == node


def test_negative_parameters_print_as_literals():
    node = parse("a*t", constants={"a": -2.0})
    assert parse(to_source(node)) == node
    assert parse("-2") == Constant(-2.0)
    assert evaluate(parse("-2^2"), 0.0) == pytest.approx(-4.0)


@pytest.mark.parametrize(
    "source, offset",
    [
        ("1 +", 3),
        ("(1", 2),
        ("2 $ 3", 2),
        ("2 * é", 4),
        ("1 2", 2),
    ],
)
def test_syntax_errors_report_the_byte_offset(source, offset):
    with pytest.raises(ExprSyntaxError) as info:
        parse(source)
    assert info.value.offset == offset


@pytest.mark.parametrize("source", ["x + 1", "foo(t)", "tt"])
def test_unknown_names(source):
    with pytest.raises(ExprNameError):
        parse(source)


@pytest.mark.parametrize(
    "source, t",
    [("log(t)", 0.0), ("1/t", 0.0), ("sqrt(t)", -1.0), ("0^-1", 0.0), ("exp(t)", 1000.0)],
)
def test_domain_errors(source, t):
    with pytest.raises(ExprDomainError):
        evaluate(parse(source), t)


def test_periodicity_check():
    assert check_periodicity(parse("sin(2*t)"), math.pi).periodic
    check = check_periodicity(parse("sin(t)"), math.pi)
    assert not check.periodic
    assert check.discrepancy == pytest.approx(2.0, abs=0.01)
    with pytest.raises(ValueError):
        check_periodicity(parse("t"), 1.0, samples=8)


def test_periodic_expr():
    constant = PeriodicExpr(node=parse("2*pi"), period=1.0)
    assert constant.is_constant
    assert constant(0.3) == pytest.approx(2.0 * math.pi)
    wave = PeriodicExpr(node=parse("sin(2*pi*t)"), period=1.0)
    assert not wave.is_constant
    assert wave.range_on(np.arange(4) / 4.0) == pytest.approx(2.0)
