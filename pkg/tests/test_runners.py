# Copyright (C) 2026 The perisolve authors. All rights reserved.
# SPDX-License-Identifier: MIT

import json
import logging
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from perisolve import __version__
from perisolve.analysis import HYPOTHESES
from perisolve.errors import HypothesisError
from perisolve.integrator import SolverConfig
from perisolve.model import read_model
from perisolve.runners import (
    EXIT_FAILED,
    EXIT_OK,
    EXIT_POSITIVITY,
    RunOptions,
    parse_history,
    parse_vector,
    run_attract,
    run_check,
    run_delta,
    run_equilibrium,
    run_periodic,
    run_simulate,
    run_sweep,
    write_manifest,
)
from perisolve.sysutils import resolve_model_path
from tests.helpers import cyclic_document


@pytest.fixture
def cyclic_path(tmp_path):
    path = tmp_path / "cyclic.json"
    path.write_text(json.dumps(cyclic_document()), encoding="utf-8")
    return path


def test_options_defaults_and_merge():
    options = RunOptions()
    assert options.grid == 256
    assert options.tol is None
    assert options.seed == 0
    assert options.jobs == 1
    assert options.out is None
    assert options.fmt == "json"
    merged = RunOptions(grid=64, seed=3, parameters={"beta": 5.0, "d": 1.0}) | RunOptions(
        seed=7, parameters={"beta": 6.0}, fmt="csv"
    )
    assert merged.grid == 64
    assert merged.seed == 7
    assert merged.fmt == "csv"
    assert merged.parameters == {"beta": 6.0, "d": 1.0}
    assert merged.solver_config().steps_per_period == 64


def test_parse_vector():
    assert parse_vector(None) is None
    assert parse_vector("auto") is None
    assert_allclose(parse_vector("1,2.5"), [1.0, 2.5])


def test_parse_history(tmp_path):
    model = read_model(path=resolve_model_path("planar_nicholson"))
    config = SolverConfig(steps_per_period=64)
    history = parse_history(spec="const:1", model=model, config=config)
    assert_allclose(history.evaluate(np.array([0.0]))[0], [1.0, 1.0])
    history = parse_history(spec="const:1,2", model=model, config=config)
    assert_allclose(history.evaluate(np.array([-0.5]))[0], [1.0, 2.0])
    samples = tmp_path / "history.csv"
    samples.write_text("t,x1,x2\n-1,1,2\n-0.5,1,2\n0,1,2\n", encoding="utf-8")
    history = parse_history(spec=f"csv:{samples}", model=model, config=config)
    assert history.t_end == 0.0
    assert_allclose(history.evaluate(np.array([-0.25]))[0], [1.0, 2.0])
    with pytest.raises(ValueError):
        parse_history(spec="const:1,2,3", model=model, config=config)
    with pytest.raises(ValueError):
        parse_history(spec="linear:1", model=model, config=config)


def test_run_delta():
    result = run_delta(xs=[0.1, 1.0, 1.9], m=0.1)
    assert result.exit_code == EXIT_OK
    assert result.header == ["x", "delta", "exp_minus_x", "holds"]
    assert [row[3] for row in result.rows] == [True, True, True]
    expected = (math.exp(-1.0) - 0.1 * math.exp(-0.1)) / 0.9
    assert result.report["table"][1]["delta"] == pytest.approx(expected, rel=1e-9)
    with pytest.raises(ValueError):
        run_delta(xs=[2.5], m=0.1)


def test_run_equilibrium():
    result = run_equilibrium(model="autonomous_patches", options=RunOptions())
    assert result.exit_code == EXIT_OK
    assert result.report["d_minus_a_m_matrix"]
    assert result.report["positive_vector"]
    assert result.header == ["x1", "x2"]
    assert_allclose(result.rows[0], [math.log(2.0)] * 2, rtol=1e-9)
    result = run_equilibrium(model="scalar_nicholson", options=RunOptions(parameters={"beta": 4.0}))
    assert_allclose(result.rows[0], [math.log(4.0)], rtol=1e-9)
    with pytest.raises(HypothesisError):
        run_equilibrium(model="periodic_nicholson", options=RunOptions())


def test_run_check():
    result = run_check(model="scalar_nicholson", options=RunOptions(grid=64))
    assert result.exit_code == EXIT_OK
    assert result.report["all_satisfied"]
    corollaries = result.report["corollaries"]
    assert corollaries["scalar"].holds
    assert "scalar_density" not in corollaries
    assert result.header == ["t", "h2_margin", "h5_margin"]
    failed = run_check(model="extinction", options=RunOptions(grid=64))
    assert failed.exit_code == EXIT_FAILED
    assert not failed.report["all_satisfied"]


def test_run_check_counts_weak_hypotheses_as_satisfied():
    result = run_check(model="example_3_1", options=RunOptions())
    assert result.exit_code == EXIT_OK
    assert result.report["weak"] == ["H2"]
    assert "planar" in result.report["corollaries"]


def test_run_attract():
    result = run_attract(
        model="scalar_nicholson", v=None, confirm_periods=None, options=RunOptions()
    )
    assert result.exit_code == EXIT_FAILED
    assert not result.report["attractivity"].condition_met
    assert not result.report["autonomous"].condition_met
    options = RunOptions(parameters={"beta": 5.0})
    result = run_attract(model="scalar_nicholson", v="auto", confirm_periods=None, options=options)
    assert result.exit_code == EXIT_OK
    assert result.report["attractivity"].confirmation is None


@pytest.mark.slow
def test_run_attract_with_confirmation():
    options = RunOptions(grid=64, parameters={"beta": 5.0})
    result = run_attract(model="scalar_nicholson", v="1", confirm_periods=40, options=options)
    assert result.exit_code == EXIT_OK
    assert result.report["attractivity"].confirmation < 1e-4


def test_run_simulate(tmp_path):
    out = tmp_path / "trajectory.csv"
    options = RunOptions(grid=32, out=out)
    result = run_simulate(model="scalar_nicholson", history="const:2", periods=3, options=options)
    assert result.exit_code == EXIT_OK
    assert result.report["t_end"] == pytest.approx(3.0)
    assert_allclose(result.report["final_state"], [2.0], atol=1e-9)
    assert_allclose(result.report["minimum"], [2.0], atol=1e-9)
    assert result.outputs == [str(out)]
    assert out.read_text(encoding="utf-8").splitlines()[0] == "t,x1"


def test_run_simulate_reports_positivity_breach(cyclic_path):
    options = RunOptions(grid=32)
    result = run_simulate(model=cyclic_path, history="const:1,2,3", periods=2, options=options)
    assert result.exit_code == EXIT_POSITIVITY
    assert 0.0 < result.report["breach_time"] <= 2.0
    assert result.rows is None


def test_run_periodic(tmp_path):
    out = tmp_path / "profile.csv"
    options = RunOptions(out=out)
    result = run_periodic(model="scalar_nicholson", method="fixed-point", options=options)
    assert result.exit_code == EXIT_OK
    assert result.report["fixed_point"].converged
    assert sorted(result.report["hypotheses"]) == list(HYPOTHESES)
    assert result.report["hypotheses"]["H5"] == "satisfied"
    assert result.report["a_priori_bound"]["bound"] == pytest.approx(2.0)
    assert result.header == ["t", "phi1"]
    assert_allclose([row[1] for row in result.rows], 2.0, atol=1e-6)
    assert out.read_text(encoding="utf-8").splitlines()[0] == "t,phi1"
    with pytest.raises(ValueError):
        run_periodic(model="scalar_nicholson", method="newton", options=RunOptions())


def test_run_periodic_warns_about_failed_hypotheses(caplog):
    options = RunOptions(grid=64)
    with caplog.at_level(logging.WARNING):
        result = run_periodic(
            model="extinction", method="fixed-point", options=options, max_iter=50
        )
    assert result.report["hypotheses"]["H5"] == "failed"
    assert "fixed_point" in result.report
    assert any(
        record.getMessage().startswith("H5 is failed for extinction") for record in caplog.records
    )


def test_run_sweep():
    values = [5.0, 9.0]
    result = run_sweep(
        model="scalar_nicholson", name="beta", values=values, mode="attract", options=RunOptions()
    )
    assert result.exit_code == EXIT_OK
    assert [row["condition_met"] for row in result.report["rows"]] == [True, False]
    assert result.header[:2] == ["beta", "condition_met"]
    assert [row[0] for row in result.rows] == values
    result = run_sweep(
        model="scalar_nicholson", name="unknown", values=[1.0], mode="attract", options=RunOptions()
    )
    assert "error" in result.report["rows"][0]
    with pytest.raises(ValueError):
        run_sweep(
            model="scalar_nicholson", name="beta", values=values, mode="plot", options=RunOptions()
        )


def test_run_sweep_of_hypotheses():
    result = run_sweep(
        model="scalar_nicholson",
        name="beta",
        values=[0.5, 2.0],
        mode="check",
        options=RunOptions(grid=64),
    )
    rows = result.report["rows"]
    assert [row["all_satisfied"] for row in rows] == [False, True]
    assert rows[0]["H5"] == "failed"


def test_write_manifest(tmp_path):
    result = run_delta(xs=[1.0], m=0.1)
    skipped = write_manifest(
        command="delta", model=None, options=RunOptions(), result=result, wall_time=0.1
    )
    assert skipped is None
    out = tmp_path / "delta.json"
    options = RunOptions(seed=4, parameters={"beta": 2.0}, out=out)
    path = write_manifest(
        command="delta", model="scalar_nicholson", options=options, result=result, wall_time=0.1
    )
    manifest = json.loads(path.read_text(encoding="utf-8"))
    assert path.name == "delta.json.manifest.json"
    assert manifest["command"] == "delta"
    assert manifest["model"] == "scalar_nicholson"
    assert manifest["seed"] == 4
    assert manifest["parameters"] == {"beta": 2.0}
    assert manifest["version"] == __version__
