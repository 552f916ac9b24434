# Copyright (C) 2026 The perisolve authors. All rights reserved.
# SPDX-License-Identifier: MIT

"""
This module defines the run options shared by the command-line sub-commands and the functions
executing each sub-command. A run returns a RunResult holding the exit code, the JSON report and,
where the command produces one, a table for CSV output.

Exit codes: 0 success, 1 error, 2 hypothesis or criterion not met, 3 no convergence,
4 positivity breach.
"""

import dataclasses
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Sequence

import numpy as np

from perisolve import __version__
from perisolve.analysis import (
    HYPOTHESES,
    check_corollary_31,
    check_corollary_32,
    check_corollary_33,
    check_hypotheses,
)
from perisolve.analysis.attractivity import (
    check_attractivity,
    check_autonomous_attractivity,
    delta_of_x,
)
from perisolve.analysis.experiments import (
    constant_pair,
    convergence_experiment,
    estimate_permanence,
)
from perisolve.errors import (
    ConvergenceError,
    HypothesisError,
    PerisolveError,
    PositivityError,
)
from perisolve.integrator import (
    HistoryFunction,
    SolverConfig,
    constant_history,
    integrate,
    write_trajectory_csv,
)
from perisolve.linalg import fundamental_matrix
from perisolve.model import SystemModel, read_model
from perisolve.periodic import (
    DDE_TOLERANCE,
    check_equilibrium_conditions,
    dde_residual,
    find_equilibrium,
    find_periodic_fixed_point,
    find_periodic_poincare,
    lemma52_bound,
)
from perisolve.sysutils import PathType, resolve_model_path, write_json

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FAILED = 2
EXIT_NOT_CONVERGED = 3
EXIT_POSITIVITY = 4

METHODS = ("fixed-point", "poincare", "both")
SWEEP_MODES = ("attract", "check")
BOUND_TOLERANCE = 1e-9
CONFIRMATION_HISTORIES = (0.5, 5.0)


class RunOptions:
    """
    Options shared by all sub-commands. Options left to None fall back to the defaults of the
    numerical routines; options are merged with "|", the right-hand side winning.
    """

    # pylint: disable=too-many-arguments
    def __init__(
        self,
        grid: int | None = None,
        tol: float | None = None,
        seed: int | None = None,
        jobs: int | None = None,
        parameters: Mapping[str, float] | None = None,
        out: PathType | None = None,
        fmt: str | None = None,
    ) -> None:
        """
        Initializes the options.

        Parameters:
            grid (int | None): Grid points per period.
            tol (float | None): Convergence tolerance of the iterative searches.
            seed (int | None): Seed of the random experiments.
            jobs (int | None): Worker processes for sweeps and experiments.
            parameters (Mapping[str, float] | None): Overrides of the model parameters.
            out (PathType | None): Output file.
            fmt (str | None): Report format, "json" or "csv".
        """
        self._grid = grid
        self._tol = tol
        self._seed = seed
        self._jobs = jobs
        self._parameters = dict(parameters) if parameters else {}
        self._out = out
        self._fmt = fmt

    def __or__(self, other: "RunOptions") -> "RunOptions":
        """
        Combines these options with others, returning new options where the settings of other
        take precedence and parameter overrides are merged.
        """
        if not isinstance(other, RunOptions):
            return NotImplemented
        # pylint: disable=protected-access
        return RunOptions(
            grid=other._grid if other._grid is not None else self._grid,
            tol=other._tol if other._tol is not None else self._tol,
            seed=other._seed if other._seed is not None else self._seed,
            jobs=other._jobs if other._jobs is not None else self._jobs,
            parameters=self._parameters | other._parameters,
            out=other._out if other._out is not None else self._out,
            fmt=other._fmt if other._fmt is not None else self._fmt,
        )

    @property
    def grid(self) -> int:
        """
        Grid points per period (256 by default).
        """
        return self._grid if self._grid is not None else 256

    @property
    def tol(self) -> float | None:
        """
        The requested tolerance, or None for the routine defaults.
        """
        return self._tol

    @property
    def seed(self) -> int:
        """
        Seed of the random experiments (0 by default).
        """
        return self._seed if self._seed is not None else 0

    @property
    def jobs(self) -> int:
        """
        Worker processes (1 by default).
        """
        return self._jobs if self._jobs is not None else 1

    @property
    def parameters(self) -> Dict[str, float]:
        """
        Overrides of the model parameters.
        """
        return dict(self._parameters)

    @property
    def out(self) -> Path | None:
        """
        The output file, if any.
        """
        return Path(self._out) if self._out is not None else None

    @property
    def fmt(self) -> str:
        """
        The report format ("json" by default).
        """
        return self._fmt or "json"

    def solver_config(self) -> SolverConfig:
        """
        Returns the numerical settings with steps_per_period equal to the grid.
        """
        return SolverConfig(steps_per_period=self.grid)


@dataclass(frozen=True, eq=False)
class RunManifest:
    """
    What is needed to reproduce a run. The wall time is kept out of the report itself.
    """

    command: str
    model: str | None
    parameters: Dict[str, float]
    seed: int
    version: str
    wall_time: float
    outputs: List[str] = field(default_factory=list)


@dataclass(frozen=True, eq=False)
class RunResult:
    """
    The outcome of a sub-command.
    """

    exit_code: int
    report: Any
    header: List[str] | None = None
    rows: List[List[Any]] | None = None
    outputs: List[str] = field(default_factory=list)


def load(model: PathType, options: RunOptions) -> SystemModel:
    """
    Resolves a model argument (path or fixture name) and loads it with the parameter overrides.

    Raises:
        FileNotFoundError: If the model cannot be found.
        ModelSchemaError: If the document is invalid.
    """
    return read_model(path=resolve_model_path(model), parameters=options.parameters)


def write_manifest(
    command: str, model: PathType | None, options: RunOptions, result: RunResult, wall_time: float
) -> Path | None:
    """
    Writes the run manifest next to the output file, as <out>.manifest.json.

    Returns:
        Path | None: The manifest path, or None without an output file.
    """
    if options.out is None:
        return None
    path = Path(f"{options.out}.manifest.json")
    manifest = RunManifest(
        command=command,
        model=None if model is None else str(model),
        parameters=options.parameters,
        seed=options.seed,
        version=__version__,
        wall_time=wall_time,
        outputs=result.outputs,
    )
    write_json(path=path, obj=manifest)
    return path


def _applicable_corollaries(model: SystemModel, grid: int) -> Dict[str, Any]:
    results: Dict[str, Any] = {}
    match model.n:
        case 1:
            results["scalar"] = check_corollary_31(model=model)
            try:
                results["scalar_density"] = check_corollary_32(model=model)
            except HypothesisError as err:
                logger.debug("Density criterion not applicable to %s: %s", model.name, err)
        case 2:
            results["planar"] = check_corollary_33(model=model, grid_points=grid)
    return results


def run_check(
    model: PathType, options: RunOptions, permanence_trials: int = 0, horizon_periods: int = 200
) -> RunResult:
    """
    Checks the hypotheses and the applicable scalar or planar criteria, and optionally estimates
    permanence from seeded random histories.
    Weakly satisfied hypotheses count as satisfied and are listed under "weak".
    """
    system = load(model=model, options=options)
    report = check_hypotheses(
        model=system, grid_points=options.grid, config=options.solver_config()
    )
    status = EXIT_OK if report.all_satisfied else EXIT_FAILED
    header = ["t", "h2_margin", "h5_margin"]
    rows = None
    if report.profile_times is not None:
        count = len(report.profile_times)
        columns = [report.profile_times]
        for profile in (report.h2_profile, report.h5_profile):
            usable = profile is not None and len(profile) == count
            columns.append(profile if usable else np.full(count, np.nan))
        rows = np.column_stack(columns).tolist()
    result: Dict[str, Any] = {
        "hypotheses": report,
        "weak": report.weak,
        "all_satisfied": report.all_satisfied,
        "corollaries": _applicable_corollaries(model=system, grid=options.grid),
    }
    if permanence_trials > 0:
        result["permanence"] = estimate_permanence(
            model=system,
            trials=permanence_trials,
            horizon_periods=horizon_periods,
            tail_periods=min(20, horizon_periods),
            seed=options.seed,
            config=options.solver_config(),
            jobs=options.jobs,
        )
    return RunResult(
        exit_code=status,
        report=result,
        header=header,
        rows=rows,
    )


def run_periodic(
    model: PathType, method: str, options: RunOptions, max_iter: int = 500
) -> RunResult:
    """
    Locates the periodic solution with the fixed-point route, the period map route, or both.
    H0 to H5 are checked first and their statuses reported; failures only warn.
    Exits 0 when every route used is certified by re-integration, 3 otherwise.

    Raises:
        ValueError: If the method is unknown.
    """
    if method not in METHODS:
        raise ValueError(f"Unsupported method: {method}")
    system = load(model=model, options=options)
    config = options.solver_config()
    hypotheses = check_hypotheses(model=system, grid_points=options.grid, config=config)
    statuses = {name: verdict.status.value for name, verdict in hypotheses.hypotheses.items()}
    report: Dict[str, Any] = {"model": system.name, "method": method, "hypotheses": statuses}
    profiles = {}
    certified = []
    if method in ("fixed-point", "both"):
        cache = fundamental_matrix(model=system, config=config)
        tol = options.tol if options.tol is not None else 1e-10
        profile, diagnostics = find_periodic_fixed_point(
            model=system,
            cache=cache,
            max_iter=max_iter,
            tol=tol,
            config=config,
            hypotheses=hypotheses,
        )
        report["fixed_point"] = diagnostics
        report["spectral_radius"] = cache.spectral_radius
        profiles["fixed_point"] = profile
        certified.append(diagnostics.certified)
    if method in ("poincare", "both"):
        tol = options.tol if options.tol is not None else 1e-8
        try:
            profile, diagnostics = find_periodic_poincare(model=system, tol=tol, config=config)
        except ConvergenceError as err:
            report["poincare"] = {"converged": False, "error": str(err)}
            certified.append(False)
        else:
            residual = dde_residual(model=system, phi=profile, config=config)
            report["poincare"] = {
                "diagnostics": diagnostics,
                "dde_residual": residual,
                "certified": residual <= DDE_TOLERANCE,
            }
            profiles["poincare"] = profile
            certified.append(residual <= DDE_TOLERANCE)
    if len(profiles) == 2:
        report["cross_method_difference"] = profiles["fixed_point"].sup_distance(
            profiles["poincare"]
        )
    if profiles and system.is_nicholson():
        try:
            bound = lemma52_bound(model=system)
        except HypothesisError as err:
            report["a_priori_bound"] = {"available": False, "reason": str(err)}
        else:
            respected = all(
                bool(np.all(profile.values <= bound + BOUND_TOLERANCE))
                for profile in profiles.values()
            )
            report["a_priori_bound"] = {"available": True, "bound": bound, "respected": respected}
    outputs = []
    if profiles and options.out is not None:
        chosen = profiles.get("fixed_point", profiles.get("poincare"))
        chosen.write_csv(path=options.out)
        outputs.append(str(options.out))
    first = next(iter(profiles.values()), None)
    header = ["t"] + [f"phi{i + 1}" for i in range(system.n)]
    rows = None
    if first is not None:
        rows = np.column_stack([first.times, first.values]).tolist()
    status = EXIT_OK if certified and all(certified) else EXIT_NOT_CONVERGED
    return RunResult(exit_code=status, report=report, header=header, rows=rows, outputs=outputs)


def parse_history(spec: str, model: SystemModel, config: SolverConfig) -> HistoryFunction:
    """
    Parses an initial history: "const:<v>" or "const:<v1>,...,<vn>" for a constant history, or
    "csv:<path>" for samples with header t,x1,...,xn ending at t = 0.

    Raises:
        ValueError: If the history description is malformed.
    """
    kind, _, value = spec.partition(":")
    match kind:
        case "const":
            levels = np.array([float(item) for item in value.split(",")])
            if len(levels) not in (1, model.n):
                raise ValueError(f"const history needs 1 or {model.n} values, got {len(levels)}")
            return constant_history(model=model, value=levels, config=config)
        case "csv":
            data = np.loadtxt(value, delimiter=",", skiprows=1, ndmin=2)
            if data.shape[1] != model.n + 1:
                raise ValueError(f"{value}: expected {model.n + 1} columns, got {data.shape[1]}")
            return HistoryFunction.from_samples(times=data[:, 0], values=data[:, 1:])
        case _:
            raise ValueError(f"Unsupported history: {spec}")


def run_simulate(model: PathType, history: str, periods: int, options: RunOptions) -> RunResult:
    """
    Integrates the model over a number of periods and writes the trajectory.
    Exits 4 when the solution leaves the nonnegative cone.
    """
    system = load(model=model, options=options)
    config = options.solver_config()
    initial = parse_history(spec=history, model=system, config=config)
    try:
        trajectory = integrate(
            model=system, initial_history=initial, t_end=periods * system.omega, config=config
        )
    except PositivityError as err:
        logger.error("%s", err)
        return RunResult(
            exit_code=EXIT_POSITIVITY,
            report={"model": system.name, "error": str(err), "breach_time": err.time},
        )
    knots = np.asarray(trajectory.history.knots)
    values = np.asarray(trajectory.history.values)
    tail = values[knots >= 0.0]
    outputs = []
    if options.out is not None:
        write_trajectory_csv(trajectory=trajectory, path=options.out)
        outputs.append(str(options.out))
    return RunResult(
        exit_code=EXIT_OK,
        report={
            "model": system.name,
            "t_end": trajectory.t_end,
            "steps": len(tail) - 1,
            "final_state": values[-1],
            "minimum": tail.min(axis=0),
            "maximum": tail.max(axis=0),
        },
        header=["t"] + [f"x{i + 1}" for i in range(system.n)],
        rows=np.column_stack([knots, values]).tolist(),
        outputs=outputs,
    )


def parse_vector(spec: str | None) -> np.ndarray | None:
    """
    Parses "auto" (or None) into None and "1,2" into a vector.
    """
    if spec is None or spec == "auto":
        return None
    return np.array([float(item) for item in spec.split(",")])


def run_attract(
    model: PathType, v: str | None, confirm_periods: int | None, options: RunOptions
) -> RunResult:
    """
    Evaluates the global attractivity criterion and, on request, confirms it by integrating two
    solutions from constant histories 0.5 and 5.

    Raises:
        HypothesisError: If a nonlinearity is not of Ricker type.
    """
    system = load(model=model, options=options)
    weight = parse_vector(v)
    report = check_attractivity(model=system, v=weight)
    if confirm_periods:
        config = options.solver_config()
        low, high = constant_pair(
            model=system,
            low=CONFIRMATION_HISTORIES[0],
            high=CONFIRMATION_HISTORIES[1],
            config=config,
        )
        difference = convergence_experiment(
            model=system, phi_a=low, phi_b=high, horizon_periods=confirm_periods, config=config
        )
        report = dataclasses.replace(report, confirmation=difference)
    result: Dict[str, Any] = {"model": system.name, "attractivity": report}
    if system.is_autonomous():
        try:
            result["autonomous"] = check_autonomous_attractivity(model=system, v=weight)
        except HypothesisError as err:
            result["autonomous"] = {"condition_met": False, "reason": str(err)}
    status = EXIT_OK if report.condition_met else EXIT_FAILED
    return RunResult(exit_code=status, report=result)


def run_delta(xs: Sequence[float], m: float) -> RunResult:
    """
    Tabulates delta(x) against exp(-x). Exits 0 when delta(x) < exp(-x) for every x.

    Raises:
        ValueError: If some x lies outside (0, 2) or m outside (0, 1).
    """
    rows = []
    for x in xs:
        delta = delta_of_x(x=x, m=m)
        rows.append([x, delta, math.exp(-x), delta < math.exp(-x)])
    status = EXIT_OK if all(row[3] for row in rows) else EXIT_FAILED
    header = ["x", "delta", "exp_minus_x", "holds"]
    report = {"m": m, "table": [dict(zip(header, row)) for row in rows]}
    return RunResult(exit_code=status, report=report, header=header, rows=rows)


def run_equilibrium(model: PathType, options: RunOptions) -> RunResult:
    """
    Finds the positive equilibrium of an autonomous model. Exits 3 when Newton's method stagnates.

    Raises:
        HypothesisError: If a coefficient is not constant.
    """
    system = load(model=model, options=options)
    conditions = check_equilibrium_conditions(model=system)
    report: Dict[str, Any] = {
        "model": system.name,
        "d_minus_a_m_matrix": conditions.d_minus_a_m_matrix,
        "positive_vector": conditions.positive_vector.found,
    }
    try:
        equilibrium = find_equilibrium(model=system)
    except ConvergenceError as err:
        report["error"] = str(err)
        return RunResult(exit_code=EXIT_NOT_CONVERGED, report=report)
    report["equilibrium"] = equilibrium
    return RunResult(
        exit_code=EXIT_OK,
        report=report,
        header=[f"x{i + 1}" for i in range(system.n)],
        rows=[equilibrium.tolist()],
    )


def _sweep_row(model: str, name: str, value: float, mode: str, grid: int) -> Dict[str, Any]:
    options = RunOptions(grid=grid, parameters={name: value})
    row: Dict[str, Any] = {name: value}
    try:
        system = load(model=model, options=options)
        match mode:
            case "attract":
                report = check_attractivity(model=system)
                row["condition_met"] = report.condition_met
                row["min_alpha"] = None if report.alpha is None else float(np.min(report.alpha))
                row["max_gamma"] = None if report.gamma is None else float(np.max(report.gamma))
                row["threshold"] = report.threshold
            case "check":
                report = check_hypotheses(
                    model=system, grid_points=grid, config=options.solver_config()
                )
                row["all_satisfied"] = report.all_satisfied
                for hypothesis in HYPOTHESES:
                    row[hypothesis] = report.hypotheses[hypothesis].status.value
    except PerisolveError as err:
        row["error"] = str(err)
    return row


def run_sweep(
    model: PathType, name: str, values: Sequence[float], mode: str, options: RunOptions
) -> RunResult:
    """
    Evaluates the attractivity criterion or the hypotheses for each value of one model parameter.
    Rows run in a process pool when jobs > 1 and keep the order of the values.

    Raises:
        ValueError: If the mode is unknown.
    """
    if mode not in SWEEP_MODES:
        raise ValueError(f"Unsupported sweep mode: {mode}")
    path = str(resolve_model_path(model))
    arguments = [(path, name, float(value), mode, options.grid) for value in values]
    if options.jobs > 1:
        with ProcessPoolExecutor(max_workers=options.jobs) as executor:
            rows = list(executor.map(_sweep_row, *zip(*arguments)))
    else:
        rows = [_sweep_row(*argument) for argument in arguments]
    header = list(dict.fromkeys(key for row in rows for key in row))
    table = [[row.get(key) for key in header] for row in rows]
    return RunResult(
        exit_code=EXIT_OK,
        report={"parameter": name, "mode": mode, "rows": rows},
        header=header,
        rows=table,
    )


__all__ = [
    "EXIT_ERROR",
    "EXIT_FAILED",
    "EXIT_NOT_CONVERGED",
    "EXIT_OK",
    "EXIT_POSITIVITY",
    "RunManifest",
    "RunOptions",
    "RunResult",
    "load",
    "parse_history",
    "parse_vector",
    "run_attract",
    "run_check",
    "run_delta",
    "run_equilibrium",
    "run_periodic",
    "run_simulate",
    "run_sweep",
    "write_manifest",
]
