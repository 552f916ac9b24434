# Copyright (C) 2026 The perisolve authors. All rights reserved.
# SPDX-License-Identifier: MIT

"""Periodic delayed patch-structured population systems.

Usage:
  perisolve check <model> [--permanence=TRIALS] [--horizon=PERIODS] [options]
  perisolve periodic <model> [--method=METHOD] [--max-iter=N] [options]
  perisolve simulate <model> [--history=SPEC] [--periods=K] [options]
  perisolve attract <model> [--v=VECTOR] [--confirm-periods=K] [options]
  perisolve delta [--x=LIST] [--m=M] [options]
  perisolve equilibrium <model> [options]
  perisolve sweep <model> --param=NAME --values=LIST [--mode=MODE] [options]
  perisolve (-h | --help)
  perisolve --version

Commands:
  check        Verify the hypotheses for a positive periodic solution.
  periodic     Locate the periodic solution (fixed-point route, period map, or both).
  simulate     Integrate the model from an initial history.
  attract      Evaluate the global attractivity criterion.
  delta        Tabulate the difference quotient bound delta(x) against exp(-x).
  equilibrium  Find the positive equilibrium of an autonomous model.
  sweep        Evaluate a criterion for several values of one model parameter.

Options:
  --method=METHOD        fixed-point, poincare or both [default: fixed-point].
  --max-iter=N           Iteration bound of the fixed-point route [default: 500].
  --history=SPEC         const:<v>[,<v>...] or csv:<path> [default: const:1].
  --periods=K            Integration horizon in periods [default: 50].
  --v=VECTOR             Weight vector, auto or comma separated [default: auto].
  --confirm-periods=K    Confirm attractivity by integrating K periods.
  --permanence=TRIALS    Estimate permanence from TRIALS random histories.
  --horizon=PERIODS      Horizon of the permanence estimate [default: 200].
  --x=LIST               Comma separated points in (0, 2) [default: 0.1,0.5,1.0,1.5,1.9].
  --m=M                  Lower end of the y range, in (0, 1) [default: 0.1].
  --param=NAME           Parameter to sweep.
  --values=LIST          Comma separated parameter values.
  --mode=MODE            attract or check [default: attract].
  --set=ASSIGNMENTS      Parameter overrides NAME=VALUE[,NAME=VALUE...].
  --grid=N               Grid points per period [default: 256].
  --tol=TOL              Convergence tolerance.
  --seed=SEED            Seed of random experiments [default: 0].
  --jobs=N               Worker processes [default: 1].
  --out=PATH             Output file; the run manifest goes to PATH.manifest.json.
  --format=FORMAT        json or csv [default: json].
  --verbose              Enable debug logging.
  -h --help              Show this screen.
  --version              Show version.

Exit codes: 0 success, 1 error, 2 hypothesis or criterion not met, 3 no convergence,
4 positivity breach.
"""

import logging
import sys
import time
from typing import Any, Dict, List

from docopt import docopt

from perisolve import __version__
from perisolve.errors import ConvergenceError, PerisolveError, PositivityError
from perisolve.runners import (
    EXIT_ERROR,
    EXIT_NOT_CONVERGED,
    EXIT_POSITIVITY,
    RunOptions,
    RunResult,
    run_attract,
    run_check,
    run_delta,
    run_equilibrium,
    run_periodic,
    run_simulate,
    run_sweep,
    write_manifest,
)
from perisolve.sysutils import dumps_json, format_csv, write_json

logger = logging.getLogger(__name__)

COMMANDS = ("check", "periodic", "simulate", "attract", "delta", "equilibrium", "sweep")


def _floats(text: str) -> List[float]:
    return [float(item) for item in text.split(",") if item.strip()]


def _assignments(text: str | None) -> Dict[str, float]:
    if not text:
        return {}
    result = {}
    for item in text.split(","):
        name, separator, value = item.partition("=")
        if not separator:
            raise ValueError(f"Expected NAME=VALUE, got {item!r}")
        result[name.strip()] = float(value)
    return result


def _options(arguments: Dict[str, Any]) -> RunOptions:
    return RunOptions(
        grid=int(arguments["--grid"]),
        tol=None if arguments["--tol"] is None else float(arguments["--tol"]),
        seed=int(arguments["--seed"]),
        jobs=int(arguments["--jobs"]),
        parameters=_assignments(arguments["--set"]),
        out=arguments["--out"],
        fmt=arguments["--format"],
    )


def _dispatch(command: str, arguments: Dict[str, Any], options: RunOptions) -> RunResult:
    model = arguments["<model>"]
    match command:
        case "check":
            trials = arguments["--permanence"]
            return run_check(
                model=model,
                options=options,
                permanence_trials=int(trials) if trials else 0,
                horizon_periods=int(arguments["--horizon"]),
            )
        case "periodic":
            return run_periodic(
                model=model,
                method=arguments["--method"],
                options=options,
                max_iter=int(arguments["--max-iter"]),
            )
        case "simulate":
            return run_simulate(
                model=model,
                history=arguments["--history"],
                periods=int(arguments["--periods"]),
                options=options,
            )
        case "attract":
            confirm = arguments["--confirm-periods"]
            return run_attract(
                model=model,
                v=arguments["--v"],
                confirm_periods=int(confirm) if confirm else None,
                options=options,
            )
        case "delta":
            return run_delta(xs=_floats(arguments["--x"]), m=float(arguments["--m"]))
        case "equilibrium":
            return run_equilibrium(model=model, options=options)
        case "sweep":
            return run_sweep(
                model=model,
                name=arguments["--param"],
                values=_floats(arguments["--values"]),
                mode=arguments["--mode"],
                options=options,
            )
        case _:
            raise ValueError(f"Unsupported command: {command}")


def _emit(command: str, result: RunResult, options: RunOptions) -> None:
    if options.fmt == "csv" and result.header is not None and result.rows is not None:
        text = format_csv(header=result.header, rows=result.rows)
    else:
        text = dumps_json(result.report)
    sys.stdout.write(text)
    # periodic and simulate write their data to --out, the others their report
    if options.out is not None and command not in ("periodic", "simulate"):
        write_json(path=options.out, obj=result.report)
        result.outputs.append(str(options.out))


def main(argv: List[str] | None = None) -> int:
    """
    Runs the command line and returns the exit code.

    Parameters:
        argv (List[str] | None): Arguments without the program name (defaults to sys.argv).

    Returns:
        int: The exit code.
    """
    arguments = docopt(__doc__, argv=argv, version=f"perisolve {__version__}")
    logging.basicConfig(
        level=logging.DEBUG if arguments["--verbose"] else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    command = next(name for name in COMMANDS if arguments[name])
    started = time.perf_counter()
    try:
        options = _options(arguments=arguments)
        if options.fmt not in ("json", "csv"):
            raise ValueError(f"Unsupported format: {options.fmt}")
        result = _dispatch(command=command, arguments=arguments, options=options)
        _emit(command=command, result=result, options=options)
        write_manifest(
            command=command,
            model=arguments["<model>"],
            options=options,
            result=result,
            wall_time=time.perf_counter() - started,
        )
    except PositivityError as err:
        sys.stderr.write(f"error: {err}\n")
        return EXIT_POSITIVITY
    except ConvergenceError as err:
        sys.stderr.write(f"error: {err}\n")
        return EXIT_NOT_CONVERGED
    except (PerisolveError, OSError, ValueError) as err:
        sys.stderr.write(f"error: {err}\n")
        return EXIT_ERROR
    return result.exit_code


def run() -> None:
    """
    Entry point of the console script.
    """
    sys.exit(main())


if __name__ == "__main__":
    run()
