# Copyright (C) 2026 The perisolve authors. All rights reserved.
# SPDX-License-Identifier: MIT

"""
This module holds the in-memory representation of a periodic patch-structured population system
with delayed birth terms, the loader validating JSON model documents, and the helpers sampling the
coefficients and community matrices on time grids.

A model with n patches reads, for i = 1..n,

    x_i'(t) = -d_i(t) x_i(t) + sum_j a_ij(t) x_j(t) + sum_k beta_ik(t) B_ik(t, x_i),

where B_ik is h_ik(t, x_i(t - tau_ik(t))) for a discrete delay and the integral of
gamma_ik(s) h_ik(s, x_i(s)) over [t - tau_ik(t), t] for a delay density.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterator, List, Mapping, Tuple

import numpy as np
from scipy.integrate import trapezoid

from perisolve.errors import (
    ExprDomainError,
    ExprNameError,
    ExprSyntaxError,
    ModelPeriodicityError,
    ModelSchemaError,
    ModelSignError,
)
from perisolve.expr import (
    RESERVED_NAMES,
    PeriodicExpr,
    PeriodicityCheck,
    check_periodicity,
    parse,
)
from perisolve.expr.nodes import FUNCTIONS, BinaryOp, Constant, Value
from perisolve.model.nonlinearities import (
    MackeyGlass,
    Nonlinearity,
    Ricker,
    ScaledRicker,
    make_nonlinearity,
)
from perisolve.sysutils import PathType

logger = logging.getLogger(__name__)

VALIDATION_GRID = 512
REFINEMENT_FACTOR = 4
DEFAULT_QUAD_NODES = 33
CONSTANCY_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class Kernel:
    """
    A delay kernel: a discrete delay tau(t), or a density gamma on [t - tau(t), t].
    """

    kind: str
    tau: PeriodicExpr
    gamma: PeriodicExpr | None = None

    @property
    def is_discrete(self) -> bool:
        """
        True for a discrete delay.
        """
        return self.kind == "discrete"


@dataclass(frozen=True, eq=False)
class DelayTerm:
    """
    One delayed birth term beta(t) B(t, x_i) of an equation.
    """

    beta: PeriodicExpr
    kernel: Kernel
    nonlinearity: Nonlinearity


@dataclass(frozen=True, eq=False)
class Equation:
    """
    The coefficients of one patch: death rate, immigration rates (0-based source index) and
    delayed birth terms.
    """

    d: PeriodicExpr
    a: Dict[int, PeriodicExpr]
    terms: Tuple[DelayTerm, ...]


@dataclass(frozen=True, eq=False)
class SystemModel:
    """
    A validated model.
    """

    n: int
    omega: float
    equations: Tuple[Equation, ...]
    tau_max: float
    parameters: Dict[str, float] = field(default_factory=dict)
    name: str = ""

    def coefficients(self) -> Iterator[Tuple[int, str, PeriodicExpr]]:
        """
        Iterates over every coefficient as (0-based equation, name, expression).
        """
        for i, equation in enumerate(self.equations):
            yield i, "d", equation.d
            for j, expr in sorted(equation.a.items()):
                yield i, f"a[{i + 1},{j + 1}]", expr
            for k, term in enumerate(equation.terms):
                prefix = f"terms[{k + 1}]"
                yield i, f"{prefix}.beta", term.beta
                yield i, f"{prefix}.kernel.tau", term.kernel.tau
                if term.kernel.gamma is not None:
                    yield i, f"{prefix}.kernel.gamma", term.kernel.gamma
                yield i, f"{prefix}.nonlinearity.c", term.nonlinearity.c

    def terms(self) -> Iterator[Tuple[int, int, DelayTerm]]:
        """
        Iterates over every delay term as (0-based equation, 0-based term, term).
        """
        for i, equation in enumerate(self.equations):
            for k, term in enumerate(equation.terms):
                yield i, k, term

    def grid(self, points: int = VALIDATION_GRID) -> np.ndarray:
        """
        Returns evenly spaced times covering one period, [0, omega).
        """
        return np.arange(points) * (self.omega / points)

    def is_autonomous(self) -> bool:
        """
        True when every coefficient is constant within 1e-12 on the validation grid.
        """
        times = self.grid()
        return all(
            expr.is_constant or expr.range_on(times) < CONSTANCY_TOLERANCE
            for _, _, expr in self.coefficients()
        )

    def is_nicholson(self) -> bool:
        """
        True when every birth nonlinearity is of Ricker type.
        """
        return all(isinstance(term.nonlinearity, Ricker) for _, _, term in self.terms())

    def rescaled(self, v: np.ndarray) -> "SystemModel":
        """
        Applies the change of variables x_i = v_i y_i.

        Parameters:
            v (np.ndarray): A strictly positive vector.

        Returns:
            SystemModel: The model satisfied by y.
        """
        v = np.asarray(v, dtype=float)
        if v.shape != (self.n,) or np.any(v <= 0.0):
            raise ValueError(f"Scaling vector must be positive with {self.n} entries, got {v}")
        equations = []
        for i, equation in enumerate(self.equations):
            a = {j: _scaled_expr(expr, float(v[j] / v[i])) for j, expr in equation.a.items()}
            terms = []
            for term in equation.terms:
                nonlinearity = term.nonlinearity
                factor = float(nonlinearity.rescaled_c(1.0, float(v[i])))
                terms.append(
                    DelayTerm(
                        beta=term.beta,
                        kernel=term.kernel,
                        nonlinearity=make_nonlinearity(
                            kind=nonlinearity.kind,
                            c=_scaled_expr(nonlinearity.c, factor),
                            alpha=nonlinearity.alpha,
                        ),
                    )
                )
            equations.append(Equation(d=equation.d, a=a, terms=tuple(terms)))
        return SystemModel(
            n=self.n,
            omega=self.omega,
            equations=tuple(equations),
            tau_max=self.tau_max,
            parameters=dict(self.parameters),
            name=f"{self.name} (rescaled)",
        )


def _scaled_expr(expr: PeriodicExpr, factor: float) -> PeriodicExpr:
    node = BinaryOp("*", Constant(factor), expr.node)
    return PeriodicExpr(node=node, period=expr.period, source=node.to_source())


@dataclass(frozen=True, eq=False)
class MatrixBundle:
    """
    The community matrices at one time: D (diagonal death rates), A (immigration, zero diagonal),
    B (diagonal aggregated birth coefficients) and M = B + A - D.
    """

    d: np.ndarray
    a: np.ndarray
    b: np.ndarray
    m: np.ndarray


@dataclass(frozen=True, eq=False)
class MatrixSeries:
    """
    Community matrices stacked over a time grid.
    """

    times: np.ndarray
    d: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def d_minus_a(self) -> np.ndarray:
        """
        Returns D(t_k) - A(t_k) with shape (K, n, n).
        """
        return _diag_stack(self.d) - self.a

    def m(self) -> np.ndarray:
        """
        Returns M(t_k) = B(t_k) + A(t_k) - D(t_k) with shape (K, n, n).
        """
        return _diag_stack(self.b - self.d) + self.a


def _diag_stack(values: np.ndarray) -> np.ndarray:
    count, n = values.shape
    result = np.zeros((count, n, n))
    result[:, np.arange(n), np.arange(n)] = values
    return result


@dataclass(frozen=True, eq=False)
class TermTable:
    """
    Samples of one delay term on a time grid.
    """

    beta: np.ndarray
    tau: np.ndarray
    c: np.ndarray


@dataclass(frozen=True, eq=False)
class CoefficientTable:
    """
    Samples of every coefficient of a model on a time grid.
    """

    times: np.ndarray
    d: np.ndarray
    a: np.ndarray
    terms: Tuple[Tuple[TermTable, ...], ...]


def _as_source(value: Any, where: str) -> str:
    if isinstance(value, bool) or not isinstance(value, (str, int, float)):
        raise ModelSchemaError(f"{where}: expected an expression string or a number")
    return value if isinstance(value, str) else repr(float(value))


def _require(document: Mapping[str, Any], key: str, where: str) -> Any:
    if not isinstance(document, Mapping):
        raise ModelSchemaError(f"{where}: expected an object")
    if key not in document:
        raise ModelSchemaError(f"{where}: missing field {key!r}")
    return document[key]


class _ModelReader:
    """
    Turns a model document into a SystemModel, parsing and validating every coefficient.
    """

    def __init__(self, document: Mapping[str, Any], parameters: Mapping[str, float]) -> None:
        self._document = document
        self._parameters = self._read_parameters(overrides=parameters)
        self._omega = 0.0

    def _read_parameters(self, overrides: Mapping[str, float]) -> Dict[str, float]:
        declared = self._document.get("parameters", {})
        if not isinstance(declared, Mapping):
            raise ModelSchemaError("parameters: expected an object")
        for name in list(declared) + list(overrides):
            if name in RESERVED_NAMES or name in FUNCTIONS:
                raise ModelSchemaError(f"parameters: name {name!r} is reserved")
        unknown = sorted(set(overrides) - set(declared))
        if unknown:
            raise ModelSchemaError(f"parameters: unknown parameter(s) {unknown}")
        values = {}
        for name, value in (dict(declared) | dict(overrides)).items():
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ModelSchemaError(f"parameters.{name}: expected a number")
            values[name] = float(value)
        return values

    def read(self, name: str) -> SystemModel:
        n = _require(self._document, "n", "model")
        if isinstance(n, bool) or not isinstance(n, int) or n < 1:
            raise ModelSchemaError(f"n: expected a positive integer, got {n!r}")
        self._omega = self._constant(_require(self._document, "omega", "model"), where="omega")
        if self._omega <= 0.0:
            raise ModelSchemaError(f"omega: must be positive, got {self._omega}")
        raw_equations = _require(self._document, "equations", "model")
        if not isinstance(raw_equations, list) or len(raw_equations) != n:
            raise ModelSchemaError(f"equations: expected a list of {n} equations")
        equations = tuple(self._equation(raw=raw, i=i, n=n) for i, raw in enumerate(raw_equations))
        model = SystemModel(
            n=n,
            omega=self._omega,
            equations=equations,
            tau_max=0.0,
            parameters=dict(self._parameters),
            name=name,
        )
        _validate(model=model)
        return SystemModel(
            n=n,
            omega=self._omega,
            equations=equations,
            tau_max=_tau_max(model=model),
            parameters=dict(self._parameters),
            name=name,
        )

    def _constant(self, raw: Any, where: str) -> float:
        expr = self._expr(raw=raw, where=where, period=1.0)
        if not expr.is_constant:
            raise ModelSchemaError(f"{where}: expected a constant expression")
        return float(expr(0.0))

    def _expr(self, raw: Any, where: str, period: float | None = None) -> PeriodicExpr:
        source = _as_source(raw, where=where)
        try:
            node = parse(source, constants=self._parameters)
        except (ExprSyntaxError, ExprNameError) as err:
            raise ModelSchemaError(f"{where}: {err}") from err
        return PeriodicExpr(node=node, period=period or self._omega, source=source)

    def _equation(self, raw: Mapping[str, Any], i: int, n: int) -> Equation:
        where = f"equations[{i + 1}]"
        d = self._expr(_require(raw, "d", where), where=f"{where}.d")
        raw_a = raw.get("a", {})
        if not isinstance(raw_a, Mapping):
            raise ModelSchemaError(f"{where}.a: expected an object")
        a = {}
        for key, value in raw_a.items():
            try:
                j = int(key) - 1
            except ValueError as err:
                raise ModelSchemaError(f"{where}.a: key {key!r} is not an index") from err
            if not 0 <= j < n or j == i:
                raise ModelSchemaError(f"{where}.a: invalid source patch {key!r}")
            a[j] = self._expr(value, where=f"{where}.a[{key}]")
        raw_terms = raw.get("terms", [])
        if not isinstance(raw_terms, list):
            raise ModelSchemaError(f"{where}.terms: expected a list")
        terms = tuple(
            self._term(raw=term, where=f"{where}.terms[{k + 1}]")
            for k, term in enumerate(raw_terms)
        )
        return Equation(d=d, a=a, terms=terms)

    def _term(self, raw: Mapping[str, Any], where: str) -> DelayTerm:
        beta = self._expr(_require(raw, "beta", where), where=f"{where}.beta")
        raw_kernel = _require(raw, "kernel", where)
        kind = _require(raw_kernel, "type", f"{where}.kernel")
        tau = self._expr(_require(raw_kernel, "tau", f"{where}.kernel"), where=f"{where}.tau")
        match kind:
            case "discrete":
                kernel = Kernel(kind=kind, tau=tau)
            case "density":
                gamma = self._expr(
                    _require(raw_kernel, "gamma", f"{where}.kernel"), where=f"{where}.gamma"
                )
                kernel = Kernel(kind=kind, tau=tau, gamma=gamma)
            case _:
                raise ModelSchemaError(f"{where}.kernel: unsupported kernel type {kind!r}")
        raw_nonlinearity = _require(raw, "nonlinearity", where)
        nl_kind = _require(raw_nonlinearity, "type", f"{where}.nonlinearity")
        c = self._expr(_require(raw_nonlinearity, "c", f"{where}.nonlinearity"), where=f"{where}.c")
        alpha = self._constant(raw_nonlinearity.get("alpha", 1.0), where=f"{where}.alpha")
        try:
            nonlinearity = make_nonlinearity(kind=nl_kind, c=c, alpha=alpha)
        except ValueError as err:
            raise ModelSchemaError(f"{where}.nonlinearity: {err}") from err
        return DelayTerm(beta=beta, kernel=kernel, nonlinearity=nonlinearity)


_NONNEGATIVE = ("a[", ".beta", ".tau", ".gamma")


def _sample(expr: PeriodicExpr, times: np.ndarray, i: int, name: str) -> np.ndarray:
    try:
        return expr(times)
    except ExprDomainError as err:
        raise ModelSchemaError(f"equations[{i + 1}].{name}: {err}") from err


def _periodicity(
    expr: PeriodicExpr, omega: float, samples: int, i: int, name: str
) -> PeriodicityCheck:
    try:
        return check_periodicity(expr.node, omega, samples=samples)
    except ExprDomainError as err:
        raise ModelSchemaError(f"equations[{i + 1}].{name}: {err}") from err


def _validate(model: SystemModel) -> None:
    for i, name, expr in model.coefficients():
        check = _periodicity(expr=expr, omega=model.omega, samples=VALIDATION_GRID, i=i, name=name)
        if not check.periodic:
            check = _periodicity(
                expr=expr,
                omega=model.omega,
                samples=VALIDATION_GRID * REFINEMENT_FACTOR,
                i=i,
                name=name,
            )
        if not check.periodic:
            raise ModelPeriodicityError(
                f"equation {i + 1}: coefficient {name} is not {model.omega!r}-periodic "
                f"(discrepancy {check.discrepancy!r} at t={check.worst_t!r})"
            )
        if name == "d":
            _check_sign(model=model, i=i, name=name, expr=expr, strict=True)
        elif any(marker in name for marker in _NONNEGATIVE):
            _check_sign(model=model, i=i, name=name, expr=expr, strict=False)


def _check_sign(model: SystemModel, i: int, name: str, expr: PeriodicExpr, strict: bool) -> None:
    values = _sample(expr, model.grid(), i=i, name=name)
    violated = np.any(values <= 0.0) if strict else np.any(values < 0.0)
    if not violated:
        return
    times = model.grid(VALIDATION_GRID * REFINEMENT_FACTOR)
    values = _sample(expr, times, i=i, name=name)
    worst = int(np.argmin(values))
    raise ModelSignError(
        equation=i + 1, coefficient=name, worst_t=float(times[worst]), value=float(values[worst])
    )


def _tau_max(model: SystemModel) -> float:
    times = model.grid(VALIDATION_GRID * REFINEMENT_FACTOR)
    taus = [np.max(term.kernel.tau(times)) for _, _, term in model.terms()]
    return float(max(taus, default=0.0))


def load_model(
    document: Mapping[str, Any] | str,
    parameters: Mapping[str, float] | None = None,
    name: str = "",
) -> SystemModel:
    """
    Builds a validated model from a model document.

    Parameters:
        document (Mapping[str, Any] | str): The parsed document or its JSON text.
        parameters (Mapping[str, float] | None): Overrides for the document parameters.
        name (str): A display name (defaults to the document "name" field).

    Returns:
        SystemModel: The validated model.

    Raises:
        ModelSchemaError: On malformed documents or expressions.
        ModelPeriodicityError: When a coefficient is not omega-periodic.
        ModelSignError: When a sign constraint fails, naming the equation, coefficient and worst t.
    """
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as err:
            raise ModelSchemaError(f"model document is not valid JSON: {err}") from err
    if not isinstance(document, Mapping):
        raise ModelSchemaError("model: expected an object")
    reader = _ModelReader(document=document, parameters=parameters or {})
    model = reader.read(name=name or str(document.get("name", "")))
    logger.info(
        "Loaded model %s: n=%s, omega=%s, tau_max=%s",
        model.name,
        model.n,
        model.omega,
        model.tau_max,
    )
    return model


def read_model(path: PathType, parameters: Mapping[str, float] | None = None) -> SystemModel:
    """
    Reads and validates a model document stored as a JSON file.
    """
    path = Path(path)
    document = path.read_text(encoding="utf-8")
    return load_model(document=document, parameters=parameters, name=path.stem)


def term_weight(term: DelayTerm, t: Value, quad_nodes: int = DEFAULT_QUAD_NODES) -> Value:
    """
    Returns the aggregated birth coefficient of one term: beta(t) for a discrete delay, and
    beta(t) times the trapezoid integral of gamma over [t - tau(t), t] for a density.
    """
    beta = term.beta(t)
    if term.kernel.is_discrete:
        return beta
    _check_quad_nodes(quad_nodes)
    t_array = np.atleast_1d(np.asarray(t, dtype=float))
    tau = np.atleast_1d(term.kernel.tau(t_array))
    nodes = (t_array - tau)[:, None] + tau[:, None] * np.linspace(0.0, 1.0, quad_nodes)[None, :]
    gamma = term.kernel.gamma(nodes)
    integral = trapezoid(gamma, dx=1.0, axis=1) * tau / (quad_nodes - 1)
    result = np.asarray(beta) * integral
    return float(result[0]) if np.ndim(t) == 0 else result


def _check_quad_nodes(quad_nodes: int) -> None:
    if quad_nodes < 2:
        raise ValueError(f"quad_nodes must be at least 2, got {quad_nodes}")


def beta_i(model: SystemModel, i: int, t: Value, quad_nodes: int = DEFAULT_QUAD_NODES) -> Value:
    """
    Returns the aggregated birth coefficient beta_i(t) of equation i (0-based).

    Parameters:
        model (SystemModel): The model.
        i (int): 0-based equation index.
        t (Value): A time or an array of times.
        quad_nodes (int): Trapezoid nodes for delay densities (at least 2).

    Returns:
        Value: beta_i at the given time(s).
    """
    if not 0 <= i < model.n:
        raise IndexError(f"equation index {i} out of range for n={model.n}")
    total = np.zeros(np.shape(t))
    for term in model.equations[i].terms:
        total = total + term_weight(term=term, t=t, quad_nodes=quad_nodes)
    return float(total) if np.ndim(t) == 0 else total


def matrix_series(
    model: SystemModel, times: np.ndarray, quad_nodes: int = DEFAULT_QUAD_NODES
) -> MatrixSeries:
    """
    Samples D, A and the diagonal of B over a time grid.
    """
    times = np.asarray(times, dtype=float)
    n = model.n
    d = np.zeros((len(times), n))
    a = np.zeros((len(times), n, n))
    b = np.zeros((len(times), n))
    for i, equation in enumerate(model.equations):
        d[:, i] = equation.d(times)
        for j, expr in equation.a.items():
            a[:, i, j] = expr(times)
        b[:, i] = beta_i(model=model, i=i, t=times, quad_nodes=quad_nodes)
    return MatrixSeries(times=times, d=d, a=a, b=b)


def community_matrices(
    model: SystemModel, t: float, quad_nodes: int = DEFAULT_QUAD_NODES
) -> MatrixBundle:
    """
    Returns the community matrices D(t), A(t), B(t) and M(t) = B(t) + A(t) - D(t).
    """
    series = matrix_series(model=model, times=np.array([t]), quad_nodes=quad_nodes)
    d = np.diag(series.d[0])
    b = np.diag(series.b[0])
    return MatrixBundle(d=d, a=series.a[0], b=b, m=b + series.a[0] - d)


def nonlinearity_eval(nonlinearity: Nonlinearity, t: Value, x: Value) -> Value:
    """
    Evaluates h(t, x).
    """
    return nonlinearity.at(t=t, x=x)


def tabulate(model: SystemModel, times: np.ndarray) -> CoefficientTable:
    """
    Samples every coefficient of a model on a time grid.

    Parameters:
        model (SystemModel): The model.
        times (np.ndarray): The sampling times.

    Returns:
        CoefficientTable: d with shape (K, n), a with shape (K, n, n) and, per equation, one
        TermTable per delay term.
    """
    times = np.asarray(times, dtype=float)
    d = np.stack([equation.d(times) for equation in model.equations], axis=1)
    a = np.zeros((len(times), model.n, model.n))
    terms: List[Tuple[TermTable, ...]] = []
    for i, equation in enumerate(model.equations):
        for j, expr in equation.a.items():
            a[:, i, j] = expr(times)
        terms.append(
            tuple(
                TermTable(
                    beta=term.beta(times),
                    tau=term.kernel.tau(times),
                    c=term.nonlinearity.c(times),
                )
                for term in equation.terms
            )
        )
    return CoefficientTable(times=times, d=d, a=a, terms=tuple(terms))


__all__ = [
    "CoefficientTable",
    "DelayTerm",
    "Equation",
    "Kernel",
    "MackeyGlass",
    "MatrixBundle",
    "MatrixSeries",
    "Nonlinearity",
    "Ricker",
    "ScaledRicker",
    "SystemModel",
    "TermTable",
    "beta_i",
    "community_matrices",
    "load_model",
    "matrix_series",
    "nonlinearity_eval",
    "read_model",
    "tabulate",
    "term_weight",
]
