# Copyright (C) 2026 The perisolve authors. All rights reserved.
# SPDX-License-Identifier: MIT

"""
This module provides HistoryFunction, the dense piecewise cubic Hermite representation of a
solution (or of an initial history) used to answer delayed lookups.

Each knot stores the state and two slopes: the slope of the segment ending at the knot and the
slope of the segment starting at it. They coincide everywhere except at the junction between an
initial history and the solution it generates, where the solution is only continuous.
"""

from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from perisolve.errors import HistorySpanError

SPAN_TOLERANCE = 1e-12


class HistoryFunction:
    """
    A growable piecewise cubic Hermite interpolant of an R^n valued function.
    """

    def __init__(
        self,
        knots: np.ndarray,
        values: np.ndarray,
        slopes: np.ndarray,
        capacity: int | None = None,
    ) -> None:
        """
        Initializes the history from knot data.

        Parameters:
            knots (np.ndarray): Strictly increasing knot times, shape (K,).
            values (np.ndarray): States at the knots, shape (K, n).
            slopes (np.ndarray): Derivatives at the knots, shape (K, n).
            capacity (int | None): Number of knots to preallocate for later appends.
        """
        knots = np.asarray(knots, dtype=float)
        values = np.atleast_2d(np.asarray(values, dtype=float))
        slopes = np.atleast_2d(np.asarray(slopes, dtype=float))
        if knots.ndim != 1 or len(knots) == 0:
            raise ValueError("A history needs at least one knot")
        if values.shape != (len(knots), values.shape[1]) or slopes.shape != values.shape:
            raise ValueError("Knot, value and slope arrays have inconsistent shapes")
        if np.any(np.diff(knots) <= 0.0):
            raise ValueError("History knots must be strictly increasing")
        size = max(len(knots), capacity or 0)
        n = values.shape[1]
        self._knots = np.empty(size)
        self._values = np.empty((size, n))
        self._slopes_in = np.empty((size, n))
        self._slopes_out = np.empty((size, n))
        self._count = len(knots)
        self._knots[: self._count] = knots
        self._values[: self._count] = values
        self._slopes_in[: self._count] = slopes
        self._slopes_out[: self._count] = slopes

    @property
    def dimension(self) -> int:
        """
        Number of components n.
        """
        return self._values.shape[1]

    @property
    def knots(self) -> np.ndarray:
        """
        Knot times (read-only view).
        """
        view = self._knots[: self._count]
        view.flags.writeable = False
        return view

    @property
    def values(self) -> np.ndarray:
        """
        States at the knots (read-only view).
        """
        view = self._values[: self._count]
        view.flags.writeable = False
        return view

    @property
    def slopes(self) -> np.ndarray:
        """
        Outgoing slopes at the knots (read-only view).
        """
        view = self._slopes_out[: self._count]
        view.flags.writeable = False
        return view

    @property
    def t_start(self) -> float:
        """
        First knot time.
        """
        return float(self._knots[0])

    @property
    def t_end(self) -> float:
        """
        Last knot time.
        """
        return float(self._knots[self._count - 1])

    @classmethod
    def constant(cls, value: np.ndarray, t_start: float, t_end: float = 0.0) -> "HistoryFunction":
        """
        Creates the constant history equal to value on [t_start, t_end].
        """
        value = np.atleast_1d(np.asarray(value, dtype=float))
        if t_start >= t_end:
            return cls(knots=[t_end], values=[value], slopes=[np.zeros_like(value)])
        return cls(
            knots=[t_start, t_end],
            values=[value, value],
            slopes=[np.zeros_like(value), np.zeros_like(value)],
        )

    @classmethod
    def from_function(
        cls,
        function: Callable[[np.ndarray], np.ndarray],
        derivative: Callable[[np.ndarray], np.ndarray],
        t_start: float,
        t_end: float,
        step: float,
    ) -> "HistoryFunction":
        """
        Samples a function and its derivative on knots spaced by step and ending at t_end.

        Parameters:
            function (Callable): Vectorised function returning an array of shape (K, n).
            derivative (Callable): Its derivative, same conventions.
            t_start (float): Left end of the span (rounded outwards to a whole step).
            t_end (float): Right end of the span, always a knot.
            step (float): Knot spacing.
        """
        count = int(np.ceil((t_end - t_start) / step - 1e-9))
        knots = t_end - step * np.arange(count, -1, -1)
        values = np.asarray(function(knots), dtype=float).reshape(len(knots), -1)
        slopes = np.asarray(derivative(knots), dtype=float).reshape(len(knots), -1)
        return cls(knots=knots, values=values, slopes=slopes)

    @classmethod
    def from_samples(cls, times: np.ndarray, values: np.ndarray) -> "HistoryFunction":
        """
        Builds a history from samples, taking slopes from the not-a-knot cubic spline through them.
        """
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float).reshape(len(times), -1)
        if len(times) < 2:
            return cls(knots=times, values=values, slopes=np.zeros_like(values))
        spline = CubicSpline(times, values, axis=0)
        return cls(knots=times, values=values, slopes=spline(times, 1))

    def copy(self, capacity: int | None = None) -> "HistoryFunction":
        """
        Returns an independent copy, optionally with room for more knots.
        """
        result = HistoryFunction(
            knots=self.knots,
            values=self.values,
            slopes=self._slopes_in[: self._count],
            capacity=max(self._count, capacity or 0),
        )
        # pylint: disable=protected-access
        result._slopes_out[: self._count] = self._slopes_out[: self._count]
        return result

    def append(self, t: float, value: np.ndarray, slope: np.ndarray) -> None:
        """
        Appends a knot after the last one.
        """
        if t <= self.t_end:
            raise ValueError(f"Knot {t} does not follow the last knot {self.t_end}")
        if self._count == len(self._knots):
            self._grow()
        index = self._count
        self._knots[index] = t
        self._values[index] = value
        self._slopes_in[index] = slope
        self._slopes_out[index] = slope
        self._count += 1

    def set_outgoing_slope(self, slope: np.ndarray) -> None:
        """
        Replaces the slope used by the segment that will start at the last knot.
        """
        self._slopes_out[self._count - 1] = slope

    def evaluate(self, t: float | np.ndarray) -> np.ndarray:
        """
        Evaluates the history.

        Parameters:
            t (float | np.ndarray): A time or an array of times within the span.

        Returns:
            np.ndarray: Shape (n,) for a scalar time, (len(t), n) otherwise.

        Raises:
            HistorySpanError: If a time lies outside [t_start, t_end].
        """
        times = np.atleast_1d(np.asarray(t, dtype=float))
        result = self._hermite(times=times, component=None)
        return result[0] if np.ndim(t) == 0 else result

    def evaluate_component(self, component: int, t: float | np.ndarray) -> float | np.ndarray:
        """
        Evaluates one component of the history.
        """
        times = np.atleast_1d(np.asarray(t, dtype=float))
        result = self._hermite(times=times, component=component)
        return float(result[0]) if np.ndim(t) == 0 else result

    def lookup(self, component: int, s: float) -> float:
        """
        Scalar fast path of evaluate_component, used for delayed lookups while integrating.
        """
        count = self._count
        knots = self._knots
        scale = SPAN_TOLERANCE * max(1.0, abs(knots[0]), abs(knots[count - 1]))
        if s < knots[0] - scale or s > knots[count - 1] + scale:
            raise HistorySpanError(
                f"time {s} outside of the history span [{self.t_start}, {self.t_end}]"
            )
        if count == 1:
            return float(self._values[0, component])
        index = int(np.searchsorted(knots[:count], s, side="right")) - 1
        index = min(max(index, 0), count - 2)
        left = float(knots[index])
        width = float(knots[index + 1]) - left
        theta = min(max((s - left) / width, 0.0), 1.0)
        one_minus = 1.0 - theta
        return (
            (1.0 + 2.0 * theta) * one_minus * one_minus * float(self._values[index, component])
            + theta * one_minus * one_minus * width * float(self._slopes_out[index, component])
            + theta * theta * (3.0 - 2.0 * theta) * float(self._values[index + 1, component])
            + theta * theta * (theta - 1.0) * width * float(self._slopes_in[index + 1, component])
        )

    def _check_span(self, times: np.ndarray) -> None:
        scale = SPAN_TOLERANCE * max(1.0, abs(self.t_start), abs(self.t_end))
        if np.any(times < self.t_start - scale) or np.any(times > self.t_end + scale):
            raise HistorySpanError(
                f"time(s) outside of the history span [{self.t_start}, {self.t_end}]"
            )

    def _hermite(self, times: np.ndarray, component: int | None) -> np.ndarray:
        self._check_span(times=times)
        columns = slice(None) if component is None else component
        if self._count == 1:
            value = self._values[0, columns]
            return np.broadcast_to(value, (len(times),) + np.shape(value)).copy()
        knots = self._knots[: self._count]
        index = np.clip(np.searchsorted(knots, times, side="right") - 1, 0, self._count - 2)
        left = knots[index]
        width = knots[index + 1] - left
        theta = np.clip((times - left) / width, 0.0, 1.0)
        h00 = (1.0 + 2.0 * theta) * (1.0 - theta) ** 2
        h10 = theta * (1.0 - theta) ** 2
        h01 = theta**2 * (3.0 - 2.0 * theta)
        h11 = theta**2 * (theta - 1.0)
        y0 = self._values[index, columns]
        y1 = self._values[index + 1, columns]
        m0 = self._slopes_out[index, columns]
        m1 = self._slopes_in[index + 1, columns]
        if component is None:
            h00, h10, h01, h11, width = (
                h00[:, None], h10[:, None], h01[:, None], h11[:, None], width[:, None]
            )
        return h00 * y0 + h10 * width * m0 + h01 * y1 + h11 * width * m1

    def _grow(self) -> None:
        size = 2 * len(self._knots)
        for name in ("_knots", "_values", "_slopes_in", "_slopes_out"):
            old = getattr(self, name)
            new = np.empty((size,) + old.shape[1:])
            new[: self._count] = old[: self._count]
            setattr(self, name, new)
