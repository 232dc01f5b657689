"""Uniformly sampled time series and time-Lebesgue norms."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np


@dataclass(frozen=True, eq=False)
class TrajectorySeries:
    """Payloads sampled at uniformly spaced, strictly increasing instants.

    ``values`` is a float array for scalar series and a list otherwise.
    A single sample is allowed (zero-length time window).
    """

    times: np.ndarray
    values: Any = field(repr=False)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.float64).ravel()
        if t.size == 0:
            raise ValueError("empty trajectory")
        if t.size > 1:
            d = np.diff(t)
            if np.any(d <= 0):
                raise ValueError("times must be strictly increasing")
            if np.max(np.abs(d - d.mean())) > 1e-12 * max(abs(d.mean()), abs(t[-1])):
                raise ValueError("times must be uniformly spaced")
        vals = self.values
        if isinstance(vals, np.ndarray) or (len(vals) and np.isscalar(vals[0])):
            vals = np.asarray(vals, dtype=np.float64)
        else:
            vals = list(vals)
        if len(vals) != t.size:
            raise ValueError(f"{len(vals)} values for {t.size} times")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return self.times.size

    @property
    def dt(self) -> float:
        if self.times.size < 2:
            return 0.0
        return float((self.times[-1] - self.times[0]) / (self.times.size - 1))

    @property
    def span(self) -> float:
        return float(self.times[-1] - self.times[0])

    @property
    def is_scalar(self) -> bool:
        return isinstance(self.values, np.ndarray)

    def map(self, fn) -> "TrajectorySeries":
        return TrajectorySeries(self.times, [fn(v) for v in self.values])

    def scalars(self, fn) -> "TrajectorySeries":
        return TrajectorySeries(self.times, np.array([fn(v) for v in self.values], dtype=np.float64))

    def window(self, t0: float, t1: float) -> "TrajectorySeries":
        """Samples with ``t0 <= t <= t1`` (inclusive, with roundoff slack)."""
        eps = 1e-9 * max(self.dt, 1e-300)
        sel = np.nonzero((self.times >= t0 - eps) & (self.times <= t1 + eps))[0]
        if sel.size == 0:
            raise ValueError(f"no samples in [{t0}, {t1}]")
        vals = self.values[sel] if self.is_scalar else [self.values[i] for i in sel]
        return TrajectorySeries(self.times[sel], vals)


def uniform_times(t_end: float, n_steps: int, t0: float = 0.0) -> np.ndarray:
    return t0 + (t_end - t0) * np.arange(n_steps + 1) / max(n_steps, 1)


def trapezoid(values: np.ndarray, dt: float, axis: int = 0) -> np.ndarray:
    """Composite trapezoid on uniform samples (zero for a single sample)."""
    v = np.asarray(values, dtype=np.float64)
    if v.shape[axis] < 2:
        return np.zeros(np.delete(v.shape, axis)) if v.ndim > 1 else np.float64(0.0)
    return dt * (np.sum(v, axis=axis) - 0.5 * (np.take(v, 0, axis=axis) + np.take(v, -1, axis=axis)))


def cumulative_trapezoid(values: np.ndarray, dt: float) -> np.ndarray:
    """Running trapezoid integral starting at zero, same length as ``values``."""
    v = np.asarray(values, dtype=np.float64)
    out = np.zeros_like(v)
    if v.size > 1:
        out[1:] = np.cumsum(0.5 * dt * (v[1:] + v[:-1]))
    return out


def time_norm(values: np.ndarray, dt: float, r: float, axis: int = 0) -> np.ndarray:
    """``L^r`` norm in time of nonnegative samples (max for ``r = inf``)."""
    v = np.abs(np.asarray(values, dtype=np.float64))
    if np.isinf(r):
        return np.max(v, axis=axis)
    if r < 1:
        raise ValueError("time exponent must be >= 1")
    return trapezoid(v ** r, dt, axis=axis) ** (1.0 / r)


def sequence_norm(values: np.ndarray, q: float, axis: int = -1) -> np.ndarray:
    v = np.abs(np.asarray(values, dtype=np.float64))
    if np.isinf(q):
        return np.max(v, axis=axis, initial=0.0)
    return np.sum(v ** q, axis=axis) ** (1.0 / q)


def stack_values(series: TrajectorySeries) -> np.ndarray:
    return np.stack([np.asarray(v) for v in series.values])


def as_series(times: Sequence[float], values) -> TrajectorySeries:
    return TrajectorySeries(np.asarray(times, dtype=np.float64), values)
