"""Online statistics over trajectories.

Time averages of observables along a path (the empirical occupation
measure applied to a function), occupation histograms, log-growth rates,
and batch-means confidence intervals. All accumulators are single-writer
and support an associative merge so replicate results can be combined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import List, Optional

import numpy as np

from .errors import NonMonotoneTime, NonPositiveValue, TooFewBatches

DEFAULT_BATCHES = 50


class RunningAverage:
    """Trapezoidal time average of an (scalar or vector) observable."""

    def __init__(self):
        self.integral = 0.0
        self.elapsed = 0.0
        self._last_t: Optional[float] = None
        self._last_v = None

    def observe(self, t, value):
        if self._last_t is not None:
            if t < self._last_t:
                raise NonMonotoneTime(f"t={t} after t={self._last_t}")
            if t == self._last_t:
                # observable jumped at t; the new value rules what follows
                self._last_v = value
                return
            dt = t - self._last_t
            self.integral = self.integral + 0.5 * dt * (self._last_v + value)
            self.elapsed += dt
        self._last_t = t
        self._last_v = value

    @property
    def mean(self):
        if self.elapsed == 0.0:
            raise ZeroDivisionError("no elapsed time observed")
        return self.integral / self.elapsed

    def merge(self, other: "RunningAverage") -> "RunningAverage":
        out = RunningAverage()
        out.integral = self.integral + other.integral
        out.elapsed = self.elapsed + other.elapsed
        out._last_t = other._last_t
        out._last_v = other._last_v
        return out


class BatchMeans:
    """Batch-means accumulator over the window [t_start, t_end].

    The window is partitioned into n_batches equal batches; each batch
    holds a trapezoidal time average. Observations before t_start are
    retained only to interpolate the value at the window edge.
    """

    def __init__(self, t_start: float, t_end: float, n_batches: int = DEFAULT_BATCHES):
        if n_batches < 1:
            raise ValueError("need at least one batch")
        self.t_start = float(t_start)
        self.t_end = float(t_end)
        self.n_batches = int(n_batches)
        self.batch_len = (self.t_end - self.t_start) / self.n_batches
        self._sums = np.zeros(n_batches)
        self._last_t: Optional[float] = None
        self._last_v: Optional[float] = None

    def observe(self, t: float, value: float):
        if self._last_t is not None:
            if t < self._last_t:
                raise NonMonotoneTime(f"t={t} after t={self._last_t}")
            if t == self._last_t:
                self._last_v = value
                return
        if self._last_t is None or t <= self.t_start:
            self._last_t, self._last_v = t, value
            return
        t0, v0 = self._last_t, self._last_v
        if t0 < self.t_start:
            # interpolate onto the window edge
            w = (self.t_start - t0) / (t - t0)
            t0, v0 = self.t_start, v0 + w * (value - v0)
        t1 = min(t, self.t_end)
        v1 = value
        if t1 < t:
            w = (t1 - self._last_t) / (t - self._last_t)
            v1 = self._last_v + w * (value - self._last_v)
        self._accumulate(t0, v0, t1, v1)
        self._last_t, self._last_v = t, value

    def _accumulate(self, t0, v0, t1, v1):
        """Add the trapezoid on [t0, t1], split across batch boundaries."""
        while t1 - t0 > 0:
            b = min(int((t0 - self.t_start) / self.batch_len), self.n_batches - 1)
            edge = self.t_start + (b + 1) * self.batch_len
            te = min(t1, edge)
            if te <= t0:
                te = t1
            w = (te - t0) / (t1 - t0) if t1 > t0 else 1.0
            ve = v0 + w * (v1 - v0)
            self._sums[b] += 0.5 * (te - t0) * (v0 + ve)
            t0, v0 = te, ve

    @property
    def batch_means(self) -> np.ndarray:
        return self._sums / self.batch_len

    @property
    def mean(self) -> float:
        return float(self._sums.sum() / (self.t_end - self.t_start))

    @property
    def se(self) -> float:
        m = self.batch_means
        return float(np.std(m, ddof=1) / math.sqrt(self.n_batches))


def batch_ci(acc: BatchMeans, confidence: float = 0.95):
    """Normal-theory confidence interval from batch means: (mean, half-width)."""
    if acc.n_batches < 20:
        raise TooFewBatches(f"{acc.n_batches} batches; need >= 20")
    z = NormalDist().inv_cdf(0.5 + confidence / 2.0)
    return acc.mean, z * acc.se


@dataclass
class GrowthRateEstimate:
    value: float
    se: float
    batch_slopes: np.ndarray


def log_growth(ts, values, burn_in: float, horizon: float,
               n_batches: int = DEFAULT_BATCHES, log_input: bool = False) -> GrowthRateEstimate:
    """Asymptotic slope of log(value) over [burn_in, horizon].

    The point estimate is the endpoint slope; the standard error comes
    from the spread of per-batch slopes (equal-length batches, so the
    endpoint slope equals the mean of the batch slopes).
    """
    ts = np.asarray(ts, dtype=float)
    values = np.asarray(values, dtype=float)
    if log_input:
        logs = values
    else:
        if np.any(values <= 0):
            raise NonPositiveValue("log_growth needs strictly positive values")
        logs = np.log(values)
    edges = np.linspace(burn_in, horizon, n_batches + 1)
    log_at = np.interp(edges, ts, logs)
    slopes = np.diff(log_at) / np.diff(edges)
    value = (log_at[-1] - log_at[0]) / (horizon - burn_in)
    se = float(np.std(slopes, ddof=1) / math.sqrt(n_batches)) if n_batches > 1 else 0.0
    return GrowthRateEstimate(value=float(value), se=se, batch_slopes=slopes)


class OccupationHistogram:
    """Time-weighted histogram over a compact box; out-of-box mass tracked."""

    def __init__(self, lows, highs, bins):
        self.lows = np.asarray(lows, dtype=float)
        self.highs = np.asarray(highs, dtype=float)
        self.bins = np.asarray(bins, dtype=int)
        self.weights = np.zeros(tuple(self.bins))
        self.out_mass = 0.0
        self.total_time = 0.0
        self._last_t: Optional[float] = None
        self._last_x = None

    def observe(self, t: float, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self._last_t is not None:
            if t < self._last_t:
                raise NonMonotoneTime(f"t={t} after t={self._last_t}")
            if t == self._last_t:
                self._last_x = x
                return
            dt = t - self._last_t
            self.total_time += dt
            xi = self._last_x
            if np.all(xi >= self.lows) and np.all(xi <= self.highs):
                idx = ((xi - self.lows) / (self.highs - self.lows) * self.bins).astype(int)
                idx = np.minimum(idx, self.bins - 1)
                self.weights[tuple(idx)] += dt
            else:
                self.out_mass += dt
        self._last_t, self._last_x = t, x

    @property
    def in_box(self) -> np.ndarray:
        return self.weights / self.total_time

    @property
    def out_of_box(self) -> float:
        return self.out_mass / self.total_time


class CheckpointRecorder:
    """Records the running-from-zero time average at fixed checkpoint times."""

    def __init__(self, checkpoints):
        self.checkpoints = np.asarray(sorted(checkpoints), dtype=float)
        self.values: List[float] = []
        self._acc = RunningAverage()
        self._next = 0

    def observe(self, t: float, value: float):
        prev_t, prev_v = self._acc._last_t, self._acc._last_v
        while (self._next < len(self.checkpoints)
               and prev_t is not None and t >= self.checkpoints[self._next] > prev_t):
            tc = self.checkpoints[self._next]
            w = (tc - prev_t) / (t - prev_t)
            vc = prev_v + w * (value - prev_v)
            partial = self._acc.integral + 0.5 * (tc - prev_t) * (prev_v + vc)
            self.values.append(partial / tc if tc > 0 else vc)
            self._next += 1
        self._acc.observe(t, value)
        # checkpoint exactly at an observed time
        while self._next < len(self.checkpoints) and t == self.checkpoints[self._next]:
            tc = self.checkpoints[self._next]
            self.values.append(self._acc.integral / tc if tc > 0 else value)
            self._next += 1
