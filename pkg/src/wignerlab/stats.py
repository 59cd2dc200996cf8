"""Streaming, mergeable moment accumulators and the scalar checks built on them.

Every Monte Carlo driver reduces its replicas through these accumulators, so
the merge operation has to be order-insensitive: replicas computed on any
number of threads reduce to the same report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DegenerateSampleError",
    "MomentAccumulator",
    "PairAccumulator",
    "normality_stat",
    "loglog_slope",
]

# Tiny negative second moments are roundoff from the one-pass update; anything
# below this floor is a genuine bug, not noise.
_M2_FLOOR = -1e-12


class DegenerateSampleError(ValueError):
    """Raised when a statistic needs spread but the sample has none."""


@dataclass
class MomentAccumulator:
    """Central power sums through fourth order (Welford-style single pass)."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0
    m3: float = 0.0
    m4: float = 0.0

    def update(self, x) -> "MomentAccumulator":
        """Absorb a scalar or an array of samples."""
        arr = np.asarray(x, dtype=float).ravel()
        if arr.size == 0:
            return self
        if arr.size == 1:
            self._push(float(arr[0]))
            return self
        return self.merge_in(_batch(arr))

    def _push(self, x: float) -> None:
        n1 = self.count
        self.count += 1
        n = self.count
        delta = x - self.mean
        delta_n = delta / n
        term = delta * delta_n * n1
        self.mean += delta_n
        self.m4 += (
            term * delta_n * delta_n * (n * n - 3 * n + 3)
            + 6.0 * delta_n * delta_n * self.m2
            - 4.0 * delta_n * self.m3
        )
        self.m3 += term * delta_n * (n - 2) - 3.0 * delta_n * self.m2
        self.m2 += term

    def merge_in(self, other: "MomentAccumulator") -> "MomentAccumulator":
        """In-place merge; commutative and associative up to roundoff."""
        if other.count == 0:
            return self
        if self.count == 0:
            self.count, self.mean = other.count, other.mean
            self.m2, self.m3, self.m4 = other.m2, other.m3, other.m4
            return self
        na, nb = self.count, other.count
        n = na + nb
        delta = other.mean - self.mean
        d_n = delta / n
        m2 = self.m2 + other.m2 + delta * d_n * na * nb
        m3 = (
            self.m3
            + other.m3
            + delta * d_n * d_n * na * nb * (na - nb)
            + 3.0 * d_n * (na * other.m2 - nb * self.m2)
        )
        m4 = (
            self.m4
            + other.m4
            + delta * d_n * d_n * d_n * na * nb * (na * na - na * nb + nb * nb)
            + 6.0 * d_n * d_n * (na * na * other.m2 + nb * nb * self.m2)
            + 4.0 * d_n * (na * other.m3 - nb * self.m3)
        )
        self.mean += nb * d_n
        self.count, self.m2, self.m3, self.m4 = n, m2, m3, m4
        return self

    @property
    def variance(self) -> float:
        """Unbiased sample variance; tiny negative roundoff clamped at 0."""
        if self.count < 2:
            return 0.0
        assert self.m2 > _M2_FLOOR * max(1.0, abs(self.mean)) ** 2
        return max(self.m2, 0.0) / (self.count - 1)

    @property
    def stderr_mean(self) -> float:
        if self.count < 2:
            return math.inf
        return math.sqrt(self.variance / self.count)

    @property
    def skewness(self) -> float:
        if self.m2 <= 0.0:
            raise DegenerateSampleError("zero-variance sample has no skewness")
        n = self.count
        return math.sqrt(n) * self.m3 / self.m2**1.5

    @property
    def excess_kurtosis(self) -> float:
        if self.m2 <= 0.0:
            raise DegenerateSampleError("zero-variance sample has no kurtosis")
        n = self.count
        return n * self.m4 / (self.m2 * self.m2) - 3.0


def merge(a: MomentAccumulator, b: MomentAccumulator) -> MomentAccumulator:
    """Pure merge of two accumulators."""
    out = MomentAccumulator(a.count, a.mean, a.m2, a.m3, a.m4)
    return out.merge_in(b)


def _batch(arr: np.ndarray) -> MomentAccumulator:
    # Two-pass central sums for a whole array; exact and fast, then merged in.
    n = arr.size
    mean = float(arr.mean())
    d = arr - mean
    d2 = d * d
    return MomentAccumulator(n, mean, float(d2.sum()), float((d2 * d).sum()), float((d2 * d2).sum()))


def normality_stat(acc: MomentAccumulator) -> tuple[float, float, float]:
    """(skewness, excess kurtosis, Jarque-Bera statistic) of the sample.

    Under normality the JB statistic is asymptotically chi-squared with two
    degrees of freedom.
    """
    if acc.count < 20:
        raise ValueError(f"need at least 20 samples, got {acc.count}")
    if acc.m2 <= 0.0:
        raise DegenerateSampleError("constant sample: normality statistics undefined")
    skew = acc.skewness
    kurt = acc.excess_kurtosis
    jb = acc.count * (skew * skew / 6.0 + kurt * kurt / 24.0)
    return skew, kurt, jb


@dataclass
class PairAccumulator:
    """Streaming covariance of a pair of real streams, e.g. (Re, Im) parts."""

    count: int = 0
    mean_x: float = 0.0
    mean_y: float = 0.0
    cxx: float = 0.0
    cyy: float = 0.0
    cxy: float = 0.0

    def update(self, x, y) -> "PairAccumulator":
        ax = np.asarray(x, dtype=float).ravel()
        ay = np.asarray(y, dtype=float).ravel()
        if ax.size != ay.size:
            raise ValueError("paired streams must have equal length")
        if ax.size == 0:
            return self
        n = ax.size
        mx, my = float(ax.mean()), float(ay.mean())
        dx, dy = ax - mx, ay - my
        other = PairAccumulator(
            n, mx, my, float((dx * dx).sum()), float((dy * dy).sum()), float((dx * dy).sum())
        )
        return self.merge_in(other)

    def merge_in(self, other: "PairAccumulator") -> "PairAccumulator":
        if other.count == 0:
            return self
        if self.count == 0:
            self.__dict__.update(other.__dict__)
            return self
        na, nb = self.count, other.count
        n = na + nb
        dx = other.mean_x - self.mean_x
        dy = other.mean_y - self.mean_y
        w = na * nb / n
        self.cxx += other.cxx + dx * dx * w
        self.cyy += other.cyy + dy * dy * w
        self.cxy += other.cxy + dx * dy * w
        self.mean_x += nb * dx / n
        self.mean_y += nb * dy / n
        self.count = n
        return self

    @property
    def cov(self) -> float:
        if self.count < 2:
            return 0.0
        return self.cxy / (self.count - 1)

    @property
    def var_x(self) -> float:
        if self.count < 2:
            return 0.0
        assert self.cxx > _M2_FLOOR
        return max(self.cxx, 0.0) / (self.count - 1)

    @property
    def var_y(self) -> float:
        if self.count < 2:
            return 0.0
        assert self.cyy > _M2_FLOOR
        return max(self.cyy, 0.0) / (self.count - 1)

    @property
    def corr(self) -> float:
        denom = math.sqrt(self.var_x * self.var_y)
        if denom == 0.0:
            raise DegenerateSampleError("correlation undefined for constant stream")
        return self.cov / denom


def loglog_slope(ns, values) -> tuple[float, float]:
    """OLS slope and its standard error of log(values) against log(ns)."""
    ns = np.asarray(ns, dtype=float)
    vals = np.asarray(values, dtype=float)
    if ns.size != vals.size or ns.size < 4:
        raise ValueError("need at least 4 (n, value) pairs")
    if np.any(vals <= 0.0) or np.any(ns <= 0.0):
        raise ValueError("log-log fit needs strictly positive data")
    x = np.log(ns)
    y = np.log(vals)
    xbar = x.mean()
    sxx = float(((x - xbar) ** 2).sum())
    slope = float(((x - xbar) * (y - y.mean())).sum() / sxx)
    resid = y - (y.mean() + slope * (x - xbar))
    dof = x.size - 2
    stderr = math.sqrt(float((resid**2).sum()) / dof / sxx) if dof > 0 else math.inf
    return slope, stderr
