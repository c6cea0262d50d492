"""Autocorrelation, Ljung-Box / McLeod-Li portmanteau tests and lag pairs."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSeriesError, DomainError
from .moments import TestResult
from .series import ReturnSeries, as_array
from .special import ChiSquare, Normal

__all__ = [
    "Transform",
    "AcfResult",
    "LagPairs",
    "acf",
    "ljung_box",
    "mcleod_li",
    "lag_pairs",
    "DEFAULT_LAGS",
    "DEFAULT_ML_LAGS",
]

# about one trading month
DEFAULT_LAGS = 21
DEFAULT_ML_LAGS = 26


class Transform(str, enum.Enum):
    IDENTITY = "identity"
    SQUARE = "square"
    ABSOLUTE = "absolute"

    def apply(self, x: np.ndarray) -> np.ndarray:
        if self is Transform.SQUARE:
            return x * x
        if self is Transform.ABSOLUTE:
            return np.abs(x)
        return x


@dataclass(frozen=True, eq=False)
class AcfResult:
    transform: Transform
    rho: np.ndarray = field(repr=False)
    band_halfwidth: float
    n: int

    @property
    def lags(self) -> np.ndarray:
        return np.arange(1, len(self.rho) + 1)

    @property
    def significant(self) -> np.ndarray:
        """Lags whose autocorrelation falls outside the 95% band."""
        return self.lags[np.abs(self.rho) > self.band_halfwidth]


@dataclass(frozen=True, eq=False)
class LagPairs:
    """``(r_{t-1}, r_t)`` pairs dated at ``t``."""

    dates: tuple
    previous: np.ndarray = field(repr=False)
    current: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.current)

    @property
    def pairs(self) -> list:
        return list(zip(self.dates, self.previous.tolist(), self.current.tolist()))


def _autocorrelations(x: np.ndarray, m: int) -> np.ndarray:
    n = len(x)
    if m < 1:
        raise DomainError(f"max lag must be >= 1, got {m}")
    if m >= n:
        raise DomainError(f"max lag {m} must be smaller than the sample size {n}")
    d = x - x.mean()
    gamma0 = float(d @ d)
    scale = max(1.0, float(np.abs(x).max()))
    if gamma0 <= n * (np.finfo(float).eps * scale) ** 2:
        raise DegenerateSeriesError("zero variance: autocorrelations are undefined")
    return np.array([d[k:] @ d[:-k] for k in range(1, m + 1)]) / gamma0


def acf(r, m: int = DEFAULT_LAGS, transform=Transform.IDENTITY) -> AcfResult:
    """Sample autocorrelations at lags ``1..m`` of ``transform(r)``.

    Uses the full-sample mean and the divisor-n lag-0 autocovariance.  The
    confidence band is the i.i.d. asymptotic ``z_0.975 / sqrt(n)``.
    """
    transform = Transform(transform)
    x = transform.apply(as_array(r))
    rho = _autocorrelations(x, m)
    n = len(x)
    return AcfResult(transform, rho, Normal().quantile(0.975) / math.sqrt(n), n)


def _lb_statistic(rho: np.ndarray, n: int) -> np.ndarray:
    # cumulative LB(1..m) from the autocorrelations at lags 1..m
    lags = np.arange(1, len(rho) + 1)
    return n * (n + 2.0) * np.cumsum(rho ** 2 / (n - lags))


def _lb_result(stat, m, n, transform):
    return TestResult(
        test_name="ljung_box" if transform is Transform.IDENTITY else f"ljung_box[{transform.value}]",
        statistic=float(stat),
        df=float(m),
        p_value=float(ChiSquare(m).sf(stat)),
        null_hypothesis=f"rho_1 = ... = rho_{m} = 0",
        sample_size=n,
    )


def ljung_box(r, m: int = DEFAULT_LAGS, transform=Transform.IDENTITY) -> TestResult:
    """Ljung-Box portmanteau test on ``m`` lags; chi-square with ``m`` df (no model correction)."""
    transform = Transform(transform)
    x = transform.apply(as_array(r))
    rho = _autocorrelations(x, m)
    return _lb_result(_lb_statistic(rho, len(x))[-1], m, len(x), transform)


def mcleod_li(r, max_m: int = DEFAULT_ML_LAGS) -> list:
    """Ljung-Box on squared returns for every lag count ``1..max_m``.

    Returns a list of ``(m, TestResult)``.
    """
    x = Transform.SQUARE.apply(as_array(r))
    rho = _autocorrelations(x, max_m)
    stats = _lb_statistic(rho, len(x))
    return [
        (m, _lb_result(stats[m - 1], m, len(x), Transform.SQUARE))
        for m in range(1, max_m + 1)
    ]


def lag_pairs(r: ReturnSeries, window=None) -> LagPairs:
    """Consecutive return pairs, optionally restricted to ``window = (start, end)``.

    A pair belongs to the window when the later date lies within it (inclusive).
    """
    values = as_array(r)
    dates = r.dates[1:]
    prev, cur = values[:-1], values[1:]
    if window is not None:
        start, end = window
        keep = np.array([start <= d <= end for d in dates], dtype=bool)
        dates = tuple(d for d, k in zip(dates, keep) if k)
        prev, cur = prev[keep], cur[keep]
    return LagPairs(tuple(dates), prev.copy(), cur.copy())
