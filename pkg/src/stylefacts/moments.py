"""Summary statistics, normality tests and the aggregational-Gaussianity scan."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateSeriesError, InsufficientDataError, StylefactsError
from .series import PriceSeries, TimeScale, as_array, log_returns, resample
from .special import ChiSquare, Kolmogorov, Normal

__all__ = [
    "SummaryStats",
    "TestResult",
    "ScaleRow",
    "standardized_moments",
    "summarize",
    "jarque_bera",
    "kolmogorov_smirnov",
    "aggregation_scan",
]

JB_MIN_OBS = 8


@dataclass(frozen=True)
class SummaryStats:
    """Table-style summary of a return sample.

    ``std_dev`` uses the n-1 divisor; ``skewness`` and ``kurtosis`` are the
    divisor-n standardized third and fourth moments (raw kurtosis, normal = 3).
    Both are ``None`` when the sample has zero variance.
    """

    n: int
    mean: float
    median: float
    min: float
    max: float
    std_dev: float
    skewness: Optional[float]
    kurtosis: Optional[float]

    @property
    def degenerate(self) -> bool:
        return self.skewness is None


@dataclass(frozen=True)
class TestResult:
    __test__ = False  # keep pytest from collecting this as a test class

    test_name: str
    statistic: float
    p_value: float
    null_hypothesis: str
    sample_size: int
    df: Optional[float] = None

    def rejects(self, alpha: float = 0.05) -> bool:
        return self.p_value < alpha


def standardized_moments(x) -> tuple:
    """Divisor-n skewness and raw kurtosis of ``x``.

    Raises
    ------
    DegenerateSeriesError
        If the sample variance is zero.
    """
    x = as_array(x)
    d = x - x.mean()
    m2 = np.mean(d * d)
    # relative threshold absorbs rounding in the mean of a constant sample
    if m2 <= (np.finfo(float).eps * max(1.0, float(np.abs(x).max(initial=0.0)))) ** 2:
        raise DegenerateSeriesError("zero variance: skewness and kurtosis are undefined")
    m3 = np.mean(d ** 3)
    m4 = np.mean(d ** 4)
    return float(m3 / m2 ** 1.5), float(m4 / m2 ** 2)


def summarize(r) -> SummaryStats:
    x = as_array(r)
    n = len(x)
    if n < 2:
        raise InsufficientDataError(f"summary statistics need n >= 2, got {n}")
    try:
        skew, kurt = standardized_moments(x)
    except DegenerateSeriesError:
        skew = kurt = None
    return SummaryStats(
        n=n,
        mean=float(x.mean()),
        median=float(np.median(x)),
        min=float(x.min()),
        max=float(x.max()),
        std_dev=float(x.std(ddof=1)) if skew is not None else 0.0,
        skewness=skew,
        kurtosis=kurt,
    )


def jarque_bera(r) -> TestResult:
    """Jarque-Bera normality test, ``T * (S^2 / 6 + (K - 3)^2 / 24)`` against chi-square(2)."""
    x = as_array(r)
    n = len(x)
    if n < JB_MIN_OBS:
        raise InsufficientDataError(f"Jarque-Bera needs n >= {JB_MIN_OBS}, got {n}")
    skew, kurt = standardized_moments(x)
    stat = n * (skew ** 2 / 6.0 + (kurt - 3.0) ** 2 / 24.0)
    return TestResult(
        test_name="jarque_bera",
        statistic=float(stat),
        df=2.0,
        p_value=float(ChiSquare(2).sf(stat)),
        null_hypothesis="skewness = 0 and kurtosis = 3 (normality)",
        sample_size=n,
    )


def kolmogorov_smirnov(r, ref) -> TestResult:
    """One-sample KS test of ``r`` against a fully specified reference distribution.

    The p-value comes from the asymptotic Kolmogorov law of ``sqrt(n) * D``.
    When ``ref`` was fitted to the same data the p-value is conservative.
    """
    x = np.sort(as_array(r))
    n = len(x)
    if n < 2:
        raise InsufficientDataError(f"Kolmogorov-Smirnov needs n >= 2, got {n}")
    f = ref.cdf(x)
    i = np.arange(1, n + 1)
    d = max(float(np.max(i / n - f)), float(np.max(f - (i - 1) / n)))
    return TestResult(
        test_name="kolmogorov_smirnov",
        statistic=d,
        df=None,
        p_value=float(Kolmogorov().sf(math.sqrt(n) * d)),
        null_hypothesis=f"sample drawn from {ref.name}",
        sample_size=n,
    )


@dataclass(frozen=True)
class ScaleRow:
    """One time-scale row of the aggregational-Gaussianity scan.

    ``flag`` names why ``summary`` or ``test`` is missing, if either is.
    """

    scale: TimeScale
    summary: Optional[SummaryStats]
    test: Optional[TestResult]
    flag: Optional[str] = None


def aggregation_scan(p: PriceSeries, scales=tuple(TimeScale)) -> list:
    rows = []
    for scale in scales:
        scale = TimeScale.parse(scale)
        try:
            r = log_returns(resample(p, scale))
            summary = summarize(r)
        except StylefactsError as exc:
            rows.append(ScaleRow(scale, None, None, f"insufficient-data: {exc}"))
            continue
        if summary.degenerate:
            rows.append(ScaleRow(scale, summary, None, "degenerate-series"))
        elif len(r) < JB_MIN_OBS:
            rows.append(ScaleRow(scale, summary, None, "too-few-observations"))
        else:
            rows.append(ScaleRow(scale, summary, jarque_bera(r)))
    return rows
