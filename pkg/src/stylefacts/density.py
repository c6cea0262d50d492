"""Histogram and kernel density estimates with reference overlays, and QQ points."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DegenerateSeriesError, DomainError, InsufficientDataError
from .series import as_array
from .special import Normal, StudentT

__all__ = [
    "DensityCurve",
    "QQPoints",
    "UnitVarianceT",
    "histogram",
    "kde",
    "silverman_bandwidth",
    "qq_points",
    "PLOTTING_POSITION",
]

# Hazen plotting position: order statistic i sits at probability (i - 0.5) / n
PLOTTING_POSITION = 0.5

_SQRT2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class UnitVarianceT:
    """Student-t rescaled to unit variance, then shifted/scaled to ``(loc, scale)``.

    Requires ``nu > 2``.
    """

    nu: float
    loc: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if not self.nu > 2:
            raise DomainError(f"unit-variance Student-t needs nu > 2, got {self.nu!r}")
        if not self.scale > 0:
            raise DomainError("scale must be positive")

    @property
    def name(self):
        return f"student_t({self.nu:g}) at unit variance"

    @property
    def _s(self):
        return self.scale * math.sqrt((self.nu - 2.0) / self.nu)

    def pdf(self, x):
        return StudentT(self.nu).pdf((np.asarray(x, dtype=float) - self.loc) / self._s) / self._s

    def cdf(self, x):
        return StudentT(self.nu).cdf((np.asarray(x, dtype=float) - self.loc) / self._s)

    def quantile(self, p):
        return self.loc + self._s * StudentT(self.nu).quantile(p)


@dataclass(frozen=True, eq=False)
class DensityCurve:
    """Empirical density and a reference density on a common grid.

    For ``kind == "histogram"`` the grid holds bin centres and ``edges`` the
    bin boundaries; for ``kind == "kde"`` ``bandwidth`` is set.
    """

    kind: str
    grid: np.ndarray = field(repr=False)
    empirical: np.ndarray = field(repr=False)
    reference: np.ndarray = field(repr=False)
    reference_name: str
    edges: Optional[np.ndarray] = field(default=None, repr=False)
    bandwidth: Optional[float] = None

    def integral(self) -> float:
        if self.kind == "histogram":
            return float(np.sum(self.empirical * np.diff(self.edges)))
        return float(np.trapezoid(self.empirical, self.grid))


@dataclass(frozen=True, eq=False)
class QQPoints:
    reference_name: str
    theoretical: np.ndarray = field(repr=False)
    sample: np.ndarray = field(repr=False)
    standardized: bool = False

    def __len__(self):
        return len(self.sample)

    @property
    def points(self) -> list:
        return list(zip(self.theoretical.tolist(), self.sample.tolist()))


def _fitted_normal(x):
    sd = float(x.std(ddof=1))
    if not sd > 0:
        raise DegenerateSeriesError("zero variance: no reference normal can be fitted")
    return Normal(float(x.mean()), sd)


def histogram(r, bins: int = 50) -> DensityCurve:
    """Equal-width histogram over ``[min, max]`` normalised to unit area.

    The reference is the normal density with the sample mean and (n-1) standard
    deviation, evaluated at the bin centres.
    """
    x = as_array(r)
    if bins < 1:
        raise DomainError("bins must be >= 1")
    if len(x) < 1:
        raise InsufficientDataError("histogram of an empty sample")
    if not x.max() > x.min():
        raise DegenerateSeriesError("zero-width range: histogram undefined")
    heights, edges = np.histogram(x, bins=bins, range=(x.min(), x.max()), density=True)
    centres = 0.5 * (edges[:-1] + edges[1:])
    if len(x) >= 2:
        ref = _fitted_normal(x)
        reference, name = ref.pdf(centres), ref.name
    else:
        reference, name = np.zeros_like(centres), "none"
    return DensityCurve("histogram", centres, heights, reference, name, edges=edges)


def silverman_bandwidth(x) -> float:
    """``0.9 * min(sd, IQR / 1.34) * n^(-1/5)``, falling back to ``sd`` when IQR is zero."""
    x = as_array(x)
    sd = float(x.std(ddof=1))
    q75, q25 = np.percentile(x, [75.0, 25.0])
    spread = min(sd, (q75 - q25) / 1.34) if q75 > q25 else sd
    return 0.9 * spread * len(x) ** -0.2


def _gaussian_kde(x, grid, h):
    out = np.empty_like(grid)
    step = max(1, 2_000_000 // max(1, len(x)))
    for start in range(0, len(grid), step):
        u = (grid[start:start + step, None] - x[None, :]) / h
        out[start:start + step] = np.exp(-0.5 * u * u).sum(axis=1)
    return out / (len(x) * h * _SQRT2PI)


def kde(r, grid_size: int = 512, bandwidth: Optional[float] = None, reference=None) -> DensityCurve:
    """Gaussian kernel density estimate on ``[min - 3h, max + 3h]``.

    Parameters
    ----------
    r : ReturnSeries or array_like
    grid_size : int
        Number of evaluation points.
    bandwidth : float, optional
        Kernel standard deviation; Silverman's rule when omitted.
    reference : object with ``pdf``, optional
        Overlay density; defaults to the fitted normal.
    """
    x = as_array(r)
    if len(x) < 2:
        raise InsufficientDataError("kde needs at least 2 observations")
    if not x.std() > 0:
        raise DegenerateSeriesError("zero variance: kde bandwidth undefined")
    h = silverman_bandwidth(x) if bandwidth is None else float(bandwidth)
    if not h > 0:
        raise DomainError("bandwidth must be positive")
    grid = np.linspace(x.min() - 3.0 * h, x.max() + 3.0 * h, grid_size)
    ref = _fitted_normal(x) if reference is None else reference
    return DensityCurve(
        "kde", grid, _gaussian_kde(x, grid, h), np.asarray(ref.pdf(grid), dtype=float),
        ref.name, bandwidth=h,
    )


def qq_points(r, ref) -> QQPoints:
    """Sorted sample against reference quantiles at ``(i - 0.5) / n``.

    A :class:`~stylefacts.special.StudentT` reference is compared on the
    standardized scale: the sample is centred and divided by its (n-1)
    standard deviation and the t quantiles are rescaled to unit variance.
    Any other reference is used as given, in data units.
    """
    x = np.sort(as_array(r))
    n = len(x)
    if n < 2:
        raise InsufficientDataError("QQ plot needs at least 2 observations")
    probs = (np.arange(1, n + 1) - PLOTTING_POSITION) / n
    if isinstance(ref, StudentT):
        unit_t = UnitVarianceT(ref.nu)
        fitted = _fitted_normal(x)
        sample = (x - fitted.mu) / fitted.sigma
        # the quantile grid is symmetric, so only the lower half needs inverting
        return QQPoints(ref.name, _symmetric_quantiles(unit_t, probs), sample, standardized=True)
    return QQPoints(ref.name, np.asarray(ref.quantile(probs), dtype=float), x)


def _symmetric_quantiles(dist, probs):
    n = len(probs)
    half = (n + 1) // 2
    lower = np.asarray(dist.quantile(probs[:half]), dtype=float)
    out = np.empty(n)
    out[:half] = lower
    out[n - half:] = -lower[::-1]
    if n % 2:
        out[half - 1] = 0.0
    return out
