"""Price and return series, price-to-return transforms and calendar resampling."""

from __future__ import annotations

import datetime as dt
import enum
from dataclasses import dataclass, field
from itertools import groupby
from typing import Sequence

import numpy as np

from .errors import DomainError, InsufficientDataError

__all__ = [
    "TimeScale",
    "PriceSeries",
    "ReturnSeries",
    "simple_returns",
    "log_returns",
    "resample",
    "prices_from_returns",
    "business_days",
    "as_array",
]


class TimeScale(str, enum.Enum):
    DAILY = "daily"
    WEEKLY = "weekly"
    MONTHLY = "monthly"
    QUARTERLY = "quarterly"

    @property
    def rank(self) -> int:
        return _RANK[self]

    @classmethod
    def parse(cls, value) -> "TimeScale":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise DomainError(f"unknown time scale {value!r}") from None


_RANK = {TimeScale.DAILY: 0, TimeScale.WEEKLY: 1, TimeScale.MONTHLY: 2, TimeScale.QUARTERLY: 3}

_PERIOD_KEY = {
    TimeScale.WEEKLY: lambda d: d.isocalendar()[:2],
    TimeScale.MONTHLY: lambda d: (d.year, d.month),
    TimeScale.QUARTERLY: lambda d: (d.year, (d.month - 1) // 3),
}


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


def _check_dates(dates):
    for prev, cur in zip(dates, dates[1:]):
        if not cur > prev:
            raise DomainError(f"dates must be strictly increasing ({prev} then {cur})")


@dataclass(frozen=True, eq=False)
class PriceSeries:
    """Dated, strictly positive adjusted closes for one instrument."""

    instrument_id: str
    dates: tuple
    prices: np.ndarray
    scale: TimeScale = TimeScale.DAILY

    def __post_init__(self):
        dates = tuple(self.dates)
        prices = _frozen_array(self.prices)
        if prices.ndim != 1 or len(prices) != len(dates):
            raise DomainError("dates and prices must be 1-d and of equal length")
        if not np.all(np.isfinite(prices)) or np.any(prices <= 0):
            bad = int(np.flatnonzero(~(np.isfinite(prices) & (prices > 0)))[0])
            raise DomainError(f"price at position {bad} is not strictly positive: {prices[bad]!r}")
        _check_dates(dates)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "prices", prices)
        object.__setattr__(self, "scale", TimeScale.parse(self.scale))

    def __len__(self):
        return len(self.prices)


@dataclass(frozen=True, eq=False)
class ReturnSeries:
    """Dated percentual log-returns, each dated at the later endpoint of its interval."""

    instrument_id: str
    scale: TimeScale
    dates: tuple
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        dates = tuple(self.dates)
        values = _frozen_array(self.values)
        if values.ndim != 1 or len(values) != len(dates):
            raise DomainError("dates and values must be 1-d and of equal length")
        _check_dates(dates)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "scale", TimeScale.parse(self.scale))

    def __len__(self):
        return len(self.values)

    def last(self, n: int) -> "ReturnSeries":
        """The most recent ``n`` observations."""
        if n < 1:
            raise DomainError("subsample size must be positive")
        return ReturnSeries(self.instrument_id, self.scale, self.dates[-n:], self.values[-n:])

    def with_values(self, values) -> "ReturnSeries":
        return ReturnSeries(self.instrument_id, self.scale, self.dates, values)


def as_array(r) -> np.ndarray:
    """Return values of a :class:`ReturnSeries` or any array-like as float64."""
    if isinstance(r, ReturnSeries):
        return np.asarray(r.values, dtype=float)
    return np.asarray(r, dtype=float)


def _require_two(p: PriceSeries):
    if len(p) < 2:
        raise InsufficientDataError(f"need at least 2 prices to form a return, got {len(p)}")


def simple_returns(p: PriceSeries) -> list:
    """``P_t / P_{t-1} - 1`` as ``(date, value)`` pairs (plain fractions, not percent)."""
    _require_two(p)
    ratio = p.prices[1:] / p.prices[:-1] - 1.0
    return list(zip(p.dates[1:], ratio.tolist()))


def log_returns(p: PriceSeries) -> ReturnSeries:
    """Continuously compounded returns in percent: ``100 * (ln P_t - ln P_{t-1})``."""
    _require_two(p)
    values = 100.0 * np.diff(np.log(p.prices))
    return ReturnSeries(p.instrument_id, p.scale, p.dates[1:], values)


def resample(p: PriceSeries, scale) -> PriceSeries:
    """Keep the last close of every calendar period (ISO week, month or quarter).

    Periods without observations simply do not appear.  Asking for the input's
    own cadence returns it unchanged.
    """
    scale = TimeScale.parse(scale)
    if scale.rank == p.scale.rank:
        return p
    if scale.rank < p.scale.rank:
        raise DomainError(f"cannot resample {p.scale.value} prices to finer {scale.value} scale")
    key = _PERIOD_KEY[scale]
    keep = []
    for _, group in groupby(range(len(p)), key=lambda i: key(p.dates[i])):
        *_, last = group
        keep.append(last)
    return PriceSeries(
        p.instrument_id, [p.dates[i] for i in keep], p.prices[keep], scale=scale
    )


def prices_from_returns(r, start_price: float = 100.0, start_date=None) -> PriceSeries:
    """Integrate percent log-returns back into a price path.

    The result has one more observation than ``r``; the seed price is dated one
    business day before the first return unless ``start_date`` is given.
    """
    values = as_array(r)
    prices = start_price * np.exp(np.concatenate([[0.0], np.cumsum(values)]) / 100.0)
    if isinstance(r, ReturnSeries):
        first = start_date or _previous_business_day(r.dates[0])
        return PriceSeries(r.instrument_id, (first, *r.dates), prices, scale=r.scale)
    dates = business_days(start_date or dt.date(2000, 1, 3), len(prices))
    return PriceSeries("synthetic", dates, prices)


def _previous_business_day(day: dt.date) -> dt.date:
    return np.busday_offset(np.datetime64(day, "D"), -1, roll="backward").astype(dt.date)


def business_days(start: dt.date, n: int) -> Sequence[dt.date]:
    """``n`` consecutive Monday-Friday dates starting at (or after) ``start``."""
    first = np.busday_offset(np.datetime64(start, "D"), 0, roll="forward")
    days = np.busday_offset(first, np.arange(n), roll="forward")
    return tuple(days.astype(dt.date).tolist())
