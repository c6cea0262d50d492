"""CSV ingestion of one instrument's adjusted closes."""

from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

from .errors import DomainError, IngestError
from .series import PriceSeries

__all__ = ["IngestSpec", "ingest", "write_prices"]

Column = Union[str, int]


@dataclass(frozen=True)
class IngestSpec:
    """Where and how to read a price file.

    Columns may be given by header name or 0-based index.  ``date_format`` is
    a :func:`~datetime.datetime.strptime` pattern, or ``None`` for ISO-8601.
    """

    path: Union[str, Path]
    date_column: Column = "date"
    price_column: Column = "adj_close"
    date_format: Optional[str] = None
    on_duplicate: str = "error"
    instrument_id: Optional[str] = None

    def __post_init__(self):
        if self.on_duplicate not in ("error", "keep_last"):
            raise DomainError(f"on_duplicate must be 'error' or 'keep_last', got {self.on_duplicate!r}")


def _column_index(header, column, label):
    if isinstance(column, int):
        if not 0 <= column < len(header):
            raise IngestError(f"{label} column index {column} out of range (header has {len(header)})", row=1)
        return column
    names = [h.strip() for h in header]
    if column not in names:
        raise IngestError(f"{label} column {column!r} not in header {names}", row=1)
    return names.index(column)


def _parse_date(text, fmt):
    if fmt is not None:
        return dt.datetime.strptime(text, fmt).date()
    # tolerate a time-of-day suffix on ISO timestamps
    if len(text) > 10 and text[10] in "T ":
        text = text[:10]
    return dt.date.fromisoformat(text)


def ingest(spec: IngestSpec) -> PriceSeries:
    """Read, validate and date-sort a price CSV.

    Raises
    ------
    IngestError
        Unreadable file, missing columns, unparseable or non-positive values
        (with the 1-based file row), or duplicate dates under ``on_duplicate='error'``.
    """
    path = Path(spec.path)
    try:
        handle = path.open(newline="", encoding="utf-8-sig")
    except OSError as exc:
        raise IngestError(f"cannot open {path}: {exc}") from exc
    with handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if not header:
            raise IngestError(f"{path} is empty or has no header row")
        date_idx = _column_index(header, spec.date_column, "date")
        price_idx = _column_index(header, spec.price_column, "price")
        by_date = {}
        for row_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                raw_date, raw_price = row[date_idx].strip(), row[price_idx].strip()
            except IndexError:
                raise IngestError("too few columns", row=row_no) from None
            try:
                day = _parse_date(raw_date, spec.date_format)
            except ValueError:
                raise IngestError(f"unparseable date {raw_date!r}", row=row_no) from None
            try:
                price = float(raw_price)
            except ValueError:
                raise IngestError(f"unparseable price {raw_price!r}", row=row_no) from None
            if not (math.isfinite(price) and price > 0):
                raise IngestError(f"price must be strictly positive, got {raw_price!r}", row=row_no)
            if day in by_date and spec.on_duplicate == "error":
                raise IngestError(f"duplicate date {day.isoformat()} (first at row {by_date[day][1]})", row=row_no)
            by_date[day] = (price, row_no)

    dates = sorted(by_date)
    instrument = spec.instrument_id or path.stem
    return PriceSeries(instrument, dates, [by_date[d][0] for d in dates])


def write_prices(p: PriceSeries, path, date_column="date", price_column="adj_close"):
    """Write a price series in the format :func:`ingest` reads by default."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([date_column, price_column])
        for day, price in zip(p.dates, p.prices.tolist()):
            writer.writerow([day.isoformat(), repr(price)])
