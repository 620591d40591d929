"""Trip CSV ingestion: schema-checked parsing, rejection logging, outlier pruning.

The canonical trip table is a UTF-8 CSV with header

    plate_id,olon,olat,pickup_label,pickup_time,dlon,dlat,dropoff_label,dropoff_time,distance_km,cost

Timestamps use the ``YYYY/M/D HH:MM`` form (month/day unpadded) and are read in
the configured local timezone with no DST handling; internally every time is an
integer count of minutes since midnight of a configurable epoch date, so
``t % 1440`` is minutes-of-day. An optional ``request_time`` column, when mapped,
yields pick-up waiting times.
"""

from __future__ import annotations

import csv
import datetime as _dt
import json
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, TextIO

import numpy as np

CANONICAL_COLUMNS = (
    "plate_id",
    "olon",
    "olat",
    "pickup_label",
    "pickup_time",
    "dlon",
    "dlat",
    "dropoff_label",
    "dropoff_time",
    "distance_km",
    "cost",
)

DEFAULT_EPOCH = _dt.date(2022, 9, 1)

TIME_FORMAT = "%Y/%m/%d %H:%M"


class SchemaError(ValueError):
    """The input header is unusable (missing or duplicated required columns)."""


@dataclass
class TripRecord:
    plate_id: str
    olon: float
    olat: float
    pickup_label: str
    pickup_min: int
    dlon: float
    dlat: float
    dropoff_label: str
    dropoff_min: int
    distance_km: float
    cost: float
    request_min: Optional[int] = None

    @property
    def duration_min(self) -> int:
        return self.dropoff_min - self.pickup_min

    @property
    def wait_min(self) -> Optional[int]:
        if self.request_min is None:
            return None
        return self.pickup_min - self.request_min

    @property
    def fare_per_km(self) -> float:
        return self.cost / self.distance_km

    @property
    def pickup_day(self) -> int:
        return self.pickup_min // 1440

    @property
    def pickup_hour(self) -> int:
        return (self.pickup_min % 1440) // 60

    @property
    def dropoff_hour(self) -> int:
        return (self.dropoff_min % 1440) // 60


@dataclass(frozen=True)
class Rejection:
    row: int  # 1-based line number in the source file (header is line 1)
    reason: str


@dataclass(frozen=True)
class IqrFilterReport:
    field_name: str  # "travel_time_min" or "distance_km"
    q1: float
    q3: float
    lo: float
    hi: float
    removed_count: int
    day: Optional[int] = None  # set only when filtering per day


def parse_time(text: str, epoch: _dt.date = DEFAULT_EPOCH) -> int:
    """Parse ``YYYY/M/D HH:MM`` into minutes since midnight of ``epoch``."""
    moment = _dt.datetime.strptime(text.strip(), TIME_FORMAT)
    origin = _dt.datetime(epoch.year, epoch.month, epoch.day)
    delta = moment - origin
    return delta.days * 1440 + delta.seconds // 60


def format_time(minutes: int, epoch: _dt.date = DEFAULT_EPOCH) -> str:
    origin = _dt.datetime(epoch.year, epoch.month, epoch.day)
    moment = origin + _dt.timedelta(minutes=int(minutes))
    return f"{moment.year}/{moment.month}/{moment.day} {moment.hour:02d}:{moment.minute:02d}"


def _parse_float(text: str) -> float:
    value = float(text)
    if math.isnan(value) or math.isinf(value):
        raise ValueError("not finite")
    return value


def parse_trips(
    source: str | TextIO,
    bbox: tuple[float, float, float, float],
    epoch: _dt.date = DEFAULT_EPOCH,
    columns: Optional[dict[str, str]] = None,
) -> tuple[list[TripRecord], list[Rejection]]:
    """Read the canonical trip CSV.

    ``columns`` maps canonical field names to the actual header names (fields
    not listed keep their canonical name; a ``request_time`` entry enables the
    optional waiting-time column). A missing required column raises
    :class:`SchemaError`. Malformed rows never abort the run: each one becomes a
    :class:`Rejection` with a stable reason string, and valid rows are returned
    in input order.

    ``bbox`` is ``(lon_min, lat_min, lon_max, lat_max)``; both trip endpoints
    must fall inside it.
    """
    close_after = False
    if isinstance(source, str):
        handle: TextIO = open(source, "r", encoding="utf-8", newline="")
        close_after = True
    else:
        handle = source
    try:
        return _parse_trip_rows(csv.reader(handle), bbox, epoch, columns or {})
    finally:
        if close_after:
            handle.close()


def _parse_trip_rows(reader, bbox, epoch, columns) -> tuple[list[TripRecord], list[Rejection]]:
    lon_min, lat_min, lon_max, lat_max = bbox
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("empty input: no header row") from None
    header = [h.strip() for h in header]

    name_of = {canon: columns.get(canon, canon) for canon in CANONICAL_COLUMNS}
    index_of: dict[str, int] = {}
    for canon in CANONICAL_COLUMNS:
        wanted = name_of[canon]
        hits = [i for i, h in enumerate(header) if h == wanted]
        if len(hits) != 1:
            raise SchemaError(f"required column {wanted!r} ({canon}) appears {len(hits)} times in header")
        index_of[canon] = hits[0]
    request_idx = None
    if "request_time" in columns:
        wanted = columns["request_time"]
        hits = [i for i, h in enumerate(header) if h == wanted]
        if len(hits) != 1:
            raise SchemaError(f"optional column {wanted!r} (request_time) appears {len(hits)} times in header")
        request_idx = hits[0]

    width = len(header)
    trips: list[TripRecord] = []
    rejections: list[Rejection] = []
    lineno = 1
    for row in reader:
        lineno += 1
        if not row:
            continue
        if len(row) != width:
            rejections.append(Rejection(lineno, "wrong column count"))
            continue
        def cell(canon: str) -> str:
            return row[index_of[canon]].strip()
        try:
            pickup_min = parse_time(cell("pickup_time"), epoch)
            dropoff_min = parse_time(cell("dropoff_time"), epoch)
            request_min = None
            if request_idx is not None and row[request_idx].strip():
                request_min = parse_time(row[request_idx].strip(), epoch)
        except ValueError:
            rejections.append(Rejection(lineno, "bad timestamp"))
            continue
        try:
            olon, olat = _parse_float(cell("olon")), _parse_float(cell("olat"))
            dlon, dlat = _parse_float(cell("dlon")), _parse_float(cell("dlat"))
            distance_km = _parse_float(cell("distance_km"))
            cost = _parse_float(cell("cost"))
        except ValueError:
            rejections.append(Rejection(lineno, "bad number"))
            continue
        if dropoff_min <= pickup_min:
            rejections.append(Rejection(lineno, "dropoff not after pickup"))
            continue
        if distance_km <= 0.0:
            rejections.append(Rejection(lineno, "nonpositive distance"))
            continue
        if cost < 0.0:
            rejections.append(Rejection(lineno, "negative cost"))
            continue
        if not (lon_min <= olon <= lon_max and lat_min <= olat <= lat_max
                and lon_min <= dlon <= lon_max and lat_min <= dlat <= lat_max):
            rejections.append(Rejection(lineno, "coordinates outside bbox"))
            continue
        trips.append(TripRecord(
            plate_id=cell("plate_id"),
            olon=olon, olat=olat,
            pickup_label=cell("pickup_label"),
            pickup_min=pickup_min,
            dlon=dlon, dlat=dlat,
            dropoff_label=cell("dropoff_label"),
            dropoff_min=dropoff_min,
            distance_km=distance_km,
            cost=cost,
            request_min=request_min,
        ))
    return trips, rejections


def write_trips(trips: Iterable[TripRecord], target: str | TextIO, epoch: _dt.date = DEFAULT_EPOCH) -> None:
    """Write the canonical trip CSV. Floats use repr so a reparse is lossless.

    A ``request_time`` column is appended when every trip carries one, so the
    optional waiting-time signal survives a write/parse cycle.
    """
    rows = list(trips)
    with_request = bool(rows) and all(t.request_min is not None for t in rows)
    close_after = False
    if isinstance(target, str):
        handle: TextIO = open(target, "w", encoding="utf-8", newline="")
        close_after = True
    else:
        handle = target
    try:
        writer = csv.writer(handle)
        header = CANONICAL_COLUMNS + (("request_time",) if with_request else ())
        writer.writerow(header)
        for t in rows:
            row = [
                t.plate_id,
                repr(t.olon), repr(t.olat),
                t.pickup_label,
                format_time(t.pickup_min, epoch),
                repr(t.dlon), repr(t.dlat),
                t.dropoff_label,
                format_time(t.dropoff_min, epoch),
                repr(t.distance_km), repr(t.cost),
            ]
            if with_request:
                row.append(format_time(t.request_min, epoch))
            writer.writerow(row)
    finally:
        if close_after:
            handle.close()


def write_rejections(rejections: Iterable[Rejection], target: str) -> None:
    with open(target, "w", encoding="utf-8") as handle:
        for r in rejections:
            handle.write(json.dumps({"row": r.row, "reason": r.reason}) + "\n")


def _quartiles(values: np.ndarray) -> tuple[float, float]:
    # type-7: linear interpolation between order statistics (numpy default)
    q1, q3 = np.percentile(values, [25.0, 75.0], method="linear")
    return float(q1), float(q3)


def _field_values(trips: Sequence[TripRecord], field_name: str) -> np.ndarray:
    if field_name == "travel_time_min":
        return np.array([t.duration_min for t in trips], dtype=float)
    if field_name == "distance_km":
        return np.array([t.distance_km for t in trips], dtype=float)
    raise ValueError(f"unknown filter field {field_name!r}")


IQR_FIELDS = ("travel_time_min", "distance_km")


def iqr_filter(
    trips: Sequence[TripRecord],
    k: float = 3.0,
    per_day: bool = False,
) -> tuple[list[TripRecord], list[IqrFilterReport]]:
    """Drop trips whose travel time or distance falls outside [Q1-k*IQR, Q3+k*IQR].

    Quartiles are computed on the pre-filter population (single pass, no
    re-iteration) and a trip is removed when either field is out of bounds.
    With ``per_day`` the bounds are computed separately for each pickup day.
    Requires at least 4 trips per filtered population.
    """
    if k <= 0.0:
        raise ValueError("k must be positive")
    if per_day:
        by_day: dict[int, list[int]] = {}
        for i, t in enumerate(trips):
            by_day.setdefault(t.pickup_day, []).append(i)
        keep_mask = np.ones(len(trips), dtype=bool)
        reports: list[IqrFilterReport] = []
        for day in sorted(by_day):
            idx = by_day[day]
            day_trips = [trips[i] for i in idx]
            kept_local_mask, day_reports = _filter_once(day_trips, k, day)
            for local_pos, i in enumerate(idx):
                keep_mask[i] = kept_local_mask[local_pos]
            reports.extend(day_reports)
        kept = [t for i, t in enumerate(trips) if keep_mask[i]]
        return kept, reports
    keep_mask, reports = _filter_once(list(trips), k, None)
    kept = [t for i, t in enumerate(trips) if keep_mask[i]]
    return kept, reports


def _filter_once(trips: list[TripRecord], k: float, day: Optional[int]) -> tuple[np.ndarray, list[IqrFilterReport]]:
    if len(trips) < 4:
        scope = f"day {day}" if day is not None else "dataset"
        raise ValueError(f"population too small for quartiles ({len(trips)} trips in {scope})")
    keep = np.ones(len(trips), dtype=bool)
    reports = []
    for field_name in IQR_FIELDS:
        values = _field_values(trips, field_name)
        q1, q3 = _quartiles(values)
        iqr = q3 - q1
        lo, hi = q1 - k * iqr, q3 + k * iqr
        out = (values < lo) | (values > hi)
        reports.append(IqrFilterReport(field_name, q1, q3, lo, hi, int(out.sum()), day))
        keep &= ~out
    return keep, reports


def write_iqr_reports(reports: Iterable[IqrFilterReport], target: str) -> None:
    payload = [
        {
            "field": r.field_name,
            "q1": r.q1,
            "q3": r.q3,
            "lo": r.lo,
            "hi": r.hi,
            "removed_count": r.removed_count,
            **({"day": r.day} if r.day is not None else {}),
        }
        for r in reports
    ]
    with open(target, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2)
        handle.write("\n")


__all__ = [
    "CANONICAL_COLUMNS",
    "DEFAULT_EPOCH",
    "IqrFilterReport",
    "Rejection",
    "SchemaError",
    "TripRecord",
    "format_time",
    "iqr_filter",
    "parse_time",
    "parse_trips",
    "write_iqr_reports",
    "write_rejections",
    "write_trips",
]
