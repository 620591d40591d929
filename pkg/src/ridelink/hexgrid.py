"""Hexagonal tessellation and per-cell aggregation of classified trips.

The grid uses flat-top hexagons on a local equirectangular plane anchored at
the study-area centroid (distortion is far below 0.1% at city scale and the
projection inverts trivially). Cells are addressed by axial coordinates
``(q, r)`` with centers at

    x = s * 3/2 * q
    y = s * (sqrt(3)/2 * q + sqrt(3) * r)

for side length ``s`` in meters. Point location converts to fractional axial
coordinates and applies cube rounding, so every in-box point lands in exactly
one cell and shared edges resolve deterministically.

Aggregations: per-cell ratio surfaces (first-mile / last-mile complementary,
departure / arrival substitutive), hourly profiles, OD flows with optional
district rollup, per-class trip statistics, and the complementary-trip
breakdown by connecting mode and directness. Counts are reported as daily
averages (totals divided by the observation-day count); ratios are left
undefined, never zeroed, when their denominator is empty.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .classify import FIRST_MILE, INDEPENDENT, LAST_MILE, SUBSTITUTIVE, TripClass
from .geo import LocalProjection, great_circle_m, point_in_ring
from .ingest import TripRecord
from .ptnet import TransitNetwork

SQRT3 = math.sqrt(3.0)

OFF_GRID = None  # sentinel returned by locate() for points outside the grid


@dataclass(frozen=True)
class HexGrid:
    lon0: float
    lat0: float
    side_km: float
    bbox: tuple[float, float, float, float]  # lon_min, lat_min, lon_max, lat_max
    cells: tuple[tuple[int, int], ...]       # sorted axial indices

    @property
    def side_m(self) -> float:
        return self.side_km * 1000.0

    @property
    def projection(self) -> LocalProjection:
        return LocalProjection(self.lon0, self.lat0)

    @property
    def cell_area_km2(self) -> float:
        return 1.5 * SQRT3 * self.side_km ** 2

    def cell_set(self) -> frozenset:
        return frozenset(self.cells)


def cell_id(q: int, r: int) -> str:
    return f"{q},{r}"


def parse_cell_id(cid: str) -> tuple[int, int]:
    q, r = cid.split(",")
    return int(q), int(r)


def axial_center_xy(grid: HexGrid, q: int, r: int) -> tuple[float, float]:
    s = grid.side_m
    return s * 1.5 * q, s * (SQRT3 / 2.0 * q + SQRT3 * r)


def cell_center(grid: HexGrid, q: int, r: int) -> tuple[float, float]:
    x, y = axial_center_xy(grid, q, r)
    return grid.projection.to_lonlat(x, y)


def cell_polygon(grid: HexGrid, q: int, r: int) -> list[tuple[float, float]]:
    """Six corners (lon, lat), closed ring not included."""
    cx, cy = axial_center_xy(grid, q, r)
    s = grid.side_m
    proj = grid.projection
    corners = []
    for k in range(6):
        ang = math.pi / 3.0 * k
        corners.append(proj.to_lonlat(cx + s * math.cos(ang), cy + s * math.sin(ang)))
    return corners


def build_grid(bbox: Sequence[float], side_km: float = 0.5) -> HexGrid:
    """Tile a lon/lat bounding box with flat-top hexagons.

    The cell set contains every hexagon whose center lies within the box padded
    by one side length, which guarantees full coverage of the box itself.
    """
    if side_km <= 0:
        raise ValueError("side_km must be positive")
    lon_min, lat_min, lon_max, lat_max = (float(v) for v in bbox)
    if not (lon_max > lon_min and lat_max > lat_min):
        raise ValueError("degenerate bounding box")
    lon0 = (lon_min + lon_max) / 2.0
    lat0 = (lat_min + lat_max) / 2.0
    proj = LocalProjection(lon0, lat0)
    x_min, y_min = proj.to_xy(lon_min, lat_min)
    x_max, y_max = proj.to_xy(lon_max, lat_max)
    s = side_km * 1000.0
    pad = s
    cells = []
    q_lo = math.floor((x_min - pad) / (1.5 * s)) - 1
    q_hi = math.ceil((x_max + pad) / (1.5 * s)) + 1
    for q in range(q_lo, q_hi + 1):
        # y = s*sqrt(3)*(q/2 + r)  =>  r = y/(s*sqrt(3)) - q/2
        r_lo = math.floor((y_min - pad) / (s * SQRT3) - q / 2.0) - 1
        r_hi = math.ceil((y_max + pad) / (s * SQRT3) - q / 2.0) + 1
        for r in range(r_lo, r_hi + 1):
            x = s * 1.5 * q
            y = s * (SQRT3 / 2.0 * q + SQRT3 * r)
            if (x_min - pad <= x <= x_max + pad) and (y_min - pad <= y <= y_max + pad):
                cells.append((q, r))
    cells.sort()
    return HexGrid(lon0=lon0, lat0=lat0, side_km=side_km,
                   bbox=(lon_min, lat_min, lon_max, lat_max), cells=tuple(cells))


def _axial_round(qf: float, rf: float) -> tuple[int, int]:
    # cube rounding: x=q, z=r, y=-x-z; fix the component with the largest error
    xf, zf = qf, rf
    yf = -xf - zf
    rx, ry, rz = round(xf), round(yf), round(zf)
    dx, dy, dz = abs(rx - xf), abs(ry - yf), abs(rz - zf)
    if dx > dy and dx > dz:
        rx = -ry - rz
    elif dy > dz:
        ry = -rx - rz
    else:
        rz = -rx - ry
    return int(rx), int(rz)


def locate(grid: HexGrid, lon: float, lat: float,
           _cells: Optional[frozenset] = None) -> Optional[tuple[int, int]]:
    """Axial cell containing the point, or the off-grid sentinel (None)."""
    x, y = grid.projection.to_xy(lon, lat)
    s = grid.side_m
    qf = (2.0 / 3.0) * x / s
    rf = (-x / 3.0 + SQRT3 / 3.0 * y) / s
    cell = _axial_round(qf, rf)
    members = _cells if _cells is not None else grid.cell_set()
    return cell if cell in members else OFF_GRID


@dataclass
class GridCellStats:
    """Counts and ratio surface for one hexagonal cell.

    Totals are raw trip counts over the whole observation period; the ``*_daily``
    properties divide by the day count. Ratios are None when their denominator
    is zero (a cell without departures has no defined departure ratio).
    """

    cell_id: str
    days: int
    o_total: int = 0    # trips originating in the cell
    a_total: int = 0    # trips arriving in the cell
    fc_total: int = 0   # first-mile complementary, by origin cell
    lc_total: int = 0   # last-mile complementary, by destination cell
    ds_total: int = 0   # substitutive, by origin cell
    as_total: int = 0   # substitutive, by destination cell

    @property
    def o_daily(self) -> float:
        return self.o_total / self.days

    @property
    def a_daily(self) -> float:
        return self.a_total / self.days

    @property
    def fc_daily(self) -> float:
        return self.fc_total / self.days

    @property
    def lc_daily(self) -> float:
        return self.lc_total / self.days

    @property
    def ds_daily(self) -> float:
        return self.ds_total / self.days

    @property
    def as_daily(self) -> float:
        return self.as_total / self.days

    @property
    def fcr(self) -> Optional[float]:
        return self.fc_total / self.o_total if self.o_total else None

    @property
    def lcr(self) -> Optional[float]:
        return self.lc_total / self.a_total if self.a_total else None

    @property
    def dsr(self) -> Optional[float]:
        return self.ds_total / self.o_total if self.o_total else None

    @property
    def asr(self) -> Optional[float]:
        return self.as_total / self.a_total if self.a_total else None


def compute_ratios(
    trips: Sequence[TripRecord],
    results: Sequence[TripClass],
    grid: HexGrid,
    days: int,
) -> dict[str, GridCellStats]:
    """Per-cell counts and ratios for every grid cell (including empty ones)."""
    if days < 1:
        raise ValueError("days must be >= 1")
    if len(trips) != len(results):
        raise ValueError("trips and results must align")
    members = grid.cell_set()
    stats = {cell_id(q, r): GridCellStats(cell_id(q, r), days) for q, r in grid.cells}
    for trip, res in zip(trips, results):
        ocell = locate(grid, trip.olon, trip.olat, members)
        dcell = locate(grid, trip.dlon, trip.dlat, members)
        if ocell is not OFF_GRID:
            cs = stats[cell_id(*ocell)]
            cs.o_total += 1
            if res.label == FIRST_MILE:
                cs.fc_total += 1
            elif res.label == SUBSTITUTIVE:
                cs.ds_total += 1
        if dcell is not OFF_GRID:
            cs = stats[cell_id(*dcell)]
            cs.a_total += 1
            if res.label == LAST_MILE:
                cs.lc_total += 1
            elif res.label == SUBSTITUTIVE:
                cs.as_total += 1
    return stats


@dataclass
class TemporalProfile:
    """Hour-of-day histogram (by pickup hour) with per-bin class mix."""

    totals: list[int]           # 24 bins
    first_mile: list[int]
    last_mile: list[int]
    substitutive: list[int]
    independent: list[int]

    def ratio(self, kind: str, hour: int) -> Optional[float]:
        total = self.totals[hour]
        if not total:
            return None
        counts = {"fcr": self.first_mile, "lcr": self.last_mile,
                  "dsr": self.substitutive, "asr": self.substitutive}[kind]
        return counts[hour] / total


def temporal_profile(trips: Sequence[TripRecord], results: Sequence[TripClass]) -> TemporalProfile:
    if len(trips) != len(results):
        raise ValueError("trips and results must align")
    bins = {label: [0] * 24 for label in (FIRST_MILE, LAST_MILE, SUBSTITUTIVE, INDEPENDENT)}
    totals = [0] * 24
    for trip, res in zip(trips, results):
        hour = trip.pickup_hour
        totals[hour] += 1
        bins[res.label][hour] += 1
    return TemporalProfile(totals=totals, first_mile=bins[FIRST_MILE],
                           last_mile=bins[LAST_MILE], substitutive=bins[SUBSTITUTIVE],
                           independent=bins[INDEPENDENT])


@dataclass(frozen=True)
class OdFlow:
    level: str        # "grid" or "district"
    from_id: str
    to_id: str
    trip_class: str   # one of the class labels or "all"
    flow: float       # daily average count


def od_flows(
    trips: Sequence[TripRecord],
    results: Sequence[TripClass],
    grid: HexGrid,
    days: int,
    trip_class: Optional[str] = None,
    districts: Optional[dict[str, list[tuple[float, float]]]] = None,
) -> list[OdFlow]:
    """Daily OD flows between grid cells, optionally filtered by class and
    rolled up to districts (name -> polygon ring of lon/lat pairs)."""
    if days < 1:
        raise ValueError("days must be >= 1")
    members = grid.cell_set()
    counts: dict[tuple[str, str], int] = {}
    for trip, res in zip(trips, results):
        if trip_class is not None and res.label != trip_class:
            continue
        ocell = locate(grid, trip.olon, trip.olat, members)
        dcell = locate(grid, trip.dlon, trip.dlat, members)
        if ocell is OFF_GRID or dcell is OFF_GRID:
            continue
        key = (cell_id(*ocell), cell_id(*dcell))
        counts[key] = counts.get(key, 0) + 1
    label = trip_class if trip_class is not None else "all"
    flows = [OdFlow("grid", a, b, label, n / days) for (a, b), n in sorted(counts.items())]
    if districts is None:
        return flows
    assignment = _district_of_cells(grid, districts)
    rolled: dict[tuple[str, str], float] = {}
    for f in flows:
        da, db = assignment.get(f.from_id), assignment.get(f.to_id)
        if da is None or db is None:
            continue
        rolled[(da, db)] = rolled.get((da, db), 0.0) + f.flow
    flows.extend(OdFlow("district", a, b, label, v) for (a, b), v in sorted(rolled.items()))
    return flows


def _district_of_cells(grid: HexGrid, districts: dict[str, list[tuple[float, float]]]) -> dict[str, str]:
    assignment = {}
    for q, r in grid.cells:
        lon, lat = cell_center(grid, q, r)
        for name in sorted(districts):
            if point_in_ring(lon, lat, districts[name]):
                assignment[cell_id(q, r)] = name
                break
    return assignment


def load_districts(path: str) -> dict[str, list[tuple[float, float]]]:
    """District polygons from a GeoJSON FeatureCollection (outer rings only)."""
    with open(path, "r", encoding="utf-8") as handle:
        doc = json.load(handle)
    out = {}
    for feat in doc.get("features", []):
        name = str(feat.get("properties", {}).get("name", f"d{len(out)}"))
        geom = feat.get("geometry", {})
        if geom.get("type") != "Polygon":
            continue
        ring = [(float(lon), float(lat)) for lon, lat in geom["coordinates"][0]]
        out[name] = ring
    return out


@dataclass
class Histogram:
    edges: list[float]
    counts: list[int]

    @property
    def mass(self) -> int:
        return sum(self.counts)


def _histogram(values: list[float], bins: int) -> Histogram:
    if not values:
        return Histogram(edges=[], counts=[])
    lo, hi = min(values), max(values)
    if hi == lo:
        return Histogram(edges=[lo, hi], counts=[len(values)])
    width = (hi - lo) / bins
    edges = [lo + width * i for i in range(bins + 1)]
    counts = [0] * bins
    for v in values:
        idx = min(int((v - lo) / width), bins - 1)
        counts[idx] += 1
    return Histogram(edges=edges, counts=counts)


def trip_stats(
    trips: Sequence[TripRecord],
    results: Sequence[TripClass],
    bins: int = 20,
) -> dict[str, dict[str, Histogram]]:
    """Per-class histograms of travel time and fare per km, plus waiting time
    when the input schema carries request timestamps on every trip."""
    if len(trips) != len(results):
        raise ValueError("trips and results must align")
    with_wait = bool(trips) and all(t.request_min is not None for t in trips)
    per_class: dict[str, dict[str, list[float]]] = {}
    for trip, res in zip(trips, results):
        bucket = per_class.setdefault(res.label, {"travel_min": [], "fare_per_km": [], "wait_min": []})
        bucket["travel_min"].append(trip.duration_min)
        bucket["fare_per_km"].append(trip.fare_per_km)
        if with_wait:
            bucket["wait_min"].append(trip.wait_min)
    out: dict[str, dict[str, Histogram]] = {}
    for label in (FIRST_MILE, LAST_MILE, SUBSTITUTIVE, INDEPENDENT):
        values = per_class.get(label, {"travel_min": [], "fare_per_km": [], "wait_min": []})
        entry = {
            "travel_min": _histogram(values["travel_min"], bins),
            "fare_per_km": _histogram(values["fare_per_km"], bins),
        }
        if with_wait:
            entry["wait_min"] = _histogram(values["wait_min"], bins)
        out[label] = entry
    return out


def complementary_breakdown(
    trips: Sequence[TripRecord],
    results: Sequence[TripClass],
    net: TransitNetwork,
) -> dict:
    """Split complementary trips by connecting mode and directness.

    A trip is "direct" when its matched station is the nearest station of that
    mode to the trip's street end (the origin for first-mile trips, the
    destination for last-mile trips); indirect trips split by whether the
    matched station is a multi-line hub.
    """
    by_mode = {"metro": {"direct": 0, "indirect_hub": 0, "indirect_single": 0},
               "bus": {"direct": 0, "indirect_hub": 0, "indirect_single": 0}}
    total = 0
    for trip, res in zip(trips, results):
        if res.label not in (FIRST_MILE, LAST_MILE) or res.matched_station is None:
            continue
        station = net.stations[res.matched_station]
        mode = station.mode
        if mode not in by_mode:
            continue
        total += 1
        lon, lat = ((trip.olon, trip.olat) if res.label == FIRST_MILE
                    else (trip.dlon, trip.dlat))
        nearest = min(
            (sid for sid in sorted(net.stations) if net.stations[sid].mode == mode),
            key=lambda sid: (great_circle_m(lon, lat, net.stations[sid].lon,
                                            net.stations[sid].lat), sid),
        )
        if nearest == res.matched_station:
            by_mode[mode]["direct"] += 1
        elif station.is_hub:
            by_mode[mode]["indirect_hub"] += 1
        else:
            by_mode[mode]["indirect_single"] += 1
    mode_counts = {m: sum(v.values()) for m, v in by_mode.items()}
    return {
        "total": total,
        "mode_counts": mode_counts,
        "mode_shares": {m: (c / total if total else 0.0) for m, c in mode_counts.items()},
        "by_mode": by_mode,
    }


# ---------------------------------------------------------------------------
# serialization

CELL_STATS_COLUMNS = (
    "cell_id", "days", "o_total", "a_total", "fc_total", "lc_total", "ds_total", "as_total",
    "o_daily", "a_daily", "fc_daily", "lc_daily", "ds_daily", "as_daily",
    "fcr", "lcr", "dsr", "asr",
)


def _fmt(value: Optional[float]) -> str:
    return "" if value is None else repr(value)


def write_cell_stats(stats: dict[str, GridCellStats], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(CELL_STATS_COLUMNS)
        for cid in sorted(stats, key=parse_cell_id):
            cs = stats[cid]
            writer.writerow([
                cs.cell_id, cs.days, cs.o_total, cs.a_total, cs.fc_total,
                cs.lc_total, cs.ds_total, cs.as_total,
                repr(cs.o_daily), repr(cs.a_daily), repr(cs.fc_daily),
                repr(cs.lc_daily), repr(cs.ds_daily), repr(cs.as_daily),
                _fmt(cs.fcr), _fmt(cs.lcr), _fmt(cs.dsr), _fmt(cs.asr),
            ])


def read_cell_stats(path: str) -> dict[str, GridCellStats]:
    stats = {}
    with open(path, "r", encoding="utf-8", newline="") as handle:
        for row in csv.DictReader(handle):
            stats[row["cell_id"]] = GridCellStats(
                cell_id=row["cell_id"], days=int(row["days"]),
                o_total=int(row["o_total"]), a_total=int(row["a_total"]),
                fc_total=int(row["fc_total"]), lc_total=int(row["lc_total"]),
                ds_total=int(row["ds_total"]), as_total=int(row["as_total"]),
            )
    return stats


def write_cell_stats_geojson(grid: HexGrid, stats: dict[str, GridCellStats], path: str) -> None:
    features = []
    for q, r in grid.cells:
        cid = cell_id(q, r)
        cs = stats[cid]
        ring = cell_polygon(grid, q, r)
        ring.append(ring[0])
        features.append({
            "type": "Feature",
            "geometry": {"type": "Polygon",
                         "coordinates": [[[lon, lat] for lon, lat in ring]]},
            "properties": {
                "cell_id": cid,
                "o_daily": cs.o_daily, "a_daily": cs.a_daily,
                "fc_daily": cs.fc_daily, "lc_daily": cs.lc_daily,
                "ds_daily": cs.ds_daily, "as_daily": cs.as_daily,
                "fcr": cs.fcr, "lcr": cs.lcr, "dsr": cs.dsr, "asr": cs.asr,
            },
        })
    doc = {"type": "FeatureCollection", "features": features}
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(doc, handle, indent=1)
        handle.write("\n")


def write_od_flows(flows: Sequence[OdFlow], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["level", "from", "to", "class", "flow"])
        for f in flows:
            writer.writerow([f.level, f.from_id, f.to_id, f.trip_class, repr(f.flow)])


def write_temporal_profile(profile: TemporalProfile, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["hour", "total", "first_mile", "last_mile",
                         "substitutive", "independent"])
        for hour in range(24):
            writer.writerow([hour, profile.totals[hour], profile.first_mile[hour],
                             profile.last_mile[hour], profile.substitutive[hour],
                             profile.independent[hour]])


def write_trip_stats(stats: dict[str, dict[str, Histogram]], path: str) -> None:
    doc = {label: {name: {"edges": h.edges, "counts": h.counts}
                   for name, h in entry.items()}
           for label, entry in stats.items()}
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(doc, handle, indent=2)
        handle.write("\n")


def write_breakdown(breakdown: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(breakdown, handle, indent=2)
        handle.write("\n")


__all__ = [
    "CELL_STATS_COLUMNS",
    "GridCellStats",
    "HexGrid",
    "Histogram",
    "OdFlow",
    "OFF_GRID",
    "TemporalProfile",
    "axial_center_xy",
    "build_grid",
    "cell_center",
    "cell_id",
    "cell_polygon",
    "complementary_breakdown",
    "compute_ratios",
    "load_districts",
    "locate",
    "od_flows",
    "parse_cell_id",
    "read_cell_stats",
    "temporal_profile",
    "trip_stats",
    "write_breakdown",
    "write_cell_stats",
    "write_cell_stats_geojson",
    "write_od_flows",
    "write_temporal_profile",
    "write_trip_stats",
]
