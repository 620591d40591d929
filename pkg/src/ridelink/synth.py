"""Seeded synthetic city and trip generator with planted ground truth.

Builds a deterministic city from a scenario description: four metro lines
chained into an almost-closed loop (consecutive lines share a corner
station), three bus routes with a bus-bus hub and one bus-metro interchange,
point-of-interest and population layers, and a street grid. On top of the
network it plants trips whose classification outcome is forced by
construction: feeder trips labeled with station aliases, substitutive trips
that satisfy every threshold, and independent trips violating exactly one
condition each. Every planted trip is re-checked through the real planner
and classifier before it is accepted (re-drawing on the rare misses), so the
emitted ground truth is correct by verification, not by hope.

All randomness flows through one seeded generator: the same spec always
produces byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .classify import (
    FIRST_MILE,
    INDEPENDENT,
    LAST_MILE,
    SUBSTITUTIVE,
    ClassifierConfig,
    TripClass,
    classify_trip,
)
from .geo import LocalProjection
from .ingest import TripRecord, write_trips
from .ptnet import (
    FareRules,
    NetworkPlanner,
    Route,
    Station,
    TransitNetwork,
    station_lexicon,
    validate_network,
    write_fares,
    write_routes,
    write_stations,
)

METRO_WORDS = (
    "Alder", "Aspen", "Basalt", "Beech", "Birch", "Brook", "Camphor", "Cedar",
    "Cypress", "Dogwood", "Elm", "Fennel", "Fir", "Garnet", "Ginkgo", "Granite",
    "Hawthorn", "Hazel", "Hemlock", "Holly", "Ivy", "Jade", "Juniper", "Larch",
    "Laurel", "Linden", "Magnolia", "Maple", "Marble", "Mulberry", "Myrtle",
    "Oak", "Olive", "Onyx", "Pine", "Poplar", "Quartz", "Rowan", "Sequoia",
    "Spruce", "Sycamore", "Tamarind", "Walnut", "Willow", "Wisteria", "Yew",
    "Zelkova", "Zinnia",
)

BUS_WORDS = (
    "Anchor", "Beacon", "Breeze", "Canal", "Delta", "Drift", "Estuary",
    "Ferry", "Harbor", "Inlet", "Jetty", "Lagoon", "Marsh", "Pier", "Quay",
    "Reef", "Shoal", "Tide", "Wharf",
)

PLACE_KINDS = ("Court", "Block", "Plaza", "Garden", "Market", "Tower")

GROUND_TRUTH_COLUMNS = ("trip_index", "intended_class", "violated_condition")


@dataclass(frozen=True)
class ScenarioSpec:
    seed: int = 20220901
    anchor_lon: float = 121.40
    anchor_lat: float = 31.15
    days: int = 7
    metro_lines: int = 4
    metro_stations_per_line: int = 12
    metro_spacing_km: float = 1.2
    bus_routes: int = 3
    metro_speed_kmh: float = 35.0
    bus_speed_kmh: float = 20.0
    metro_headway_min: float = 6.0
    bus_headway_min: float = 10.0
    first_mile: int = 800
    last_mile: int = 800
    substitutive: int = 900
    independent_c1: int = 600
    independent_c3: int = 700
    independent_c4: int = 500
    independent_c5: int = 300
    independent_c6: int = 400
    poi_count: int = 2400
    population_pitch_km: float = 0.5
    half_extent_km: float = 9.0
    max_attempts: int = 80

    def planted_counts(self) -> dict[str, int]:
        return {
            "first_mile": self.first_mile,
            "last_mile": self.last_mile,
            "substitutive": self.substitutive,
            "independent_c1": self.independent_c1,
            "independent_c3": self.independent_c3,
            "independent_c4": self.independent_c4,
            "independent_c5": self.independent_c5,
            "independent_c6": self.independent_c6,
        }

    def total_trips(self) -> int:
        return sum(self.planted_counts().values())

    def validate(self) -> None:
        for name, count in self.planted_counts().items():
            if count < 0:
                raise ValueError(f"planted count {name} must be >= 0")
        if not 0 <= self.metro_lines <= 4:
            raise ValueError("metro_lines must be between 0 and 4")
        if not 0 <= self.bus_routes <= 3:
            raise ValueError("bus_routes must be between 0 and 3")
        if not 2 <= self.metro_stations_per_line <= 20:
            raise ValueError("metro_stations_per_line must be between 2 and 20")
        if self.days < 1:
            raise ValueError("days must be >= 1")
        if self.metro_spacing_km <= 0 or self.half_extent_km <= 0:
            raise ValueError("distances must be positive")
        needs_network = any(count > 0 for count in self.planted_counts().values())
        if needs_network and self.metro_lines == 0 and self.bus_routes == 0:
            raise ValueError("infeasible spec: trips requested but the city "
                             "has no transit at all")
        metro_only = ("first_mile", "last_mile", "substitutive",
                      "independent_c3", "independent_c4", "independent_c6")
        if self.metro_lines == 0 and any(
                getattr(self, name) > 0 for name in metro_only):
            raise ValueError("infeasible spec: metro-anchored trips requested "
                             "but metro_lines is 0")
        if self.independent_c1 > 0 and self.metro_lines == 0 \
                and self.bus_routes == 0:
            raise ValueError("infeasible spec: out-of-service trips need at "
                             "least one route")
        if self.independent_c4 > 0 and (self.metro_lines < 3
                                        or self.metro_stations_per_line < 8):
            raise ValueError("infeasible spec: the slow-transit recipe needs "
                             "at least three chained metro lines of 8+ stations")
        if self.independent_c5 > 0 and (self.metro_lines < 4
                                        or self.metro_stations_per_line < 8):
            raise ValueError("infeasible spec: the transfer-heavy recipe "
                             "needs all four chained metro lines")


# ---------------------------------------------------------------------------
# network construction


def _metro_line_starts(spec: ScenarioSpec) -> list[tuple]:
    """Chained corner-to-corner line layouts in local km: (origin, direction,
    spacing). Consecutive lines share their corner station."""
    n = spec.metro_stations_per_line
    s = spec.metro_spacing_km
    side = s * (n - 1)
    west = -0.5 * side - 0.6
    east = west + side
    north = 0.5 * side - 0.6
    south = north - side
    return [
        ((west, north), (1.0, 0.0), s),   # north belt, west to east
        ((west, north), (0.0, -1.0), s),  # west belt, north to south
        ((west, south), (1.0, 0.0), s),   # south belt, west to east
        # east belt climbs from the south-east corner with slightly tighter
        # spacing so its last stop sits below the north belt: an open loop
        ((east, south), (0.0, 1.0), s * (n - 1) / n),
    ][: spec.metro_lines]


def build_network(spec: ScenarioSpec) -> tuple[TransitNetwork, dict]:
    """Deterministic city network plus layout metadata (local km positions)."""
    spec.validate()
    proj = LocalProjection(spec.anchor_lon, spec.anchor_lat)
    stations: dict[str, Station] = {}
    routes: dict[str, Route] = {}
    xy: dict[str, tuple[float, float]] = {}
    by_pos: dict[tuple[float, float], str] = {}
    metro_ids: list[list[str]] = []
    names = iter(METRO_WORDS)

    def add_station(pos, name, aliases, mode, line_id) -> str:
        key = (round(pos[0], 6), round(pos[1], 6))
        if key in by_pos:
            sid = by_pos[key]
            old = stations[sid]
            if line_id not in old.line_ids:
                stations[sid] = Station(id=sid, name=old.name,
                                        aliases=old.aliases, lon=old.lon,
                                        lat=old.lat, mode=old.mode,
                                        line_ids=old.line_ids + (line_id,))
            return sid
        sid = f"{'m' if mode == 'metro' else 'b'}{len(by_pos) + 1:02d}"
        lon, lat = proj.to_lonlat(pos[0] * 1000.0, pos[1] * 1000.0)
        stations[sid] = Station(id=sid, name=name, aliases=tuple(aliases),
                                lon=lon, lat=lat, mode=mode,
                                line_ids=(line_id,))
        xy[sid] = (pos[0], pos[1])
        by_pos[key] = sid
        return sid

    for li, (origin, direction, spacing) in enumerate(_metro_line_starts(spec)):
        rid = f"M{li + 1}"
        sids = []
        for i in range(spec.metro_stations_per_line):
            pos = (origin[0] + direction[0] * spacing * i,
                   origin[1] + direction[1] * spacing * i)
            key = (round(pos[0], 6), round(pos[1], 6))
            if key in by_pos:
                sid = add_station(pos, "", (), "metro", rid)
            else:
                word = next(names)
                sid = add_station(pos, f"{word} Station",
                                  (f"{word} Station Exit A",
                                   f"{word} Station Exit B"),
                                  "metro", rid)
            sids.append(sid)
        metro_ids.append(sids)
        routes[rid] = Route(id=rid, line_id=rid, mode="metro",
                            station_ids=tuple(sids),
                            headway_min=spec.metro_headway_min,
                            service_start=330, service_end=1410,
                            speed_kmh=spec.metro_speed_kmh,
                            fare_class="metro")

    bus_layouts = [
        [(-4.5 + 1.5 * i, -1.8) for i in range(6)],            # east-west
        [(0.0, -1.8 - 1.35 * i) for i in range(5)],            # north-south
        [(-4.5 + 1.5 * i, 2.4) for i in range(6)],             # interior belt
    ][: spec.bus_routes]
    bus_names = iter(BUS_WORDS)
    for bi, stops in enumerate(bus_layouts):
        rid = f"B{bi + 1}"
        sids = []
        for pos in stops:
            key = (round(pos[0], 6), round(pos[1], 6))
            if key in by_pos:
                sid = add_station(pos, "", (), "bus", rid)
            else:
                word = next(bus_names)
                sid = add_station(pos, f"{word} Road",
                                  (f"{word} Road Bus Stop",), "bus", rid)
            sids.append(sid)
        routes[rid] = Route(id=rid, line_id=rid, mode="bus",
                            station_ids=tuple(sids),
                            headway_min=spec.bus_headway_min,
                            service_start=360, service_end=1380,
                            speed_kmh=spec.bus_speed_kmh, fare_class="bus")

    net = TransitNetwork(stations=stations, routes=routes, fares=FareRules())
    validate_network(net)
    meta = {"proj": proj, "xy": xy, "metro_ids": metro_ids}
    return net, meta


# ---------------------------------------------------------------------------
# trip planting


@dataclass
class GroundTruth:
    trip_index: int
    intended_class: str
    violated_condition: Optional[str]


class _Factory:
    """Draws candidate trips recipe by recipe and verifies each against the
    real classifier before accepting it."""

    def __init__(self, spec: ScenarioSpec, net: TransitNetwork, meta: dict):
        self.spec = spec
        self.net = net
        self.proj: LocalProjection = meta["proj"]
        self.xy = meta["xy"]
        self.metro_ids = meta["metro_ids"]
        self.planner = NetworkPlanner(net)
        self.lexicon = station_lexicon(net)
        self.cfg = ClassifierConfig()
        self.rng = np.random.default_rng(spec.seed)
        self.plates = [f"T{i:05d}" for i in range(900)]
        self.metro_sids = sorted(sid for sid, s in net.stations.items()
                                 if s.mode == "metro")
        # interior stations of each line: never a shared corner, so a point
        # close to one is far from every other station
        self.interior = [line[2:-2] for line in self.metro_ids]

    # drawing helpers ------------------------------------------------------

    def _day_minute(self, lo_hour=7, hi_hour=21) -> int:
        day = int(self.rng.integers(self.spec.days))
        hours = np.arange(lo_hour, hi_hour + 1)
        weights = 1.0 + 2.0 * np.exp(-0.5 * ((hours - 8.5) / 1.2) ** 2) \
            + 2.0 * np.exp(-0.5 * ((hours - 18.0) / 1.2) ** 2)
        hour = int(self.rng.choice(hours, p=weights / weights.sum()))
        minute = int(self.rng.integers(60))
        return day * 1440 + hour * 60 + minute

    def _night_minute(self) -> int:
        day = int(self.rng.integers(self.spec.days))
        return day * 1440 + int(self.rng.integers(70, 300))

    def _place_label(self) -> str:
        kind = PLACE_KINDS[int(self.rng.integers(len(PLACE_KINDS)))]
        word = METRO_WORDS[int(self.rng.integers(len(METRO_WORDS)))]
        return f"{word} {kind} {int(self.rng.integers(1, 90))}"

    def _near(self, sid: str, max_m: float, min_m: float = 20.0):
        angle = self.rng.uniform(0.0, 2.0 * math.pi)
        radius = self.rng.uniform(min_m, max_m) / 1000.0
        x, y = self.xy[sid]
        return (x + radius * math.cos(angle), y + radius * math.sin(angle))

    def _interior_point(self):
        r = self.spec.half_extent_km - 1.5
        return (self.rng.uniform(-r, r), self.rng.uniform(-r, r))

    def _station_alias(self, sid: str) -> str:
        station = self.net.stations[sid]
        pool = (station.name, *station.aliases)
        return pool[int(self.rng.integers(len(pool)))]

    def _pick(self, seq):
        return seq[int(self.rng.integers(len(seq)))]

    def _trip(self, o_xy, d_xy, o_label, d_label, pickup, duration,
              cost=None) -> TripRecord:
        olon, olat = self.proj.to_lonlat(o_xy[0] * 1000.0, o_xy[1] * 1000.0)
        dlon, dlat = self.proj.to_lonlat(d_xy[0] * 1000.0, d_xy[1] * 1000.0)
        euclid = math.hypot(d_xy[0] - o_xy[0], d_xy[1] - o_xy[1])
        distance = round(euclid * self.rng.uniform(1.25, 1.45) + 0.2, 3)
        if cost is None:
            cost = round(14.0 + 2.7 * max(0.0, distance - 3.0)
                         + self.rng.uniform(-1.0, 1.0), 2)
        wait = int(self.rng.integers(2, 11))
        duration = max(2, int(round(duration)))
        return TripRecord(
            plate_id=self._pick(self.plates),
            olon=olon, olat=olat, pickup_label=o_label, pickup_min=pickup,
            dlon=dlon, dlat=dlat, dropoff_label=d_label,
            dropoff_min=pickup + duration, distance_km=distance,
            cost=float(cost), request_min=pickup - wait)

    # recipes --------------------------------------------------------------

    def _draw_first_mile(self) -> TripRecord:
        sid = self._pick(self.metro_sids)
        dest = self._near(sid, 250.0)
        origin = self._interior_point()
        pickup = self._day_minute()
        duration = max(4.0, math.hypot(origin[0] - dest[0],
                                       origin[1] - dest[1]) / 22.0 * 60.0
                       + self.rng.uniform(-2.0, 4.0))
        return self._trip(origin, dest, self._place_label(),
                          self._station_alias(sid), pickup, duration)

    def _draw_last_mile(self) -> TripRecord:
        sid = self._pick(self.metro_sids)
        origin = self._near(sid, 250.0)
        dest = self._interior_point()
        pickup = self._day_minute()
        duration = max(4.0, math.hypot(origin[0] - dest[0],
                                       origin[1] - dest[1]) / 22.0 * 60.0
                       + self.rng.uniform(-2.0, 4.0))
        return self._trip(origin, dest, self._station_alias(sid),
                          self._place_label(), pickup, duration)

    def _corridor_pair(self, max_legs: int) -> tuple[str, str]:
        line = self._pick(self.metro_ids)
        i = int(self.rng.integers(0, len(line) - 1))
        span = int(self.rng.integers(1, max_legs + 1))
        j = min(i + span, len(line) - 1)
        return line[i], line[j]

    def _draw_substitutive(self) -> TripRecord:
        a, b = self._corridor_pair(max_legs=4)
        origin = self._near(a, 330.0)
        dest = self._near(b, 330.0)
        pickup = self._day_minute()
        duration = float(self.rng.uniform(14.0, 26.0))
        return self._trip(origin, dest, self._place_label(),
                          self._place_label(), pickup, duration)

    def _draw_independent_c1(self) -> TripRecord:
        a, b = self._corridor_pair(max_legs=4)
        origin = self._near(a, 330.0)
        dest = self._near(b, 330.0)
        pickup = self._night_minute()
        duration = float(self.rng.uniform(8.0, 20.0))
        return self._trip(origin, dest, self._place_label(),
                          self._place_label(), pickup, duration)

    def _draw_independent_c3(self) -> TripRecord:
        line = self._pick(self.interior)
        sid = self._pick(line)
        # origin 480..720 m out, roughly perpendicular to the line so no
        # neighbouring station is any closer; planner stays available (<800)
        x, y = self.xy[sid]
        side = 1.0 if self.rng.random() < 0.5 else -1.0
        along = self.rng.uniform(-0.25, 0.25)
        out = self.rng.uniform(0.48, 0.72)
        if abs(self.xy[line[0]][1] - self.xy[line[-1]][1]) < 1e-9:
            origin = (x + along, y + side * out)      # horizontal line
        else:
            origin = (x + side * out, y + along)      # vertical line
        dest_sid = self._pick(self.metro_sids)
        dest = self._near(dest_sid, 330.0)
        pickup = self._day_minute()
        duration = float(self.rng.uniform(10.0, 24.0))
        return self._trip(origin, dest, self._place_label(),
                          self._place_label(), pickup, duration)

    def _draw_independent_c4(self) -> TripRecord:
        # opposite belts: transit must ride around the loop, the street route
        # cuts straight across, so the time condition fails on the gap
        north = self.interior[0]
        south = self.interior[2]
        origin = self._near(self._pick(north), 330.0)
        dest = self._near(self._pick(south), 330.0)
        pickup = self._day_minute()
        duration = float(self.rng.uniform(8.0, 14.0))
        return self._trip(origin, dest, self._place_label(),
                          self._place_label(), pickup, duration)

    def _draw_independent_c5(self) -> TripRecord:
        # middle of the north belt to middle of the east belt: the chained
        # layout forces three transfers
        north = self.metro_ids[0]
        east = self.metro_ids[3]
        a = self._pick(north[4:8])
        b = self._pick(east[4:8])
        origin = self._near(a, 330.0)
        dest = self._near(b, 330.0)
        pickup = self._day_minute()
        duration = float(self.rng.uniform(48.0, 62.0))
        return self._trip(origin, dest, self._place_label(),
                          self._place_label(), pickup, duration)

    def _draw_independent_c6(self) -> TripRecord:
        # one-stop hop where the metro fare exceeds half the (cheap) fare of
        # the ride itself
        line = self._pick(self.metro_ids)
        i = int(self.rng.integers(2, len(line) - 3))
        origin = self._near(line[i], 240.0)
        dest = self._near(line[i + 1], 240.0)
        pickup = self._day_minute()
        duration = float(self.rng.uniform(5.0, 9.0))
        cost = round(float(self.rng.uniform(4.2, 5.6)), 2)
        return self._trip(origin, dest, self._place_label(),
                          self._place_label(), pickup, duration, cost=cost)

    RECIPES = {
        "first_mile": ("_draw_first_mile", FIRST_MILE, None),
        "last_mile": ("_draw_last_mile", LAST_MILE, None),
        "substitutive": ("_draw_substitutive", SUBSTITUTIVE, None),
        "independent_c1": ("_draw_independent_c1", INDEPENDENT, "C1"),
        "independent_c3": ("_draw_independent_c3", INDEPENDENT, "C3"),
        "independent_c4": ("_draw_independent_c4", INDEPENDENT, "C4"),
        "independent_c5": ("_draw_independent_c5", INDEPENDENT, "C5"),
        "independent_c6": ("_draw_independent_c6", INDEPENDENT, "C6"),
    }

    def classify(self, trip: TripRecord) -> TripClass:
        alt = self.planner.plan(trip.olon, trip.olat, trip.dlon, trip.dlat,
                                trip.pickup_min)
        return classify_trip(trip, alt, self.net, self.lexicon, self.cfg)

    def plant(self, recipe: str) -> tuple[TripRecord, str, Optional[str]]:
        draw_name, label, violated = self.RECIPES[recipe]
        draw = getattr(self, draw_name)
        for _ in range(self.spec.max_attempts):
            trip = draw()
            got = self.classify(trip)
            if got.label == label and got.failed_condition == violated:
                return trip, label, violated
        raise RuntimeError(f"could not place a {recipe} trip in "
                           f"{self.spec.max_attempts} attempts; the scenario "
                           f"geometry cannot express it")

    def plant_all(self) -> tuple[list[TripRecord], list[GroundTruth]]:
        trips: list[TripRecord] = []
        intents: list[tuple[str, Optional[str]]] = []
        for recipe, count in self.spec.planted_counts().items():
            for _ in range(count):
                trip, label, violated = self.plant(recipe)
                trips.append(trip)
                intents.append((label, violated))
        order = self.rng.permutation(len(trips))
        shuffled = [trips[i] for i in order]
        truth = [GroundTruth(trip_index=new_idx,
                             intended_class=intents[old_idx][0],
                             violated_condition=intents[old_idx][1])
                 for new_idx, old_idx in enumerate(order)]
        return shuffled, truth


def plant_trips(spec: ScenarioSpec, net: TransitNetwork,
                meta: dict) -> tuple[list[TripRecord], list[GroundTruth]]:
    return _Factory(spec, net, meta).plant_all()


# ---------------------------------------------------------------------------
# context layers: points of interest, population, streets


def _poi_points(spec: ScenarioSpec, meta: dict,
                rng: np.random.Generator) -> list[tuple[float, float, str]]:
    proj: LocalProjection = meta["proj"]
    xy = meta["xy"]
    extent = spec.half_extent_km - 0.8
    station_pos = [xy[sid] for sid in sorted(xy)]
    mix = (("residence", 0.40), ("retail", 0.25), ("catering", 0.20),
           ("enterprise", 0.15))
    anchors = {
        "residence": [(rng.uniform(-extent, extent),
                       rng.uniform(-extent, extent)) for _ in range(8)],
        "retail": [station_pos[int(rng.integers(len(station_pos)))]
                   for _ in range(10)] if station_pos else [],
        "catering": [station_pos[int(rng.integers(len(station_pos)))]
                     for _ in range(8)] if station_pos else [],
        "enterprise": [(rng.uniform(0.5, extent), rng.uniform(0.5, extent))
                       for _ in range(3)],
    }
    sigma = {"residence": 1.2, "retail": 0.5, "catering": 0.7,
             "enterprise": 1.0}
    out = []
    for category, share in mix:
        n = int(round(spec.poi_count * share))
        blobs = anchors[category]
        for _ in range(n):
            if blobs and rng.random() < 0.7:
                cx, cy = blobs[int(rng.integers(len(blobs)))]
                x = cx + rng.normal(0.0, sigma[category])
                y = cy + rng.normal(0.0, sigma[category])
            else:
                x = rng.uniform(-extent, extent)
                y = rng.uniform(-extent, extent)
            x = float(np.clip(x, -extent, extent))
            y = float(np.clip(y, -extent, extent))
            lon, lat = proj.to_lonlat(x * 1000.0, y * 1000.0)
            out.append((lon, lat, category))
    return out


def _population_raster(spec: ScenarioSpec, meta: dict,
                       rng: np.random.Generator) -> list[tuple[float, float, float]]:
    proj: LocalProjection = meta["proj"]
    extent = spec.half_extent_km - 0.6
    pitch = spec.population_pitch_km
    blobs = [(rng.uniform(-extent * 0.7, extent * 0.7),
              rng.uniform(-extent * 0.7, extent * 0.7),
              rng.uniform(600.0, 1500.0)) for _ in range(6)]
    out = []
    steps = int(2 * extent / pitch) + 1
    for i in range(steps):
        for j in range(steps):
            x = -extent + i * pitch
            y = -extent + j * pitch
            value = 120.0 + 60.0 * math.exp(-(x * x + y * y) / (2 * 5.0 ** 2))
            for bx, by, mass in blobs:
                d2 = (x - bx) ** 2 + (y - by) ** 2
                value += mass * math.exp(-d2 / (2 * 1.8 ** 2))
            lon, lat = proj.to_lonlat(x * 1000.0, y * 1000.0)
            out.append((lon, lat, round(value, 3)))
    return out


def _street_grid(spec: ScenarioSpec, meta: dict) -> dict:
    """GeoJSON street grid with diagonal in-fills (they create triangles, so
    junction clustering is not degenerate) and two marked highways."""
    proj: LocalProjection = meta["proj"]
    extent = spec.half_extent_km - 1.0
    step = 0.8

    def lonlat(x, y):
        lon, lat = proj.to_lonlat(x * 1000.0, y * 1000.0)
        return [round(lon, 7), round(lat, 7)]

    features = []
    ticks = np.arange(-extent, extent + step / 2, step)
    for x in ticks:
        coords = [lonlat(float(x), float(y)) for y in ticks]
        features.append({"type": "Feature", "properties": {},
                         "geometry": {"type": "LineString",
                                      "coordinates": coords}})
    for y in ticks:
        coords = [lonlat(float(x), float(y)) for x in ticks]
        features.append({"type": "Feature", "properties": {},
                         "geometry": {"type": "LineString",
                                      "coordinates": coords}})
    for k in range(0, len(ticks) - 1, 3):
        for m in range(0, len(ticks) - 1, 4):
            x, y = float(ticks[k]), float(ticks[m])
            features.append({"type": "Feature", "properties": {},
                             "geometry": {"type": "LineString",
                                          "coordinates": [lonlat(x, y),
                                                          lonlat(x + step,
                                                                 y + step)]}})
    for y in (-extent - 0.4, extent + 0.4):
        coords = [lonlat(float(x), y) for x in
                  np.arange(-extent - 0.4, extent + 0.401, 2.0)]
        features.append({"type": "Feature", "properties": {"highway": True},
                         "geometry": {"type": "LineString",
                                      "coordinates": coords}})
    return {"type": "FeatureCollection", "features": features}


# ---------------------------------------------------------------------------
# emission


def write_ground_truth(truth: Sequence[GroundTruth], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(GROUND_TRUTH_COLUMNS)
        for row in truth:
            writer.writerow([row.trip_index, row.intended_class,
                             row.violated_condition or ""])


def read_ground_truth(path) -> list[GroundTruth]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(GroundTruth(
                trip_index=int(row["trip_index"]),
                intended_class=row["intended_class"],
                violated_condition=row["violated_condition"] or None))
    out.sort(key=lambda g: g.trip_index)
    return out


def bbox_of(spec: ScenarioSpec) -> tuple[float, float, float, float]:
    proj = LocalProjection(spec.anchor_lon, spec.anchor_lat)
    e = spec.half_extent_km * 1000.0
    lon_min, lat_min = proj.to_lonlat(-e, -e)
    lon_max, lat_max = proj.to_lonlat(e, e)
    return (lon_min, lat_min, lon_max, lat_max)


def generate(spec: ScenarioSpec, out_dir) -> dict[str, str]:
    """Emit the full scenario into ``out_dir``; returns artifact paths."""
    spec.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    net, meta = build_network(spec)
    trips, truth = plant_trips(spec, net, meta)
    context_rng = np.random.default_rng(spec.seed + 1)

    paths = {
        "trips": out / "trips.csv",
        "stations": out / "stations.csv",
        "routes": out / "routes.csv",
        "fares": out / "fares.json",
        "ground_truth": out / "ground_truth.csv",
        "poi": out / "poi.csv",
        "population": out / "population.csv",
        "roads": out / "roads.geojson",
        "scenario": out / "scenario.json",
    }
    write_trips(trips, str(paths["trips"]))
    write_stations([net.stations[sid] for sid in sorted(net.stations)],
                   str(paths["stations"]))
    write_routes([net.routes[rid] for rid in sorted(net.routes)],
                 str(paths["routes"]))
    write_fares(net.fares, str(paths["fares"]))
    write_ground_truth(truth, paths["ground_truth"])

    with open(paths["poi"], "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lon", "lat", "category"])
        for lon, lat, category in _poi_points(spec, meta, context_rng):
            writer.writerow([repr(lon), repr(lat), category])
    with open(paths["population"], "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lon", "lat", "population"])
        for lon, lat, value in _population_raster(spec, meta, context_rng):
            writer.writerow([repr(lon), repr(lat), repr(value)])
    with open(paths["roads"], "w") as fh:
        json.dump(_street_grid(spec, meta), fh, separators=(",", ":"),
                  sort_keys=True)
        fh.write("\n")
    with open(paths["scenario"], "w") as fh:
        json.dump({"spec": asdict(spec), "stations": len(net.stations),
                   "routes": len(net.routes), "trips": len(trips),
                   "bbox": list(bbox_of(spec))}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return {name: str(path) for name, path in paths.items()}


__all__ = ["ScenarioSpec", "GroundTruth", "build_network", "plant_trips",
           "generate", "write_ground_truth", "read_ground_truth", "bbox_of",
           "GROUND_TRUTH_COLUMNS"]
