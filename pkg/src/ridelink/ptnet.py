"""Public-transit network model and door-to-door journey planner.

The network is deliberately time-independent: a journey's waiting cost is
headway/2 per boarding rather than a timetable lookup, and in-vehicle times
come from inter-station great-circle distances at the route's cruise speed.
The planner minimises a generalized cost

    gen_cost = t_pt + transfer_penalty * transfers

where ``t_pt`` is the door-to-door time (access walk + waits + rides + egress
walk) in minutes. Walking is straight-line at a configurable speed. Service
windows are not part of planning; they are checked separately against a trip's
start time via :func:`is_in_service`.

File formats:

* stations CSV: ``id,name,aliases,lon,lat,mode,line_ids`` with ``|``-separated
  multi-valued cells;
* routes CSV: ``id,line_id,mode,station_ids,headway_min,service_start,
  service_end,speed_kmh`` (service times as ``HH:MM``);
* fare rules: a small JSON object, see :class:`FareRules`.
"""

from __future__ import annotations

import csv
import heapq
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .geo import great_circle_m

MODES = ("metro", "bus")

DEFAULT_WALK_SPEED_KMH = 4.8
DEFAULT_SEARCH_RADIUS_M = 800.0
DEFAULT_TRANSFER_PENALTY_MIN = 5.0


@dataclass(frozen=True)
class Station:
    id: str
    name: str
    aliases: tuple[str, ...]
    lon: float
    lat: float
    mode: str
    line_ids: tuple[str, ...]

    @property
    def is_hub(self) -> bool:
        return len(set(self.line_ids)) >= 2


@dataclass(frozen=True)
class Route:
    id: str
    line_id: str
    mode: str
    station_ids: tuple[str, ...]
    headway_min: float
    service_start: int  # minutes of day
    service_end: int
    speed_kmh: float
    fare_class: str = ""  # defaults to the mode at load time
    leg_times_min: Optional[tuple[float, ...]] = None  # overrides speed when given


@dataclass(frozen=True)
class FareRules:
    bus_flat: float = 2.0
    metro_base: float = 3.0
    metro_base_km: float = 6.0
    metro_step_rmb: float = 1.0
    metro_step_km: float = 10.0

    def metro_fare(self, ride_km: float) -> float:
        if ride_km <= self.metro_base_km:
            return self.metro_base
        extra = ride_km - self.metro_base_km
        return self.metro_base + math.ceil(extra / self.metro_step_km) * self.metro_step_rmb


@dataclass
class TransitNetwork:
    stations: dict[str, Station]
    routes: dict[str, Route]
    fares: FareRules = field(default_factory=FareRules)
    walk_speed_kmh: float = DEFAULT_WALK_SPEED_KMH

    def routes_at(self, station_id: str) -> list[str]:
        return self._routes_at.get(station_id, [])

    def __post_init__(self):
        self._routes_at: dict[str, list[str]] = {}
        for rid in sorted(self.routes):
            for sid in self.routes[rid].station_ids:
                lst = self._routes_at.setdefault(sid, [])
                if rid not in lst:
                    lst.append(rid)


@dataclass(frozen=True)
class Leg:
    mode: str
    line_id: str
    route_id: str
    board_station: str
    alight_station: str
    ride_min: float
    ride_km: float


@dataclass(frozen=True)
class PtAlternative:
    available: bool
    access_walk_m: float = 0.0
    egress_walk_m: float = 0.0
    t_pt_min: float = 0.0
    transfers: int = 0
    fare_rmb: float = 0.0
    gen_cost_min: float = 0.0
    legs: tuple[Leg, ...] = ()

    def to_dict(self) -> dict:
        if not self.available:
            return {"available": False}
        return {
            "available": True,
            "access_walk_m": self.access_walk_m,
            "egress_walk_m": self.egress_walk_m,
            "t_pt_min": self.t_pt_min,
            "transfers": self.transfers,
            "fare_rmb": self.fare_rmb,
            "gen_cost_min": self.gen_cost_min,
            "legs": [
                {
                    "mode": l.mode,
                    "line_id": l.line_id,
                    "route_id": l.route_id,
                    "board": l.board_station,
                    "alight": l.alight_station,
                    "ride_min": l.ride_min,
                    "ride_km": l.ride_km,
                }
                for l in self.legs
            ],
        }

    @staticmethod
    def from_dict(data: dict) -> "PtAlternative":
        if not data.get("available"):
            return UNAVAILABLE
        return PtAlternative(
            available=True,
            access_walk_m=data["access_walk_m"],
            egress_walk_m=data["egress_walk_m"],
            t_pt_min=data["t_pt_min"],
            transfers=data["transfers"],
            fare_rmb=data["fare_rmb"],
            gen_cost_min=data["gen_cost_min"],
            legs=tuple(
                Leg(d["mode"], d["line_id"], d["route_id"], d["board"], d["alight"],
                    d["ride_min"], d["ride_km"])
                for d in data["legs"]
            ),
        )


UNAVAILABLE = PtAlternative(available=False)


def parse_hhmm(text: str) -> int:
    parts = text.strip().split(":")
    if len(parts) != 2:
        raise ValueError(f"bad HH:MM time {text!r}")
    h, m = int(parts[0]), int(parts[1])
    if not (0 <= h < 24 and 0 <= m < 60):
        raise ValueError(f"bad HH:MM time {text!r}")
    return h * 60 + m


def format_hhmm(minutes: int) -> str:
    return f"{minutes // 60:02d}:{minutes % 60:02d}"


def load_network(
    stations_path: str,
    routes_path: str,
    fares: FareRules | str | dict | None = None,
) -> TransitNetwork:
    """Load stations/routes CSVs plus fare rules (JSON path, dict, or object)."""
    stations: dict[str, Station] = {}
    with open(stations_path, "r", encoding="utf-8", newline="") as handle:
        for row in csv.DictReader(handle):
            sid = row["id"].strip()
            if sid in stations:
                raise ValueError(f"duplicate station id {sid!r}")
            mode = row["mode"].strip()
            if mode not in MODES:
                raise ValueError(f"station {sid!r} has unknown mode {mode!r}")
            aliases = tuple(a.strip() for a in row["aliases"].split("|") if a.strip())
            line_ids = tuple(l.strip() for l in row["line_ids"].split("|") if l.strip())
            stations[sid] = Station(
                id=sid, name=row["name"].strip(), aliases=aliases,
                lon=float(row["lon"]), lat=float(row["lat"]),
                mode=mode, line_ids=line_ids,
            )
    routes: dict[str, Route] = {}
    with open(routes_path, "r", encoding="utf-8", newline="") as handle:
        for row in csv.DictReader(handle):
            rid = row["id"].strip()
            if rid in routes:
                raise ValueError(f"duplicate route id {rid!r}")
            mode = row["mode"].strip()
            if mode not in MODES:
                raise ValueError(f"route {rid!r} has unknown mode {mode!r}")
            station_ids = tuple(s.strip() for s in row["station_ids"].split("|") if s.strip())
            routes[rid] = Route(
                id=rid, line_id=row["line_id"].strip(), mode=mode,
                station_ids=station_ids,
                headway_min=float(row["headway_min"]),
                service_start=parse_hhmm(row["service_start"]),
                service_end=parse_hhmm(row["service_end"]),
                speed_kmh=float(row["speed_kmh"]),
                fare_class=mode,
            )
    if fares is None:
        fare_rules = FareRules()
    elif isinstance(fares, FareRules):
        fare_rules = fares
    elif isinstance(fares, dict):
        fare_rules = FareRules(**fares)
    else:
        with open(fares, "r", encoding="utf-8") as handle:
            fare_rules = FareRules(**json.load(handle))
    net = TransitNetwork(stations=stations, routes=routes, fares=fare_rules)
    validate_network(net)
    return net


def validate_network(net: TransitNetwork) -> None:
    for rid in sorted(net.routes):
        route = net.routes[rid]
        if len(route.station_ids) < 2:
            raise ValueError(f"route {rid!r} has fewer than 2 stations")
        for sid in route.station_ids:
            if sid not in net.stations:
                raise ValueError(f"route {rid!r} references missing station {sid!r}")
        if route.headway_min <= 0:
            raise ValueError(f"route {rid!r} has nonpositive headway")
        if route.speed_kmh <= 0:
            raise ValueError(f"route {rid!r} has nonpositive speed")
        if not (0 <= route.service_start < route.service_end <= 1440):
            raise ValueError(f"route {rid!r} has invalid service window")
        if route.leg_times_min is not None and len(route.leg_times_min) != len(route.station_ids) - 1:
            raise ValueError(f"route {rid!r} leg-time table length mismatch")


def write_stations(stations: Iterable[Station], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["id", "name", "aliases", "lon", "lat", "mode", "line_ids"])
        for s in stations:
            writer.writerow([s.id, s.name, "|".join(s.aliases), repr(s.lon), repr(s.lat),
                             s.mode, "|".join(s.line_ids)])


def write_routes(routes: Iterable[Route], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["id", "line_id", "mode", "station_ids", "headway_min",
                         "service_start", "service_end", "speed_kmh"])
        for r in routes:
            writer.writerow([r.id, r.line_id, r.mode, "|".join(r.station_ids),
                             repr(r.headway_min), format_hhmm(r.service_start),
                             format_hhmm(r.service_end), repr(r.speed_kmh)])


def write_fares(rules: FareRules, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump({
            "bus_flat": rules.bus_flat,
            "metro_base": rules.metro_base,
            "metro_base_km": rules.metro_base_km,
            "metro_step_rmb": rules.metro_step_rmb,
            "metro_step_km": rules.metro_step_km,
        }, handle, indent=2)
        handle.write("\n")


def leg_minutes(net: TransitNetwork, route: Route, i: int) -> float:
    """In-vehicle minutes between consecutive stations i and i+1 of a route."""
    if route.leg_times_min is not None:
        return route.leg_times_min[i]
    a = net.stations[route.station_ids[i]]
    b = net.stations[route.station_ids[i + 1]]
    return great_circle_m(a.lon, a.lat, b.lon, b.lat) / 1000.0 / route.speed_kmh * 60.0


def leg_km(net: TransitNetwork, route: Route, i: int) -> float:
    a = net.stations[route.station_ids[i]]
    b = net.stations[route.station_ids[i + 1]]
    return great_circle_m(a.lon, a.lat, b.lon, b.lat) / 1000.0


def walk_minutes(walk_m: float, walk_speed_kmh: float) -> float:
    return walk_m / 1000.0 / walk_speed_kmh * 60.0


def leg_fare(net: TransitNetwork, leg: Leg) -> float:
    if leg.mode == "bus":
        return net.fares.bus_flat
    return net.fares.metro_fare(leg.ride_km)


def alternative_fare(net: TransitNetwork, legs: Sequence[Leg]) -> float:
    return float(sum(leg_fare(net, leg) for leg in legs))


class NetworkPlanner:
    """Minimum generalized-cost journey search over a prebuilt static graph.

    States are (station, route, ridden) triples: ``ridden`` flips to True on the
    first in-vehicle leg and gates both transfers and arrival, so a journey
    always contains at least one ride. Ties between equal-cost states break on
    the lexicographic state key, which keeps results reproducible.
    """

    def __init__(
        self,
        net: TransitNetwork,
        search_radius_m: float = DEFAULT_SEARCH_RADIUS_M,
        transfer_penalty_min: float = DEFAULT_TRANSFER_PENALTY_MIN,
    ):
        if search_radius_m <= 0:
            raise ValueError("search radius must be positive")
        self.net = net
        self.search_radius_m = search_radius_m
        self.transfer_penalty_min = transfer_penalty_min
        sids = sorted(net.stations)
        self._sids = sids
        self._lon = np.array([net.stations[s].lon for s in sids])
        self._lat = np.array([net.stations[s].lat for s in sids])
        # per-route positional index and per-leg times/distances
        self._pos: dict[str, dict[str, list[int]]] = {}
        self._leg_min: dict[str, list[float]] = {}
        self._leg_km: dict[str, list[float]] = {}
        for rid in sorted(net.routes):
            route = net.routes[rid]
            pos: dict[str, list[int]] = {}
            for i, sid in enumerate(route.station_ids):
                pos.setdefault(sid, []).append(i)
            self._pos[rid] = pos
            self._leg_min[rid] = [leg_minutes(net, route, i) for i in range(len(route.station_ids) - 1)]
            self._leg_km[rid] = [leg_km(net, route, i) for i in range(len(route.station_ids) - 1)]

    def _stations_within(self, lon: float, lat: float) -> list[tuple[str, float]]:
        d = great_circle_m(np.full(len(self._sids), lon), np.full(len(self._sids), lat),
                           self._lon, self._lat)
        hits = [(self._sids[i], float(d[i])) for i in np.flatnonzero(d <= self.search_radius_m)]
        return hits  # already in sorted-station order

    def plan(self, olon: float, olat: float, dlon: float, dlat: float,
             depart_min: Optional[int] = None) -> PtAlternative:
        """Plan the best journey from origin to destination.

        ``depart_min`` is accepted for interface symmetry with trip records but
        does not influence the (time-independent) search.  Journeys that board
        and alight at the same station are excluded from the candidate space:
        the search state carries the boarding station, so such a journey can
        never be selected even when it would be the cost minimum.
        """
        net = self.net
        access = self._stations_within(olon, olat)
        egress = self._stations_within(dlon, dlat)
        if not access or not egress:
            return UNAVAILABLE
        egress_m = dict(egress)

        # state = (station, route, ridden, boarding station)
        dist: dict[tuple, float] = {}
        prev: dict[tuple, tuple] = {}
        heap: list[tuple[float, tuple]] = []

        def relax(state, cost, origin_state, kind, payload):
            if cost < dist.get(state, math.inf):
                dist[state] = cost
                prev[state] = (origin_state, kind, payload)
                heapq.heappush(heap, (cost, state))

        for sid, walk_m in access:
            walk = walk_minutes(walk_m, net.walk_speed_kmh)
            for rid in net.routes_at(sid):
                cost = walk + net.routes[rid].headway_min / 2.0
                relax((sid, rid, False, sid), cost, None, "access", walk_m)

        while heap:
            cost, state = heapq.heappop(heap)
            if cost > dist.get(state, math.inf):
                continue
            sid, rid, ridden, board0 = state
            for p in self._pos[rid].get(sid, ()):
                for q in (p - 1, p + 1):
                    if 0 <= q < len(net.routes[rid].station_ids):
                        w = self._leg_min[rid][min(p, q)]
                        nsid = net.routes[rid].station_ids[q]
                        relax((nsid, rid, True, board0), cost + w, state, "ride", (p, q))
            if ridden:
                for rid2 in net.routes_at(sid):
                    if rid2 == rid:
                        continue
                    w = self.transfer_penalty_min + net.routes[rid2].headway_min / 2.0
                    relax((sid, rid2, True, board0), cost + w, state, "transfer", None)

        best_state, best_total = None, math.inf
        for state, cost in dist.items():
            sid, rid, ridden, board0 = state
            if not ridden or sid == board0 or sid not in egress_m:
                continue
            total = cost + walk_minutes(egress_m[sid], net.walk_speed_kmh)
            if total < best_total or (total == best_total and state < best_state):
                best_state, best_total = state, total
        if best_state is None:
            return UNAVAILABLE

        legs, transfers, access_walk_m = self._recover(best_state, prev)
        t_pt = best_total - self.transfer_penalty_min * transfers
        return PtAlternative(
            available=True,
            access_walk_m=access_walk_m,
            egress_walk_m=egress_m[best_state[0]],
            t_pt_min=t_pt,
            transfers=transfers,
            fare_rmb=alternative_fare(net, legs),
            gen_cost_min=best_total,
            legs=tuple(legs),
        )

    def _recover(self, state, prev):
        # walk predecessors back to the access edge, then stitch ride runs
        steps = []
        cur = state
        while True:
            origin_state, kind, payload = prev[cur]
            steps.append((cur, kind, payload))
            if kind == "access":
                access_walk_m = payload
                break
            cur = origin_state
        steps.reverse()
        legs: list[Leg] = []
        transfers = 0
        run_route = None
        run_board = None
        run_min = 0.0
        run_km = 0.0

        def close_run(alight_sid):
            route = self.net.routes[run_route]
            legs.append(Leg(route.mode, route.line_id, run_route, run_board, alight_sid,
                            run_min, run_km))

        cur_station = None
        for st, kind, payload in steps:
            sid, rid = st[0], st[1]
            if kind == "access":
                run_route, run_board, run_min, run_km = rid, sid, 0.0, 0.0
            elif kind == "transfer":
                close_run(sid)
                transfers += 1
                run_route, run_board, run_min, run_km = rid, sid, 0.0, 0.0
            else:  # ride
                p, q = payload
                run_min += self._leg_min[rid][min(p, q)]
                run_km += self._leg_km[rid][min(p, q)]
            cur_station = sid
        close_run(cur_station)
        return legs, transfers, access_walk_m


def plan_pt_alternative(
    net: TransitNetwork,
    origin: tuple[float, float],
    destination: tuple[float, float],
    depart_min: Optional[int] = None,
    search_radius_m: float = DEFAULT_SEARCH_RADIUS_M,
    transfer_penalty_min: float = DEFAULT_TRANSFER_PENALTY_MIN,
) -> PtAlternative:
    """One-shot convenience wrapper; build a :class:`NetworkPlanner` for bulk use."""
    planner = NetworkPlanner(net, search_radius_m, transfer_penalty_min)
    return planner.plan(origin[0], origin[1], destination[0], destination[1], depart_min)


def is_in_service(net: TransitNetwork, subject, interval: tuple[int, int]) -> bool:
    """Check service windows against a trip interval (minutes since epoch).

    The operative instant is the trip start: a window counts when it contains
    ``interval[0]`` expressed as minutes-of-day, boundaries inclusive.

    ``subject`` selects the routes to test: a :class:`PtAlternative` with legs
    requires *every* leg's route window to contain the start; an alternative
    without legs (or None) falls back to "any route in the network", and an
    iterable of station ids means "any route serving one of these stations".
    """
    tod = interval[0] % 1440

    def window_ok(route: Route) -> bool:
        return route.service_start <= tod <= route.service_end

    if isinstance(subject, PtAlternative):
        if subject.available and subject.legs:
            return all(window_ok(net.routes[l.route_id]) for l in subject.legs)
        subject = None
    if subject is None:
        return any(window_ok(net.routes[rid]) for rid in sorted(net.routes))
    route_ids: set[str] = set()
    for sid in subject:
        route_ids.update(net.routes_at(sid))
    return any(window_ok(net.routes[rid]) for rid in sorted(route_ids))


def station_lexicon(net: TransitNetwork) -> dict[str, tuple[str, ...]]:
    """Map normalized name/alias keys to the station ids sharing them."""
    from .classify import normalize_label  # local import avoids a module cycle

    table: dict[str, set[str]] = {}
    for sid in sorted(net.stations):
        station = net.stations[sid]
        for raw in (station.name, *station.aliases):
            key = normalize_label(raw).key
            if key:
                table.setdefault(key, set()).add(sid)
    return {key: tuple(sorted(ids)) for key, ids in sorted(table.items())}


def coord_key(lon: float, lat: float) -> str:
    return f"{lon:.5f},{lat:.5f}"


class CachedPlanner:
    """Memoising wrapper keyed on (origin, destination, departure hour).

    Coordinates round to 5 decimals (about a metre) in the key, and entries
    persist as JSON lines so a planning stage can be replayed without the
    network files.
    """

    def __init__(self, planner: Optional[NetworkPlanner] = None):
        self.planner = planner
        self._table: dict[tuple[str, str, int], PtAlternative] = {}

    @staticmethod
    def key(olon, olat, dlon, dlat, depart_min) -> tuple[str, str, int]:
        hour = int(depart_min % 1440) // 60 if depart_min is not None else 0
        return (coord_key(olon, olat), coord_key(dlon, dlat), hour)

    def plan(self, olon, olat, dlon, dlat, depart_min=None) -> PtAlternative:
        k = self.key(olon, olat, dlon, dlat, depart_min)
        hit = self._table.get(k)
        if hit is not None:
            return hit
        if self.planner is None:
            raise KeyError(f"no cached alternative for {k} and no planner attached")
        alt = self.planner.plan(olon, olat, dlon, dlat, depart_min)
        self._table[k] = alt
        return alt

    def __len__(self) -> int:
        return len(self._table)

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            for (okey, dkey, hour) in sorted(self._table):
                alt = self._table[(okey, dkey, hour)]
                handle.write(json.dumps(
                    {"okey": okey, "dkey": dkey, "hour": hour, "alt": alt.to_dict()}
                ) + "\n")

    @classmethod
    def load(cls, path: str, planner: Optional[NetworkPlanner] = None) -> "CachedPlanner":
        cache = cls(planner)
        with open(path, "r", encoding="utf-8") as handle:
            for line in handle:
                line = line.strip()
                if not line:
                    continue
                entry = json.loads(line)
                cache._table[(entry["okey"], entry["dkey"], entry["hour"])] = (
                    PtAlternative.from_dict(entry["alt"])
                )
        return cache


__all__ = [
    "CachedPlanner",
    "DEFAULT_SEARCH_RADIUS_M",
    "DEFAULT_TRANSFER_PENALTY_MIN",
    "DEFAULT_WALK_SPEED_KMH",
    "FareRules",
    "Leg",
    "MODES",
    "NetworkPlanner",
    "PtAlternative",
    "Route",
    "Station",
    "TransitNetwork",
    "UNAVAILABLE",
    "alternative_fare",
    "coord_key",
    "format_hhmm",
    "is_in_service",
    "leg_km",
    "leg_minutes",
    "load_network",
    "parse_hhmm",
    "plan_pt_alternative",
    "station_lexicon",
    "validate_network",
    "write_fares",
    "write_routes",
    "write_stations",
]
