"""Fixed small-city network shared by the unit tests and the acceptance suite."""

from ridelink.ptnet import FareRules, Route, Station, TransitNetwork


def _station(sid, name, lon, lat, mode, lines, aliases=()):
    return Station(id=sid, name=name, aliases=tuple(aliases), lon=lon, lat=lat,
                   mode=mode, line_ids=tuple(lines))


def build_city() -> TransitNetwork:
    """Metro line M1 (west-east), M2 (north-south, hub at Cedar), one bus route."""
    stations = {}
    for s in [
        _station("m1", "Alder Station", 121.000, 31.000, "metro", ["M1"],
                 ["Alder Station Exit A", "Alder Station Exit B"]),
        _station("m2", "Birch Station", 121.018, 31.000, "metro", ["M1"],
                 ["Birch Station Exit A"]),
        _station("m3", "Cedar Station", 121.036, 31.000, "metro", ["M1", "M2"],
                 ["Cedar Station Exit A", "Cedar Station B1"]),
        _station("m4", "Dogwood Station", 121.054, 31.000, "metro", ["M1"], []),
        _station("m5", "Elm Station", 121.036, 31.015, "metro", ["M2"], []),
        _station("m6", "Fir Station", 121.036, 31.030, "metro", ["M2"], []),
        _station("b1", "Harbor Bus Stop", 121.000, 30.985, "bus", ["B1"], []),
        _station("b2", "Inlet Bus Stop", 121.018, 30.985, "bus", ["B1"], []),
        _station("b3", "Jetty Bus Stop", 121.036, 30.985, "bus", ["B1"], []),
    ]:
        stations[s.id] = s
    routes = {
        "M1": Route(id="M1", line_id="M1", mode="metro",
                    station_ids=("m1", "m2", "m3", "m4"),
                    headway_min=8.0, service_start=330, service_end=1410,
                    speed_kmh=35.0, fare_class="metro"),
        "M2": Route(id="M2", line_id="M2", mode="metro",
                    station_ids=("m3", "m5", "m6"),
                    headway_min=8.0, service_start=330, service_end=1410,
                    speed_kmh=35.0, fare_class="metro"),
        "B1": Route(id="B1", line_id="B1", mode="bus",
                    station_ids=("b1", "b2", "b3"),
                    headway_min=12.0, service_start=360, service_end=1380,
                    speed_kmh=20.0, fare_class="bus"),
    }
    return TransitNetwork(stations=stations, routes=routes, fares=FareRules())
