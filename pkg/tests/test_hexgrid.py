import json
import math

import numpy as np
import pytest

from cityfix import build_city
from ridelink.classify import FIRST_MILE, INDEPENDENT, LAST_MILE, SUBSTITUTIVE, TripClass
from ridelink.hexgrid import (
    OFF_GRID,
    SQRT3,
    axial_center_xy,
    build_grid,
    cell_center,
    cell_id,
    cell_polygon,
    complementary_breakdown,
    compute_ratios,
    locate,
    od_flows,
    read_cell_stats,
    temporal_profile,
    trip_stats,
    write_cell_stats,
    write_cell_stats_geojson,
    write_od_flows,
    write_temporal_profile,
)
from ridelink.ingest import TripRecord

BBOX = (121.00, 31.00, 121.105, 31.09)  # ~10 x 10 km at this latitude


def _trip(olon, olat, dlon, dlat, pickup=480, duration=15, cost=20.0, request=None):
    return TripRecord(
        plate_id="T", olon=olon, olat=olat, pickup_label="A", pickup_min=pickup,
        dlon=dlon, dlat=dlat, dropoff_label="B", dropoff_min=pickup + duration,
        distance_km=5.0, cost=cost, request_min=request,
    )


def _nearest_center_oracle(grid, lon, lat):
    """Independent point location: hexagons are the Voronoi cells of their
    centers, so the nearest center in the projected plane is the answer."""
    x, y = grid.projection.to_xy(lon, lat)
    best, best_d = None, math.inf
    for q, r in grid.cells:
        cx, cy = axial_center_xy(grid, q, r)
        d = (cx - x) ** 2 + (cy - y) ** 2
        if d < best_d:
            best, best_d = (q, r), d
    return best, math.sqrt(best_d)


class TestBuildGrid:
    def test_cell_count_near_analytic_estimate(self):
        grid = build_grid(BBOX, side_km=0.5)
        x_min, y_min = grid.projection.to_xy(BBOX[0], BBOX[1])
        x_max, y_max = grid.projection.to_xy(BBOX[2], BBOX[3])
        s = grid.side_m
        padded_area = (x_max - x_min + 2 * s) * (y_max - y_min + 2 * s)
        hex_area = 1.5 * SQRT3 * s * s
        estimate = padded_area / hex_area
        perimeter = 2 * ((x_max - x_min + 2 * s) + (y_max - y_min + 2 * s))
        one_ring = perimeter / (SQRT3 * s) + 8
        assert abs(len(grid.cells) - estimate) <= one_ring

    def test_all_cells_same_area(self):
        grid = build_grid(BBOX, side_km=0.5)
        proj = grid.projection
        expected_km2 = 1.5 * SQRT3 * 0.25
        for q, r in list(grid.cells)[::17]:
            ring = [proj.to_xy(lon, lat) for lon, lat in cell_polygon(grid, q, r)]
            shoelace = 0.0
            for (x1, y1), (x2, y2) in zip(ring, ring[1:] + ring[:1]):
                shoelace += x1 * y2 - x2 * y1
            area_km2 = abs(shoelace) / 2.0 / 1e6
            assert area_km2 == pytest.approx(expected_km2, rel=1e-9)

    def test_rebuild_is_identical(self):
        assert build_grid(BBOX, 0.5) == build_grid(BBOX, 0.5)

    @pytest.mark.parametrize("bbox", [
        (121.0, 31.0, 121.0, 31.1),
        (121.0, 31.0, 120.9, 31.1),
        (121.0, 31.0, 121.1, 31.0),
    ])
    def test_degenerate_bbox_rejected(self, bbox):
        with pytest.raises(ValueError, match="degenerate"):
            build_grid(bbox, 0.5)

    def test_bad_side_rejected(self):
        with pytest.raises(ValueError, match="side_km"):
            build_grid(BBOX, 0.0)


class TestLocate:
    def test_cell_center_maps_to_itself(self):
        grid = build_grid(BBOX, 0.5)
        for q, r in list(grid.cells)[::13]:
            lon, lat = cell_center(grid, q, r)
            assert locate(grid, lon, lat) == (q, r)

    def test_epsilon_off_center_same_cell(self):
        grid = build_grid(BBOX, 0.5)
        q, r = grid.cells[len(grid.cells) // 2]
        lon, lat = cell_center(grid, q, r)
        assert locate(grid, lon + 1e-7, lat - 1e-7) == (q, r)

    def test_far_point_is_off_grid(self):
        grid = build_grid(BBOX, 0.5)
        assert locate(grid, 125.0, 35.0) is OFF_GRID

    def test_every_in_box_point_lands_in_a_cell(self):
        grid = build_grid(BBOX, 0.5)
        rng = np.random.default_rng(11)
        for _ in range(400):
            lon = float(rng.uniform(BBOX[0], BBOX[2]))
            lat = float(rng.uniform(BBOX[1], BBOX[3]))
            assert locate(grid, lon, lat) is not OFF_GRID

    def test_agrees_with_nearest_center_oracle(self):
        grid = build_grid(BBOX, 0.5)
        rng = np.random.default_rng(23)
        checked = 0
        for _ in range(300):
            lon = float(rng.uniform(BBOX[0], BBOX[2]))
            lat = float(rng.uniform(BBOX[1], BBOX[3]))
            oracle_cell, d = _nearest_center_oracle(grid, lon, lat)
            # skip near-ties where Voronoi membership is ambiguous in floats
            x, y = grid.projection.to_xy(lon, lat)
            cx, cy = axial_center_xy(grid, *oracle_cell)
            second = min(
                math.hypot(axial_center_xy(grid, q, r)[0] - x,
                           axial_center_xy(grid, q, r)[1] - y)
                for q, r in grid.cells if (q, r) != oracle_cell
            )
            if second - d < 1e-6:
                continue
            checked += 1
            assert locate(grid, lon, lat) == oracle_cell
        assert checked > 250

    def test_shared_edge_point_assigned_to_exactly_one_adjacent_cell(self):
        grid = build_grid(BBOX, 0.5)
        cells = grid.cell_set()
        q, r = grid.cells[len(grid.cells) // 2]
        proj = grid.projection
        for dq, dr in ((1, 0), (0, 1), (1, -1)):
            neighbor = (q + dq, r + dr)
            if neighbor not in cells:
                continue
            x1, y1 = axial_center_xy(grid, q, r)
            x2, y2 = axial_center_xy(grid, *neighbor)
            lon, lat = proj.to_lonlat((x1 + x2) / 2.0, (y1 + y2) / 2.0)
            results = {locate(grid, lon, lat) for _ in range(5)}
            assert len(results) == 1
            assert results.pop() in {(q, r), neighbor}


class TestComputeRatios:
    def _grid(self):
        return build_grid(BBOX, 0.5)

    def test_hand_counts_and_ratios(self):
        grid = self._grid()
        a = cell_center(grid, *grid.cells[10])
        b = cell_center(grid, *grid.cells[40])
        trips = [
            _trip(a[0], a[1], b[0], b[1]),
            _trip(a[0], a[1], b[0], b[1]),
            _trip(a[0], a[1], b[0], b[1]),
            _trip(b[0], b[1], a[0], a[1]),
        ]
        results = [TripClass(FIRST_MILE), TripClass(SUBSTITUTIVE),
                   TripClass(INDEPENDENT, "C4"), TripClass(LAST_MILE)]
        stats = compute_ratios(trips, results, grid, days=2)
        ca = stats[cell_id(*grid.cells[10])]
        cb = stats[cell_id(*grid.cells[40])]
        assert (ca.o_total, ca.a_total) == (3, 1)
        assert (ca.fc_total, ca.ds_total) == (1, 1)
        assert ca.lc_total == 1 and ca.as_total == 0  # LM counts at its dest cell
        assert ca.fcr == 1 / 3 and ca.dsr == 1 / 3
        assert ca.lcr == 1.0 and ca.asr == 0.0
        assert ca.o_daily == 1.5
        assert (cb.o_total, cb.a_total) == (1, 3)
        assert cb.lc_total == 0 and cb.as_total == 1
        assert cb.asr == 1 / 3

    def test_empty_cell_has_undefined_ratios(self):
        grid = self._grid()
        stats = compute_ratios([], [], grid, days=1)
        empty = stats[cell_id(*grid.cells[0])]
        assert empty.fcr is None and empty.lcr is None
        assert empty.dsr is None and empty.asr is None

    def test_conservation_and_brute_force_recount(self):
        grid = self._grid()
        rng = np.random.default_rng(5)
        labels = [FIRST_MILE, LAST_MILE, SUBSTITUTIVE, INDEPENDENT]
        trips, results = [], []
        for _ in range(300):
            trips.append(_trip(float(rng.uniform(BBOX[0], BBOX[2])),
                               float(rng.uniform(BBOX[1], BBOX[3])),
                               float(rng.uniform(BBOX[0], BBOX[2])),
                               float(rng.uniform(BBOX[1], BBOX[3]))))
            label = labels[int(rng.integers(0, 4))]
            results.append(TripClass(label, "C3" if label == INDEPENDENT else None))
        days = 3
        stats = compute_ratios(trips, results, grid, days)

        assert sum(cs.o_total for cs in stats.values()) == 300
        assert sum(cs.a_total for cs in stats.values()) == 300
        assert sum(cs.o_daily for cs in stats.values()) == pytest.approx(300 / days, rel=1e-12)

        # independent recount: assign each trip end by nearest hex center
        recount = {cid: [0, 0, 0, 0, 0, 0] for cid in stats}
        for trip, res in zip(trips, results):
            ocell, _ = _nearest_center_oracle(grid, trip.olon, trip.olat)
            dcell, _ = _nearest_center_oracle(grid, trip.dlon, trip.dlat)
            ok, dk = cell_id(*ocell), cell_id(*dcell)
            recount[ok][0] += 1
            recount[dk][1] += 1
            if res.label == FIRST_MILE:
                recount[ok][2] += 1
            elif res.label == LAST_MILE:
                recount[dk][3] += 1
            elif res.label == SUBSTITUTIVE:
                recount[ok][4] += 1
                recount[dk][5] += 1
        for cid, cs in stats.items():
            o, a, fc, lc, ds, asub = recount[cid]
            assert (cs.o_total, cs.a_total, cs.fc_total,
                    cs.lc_total, cs.ds_total, cs.as_total) == (o, a, fc, lc, ds, asub)
            if o:
                assert cs.fcr == fc / o and cs.dsr == ds / o
            if a:
                assert cs.lcr == lc / a and cs.asr == asub / a

    def test_bad_days_rejected(self):
        with pytest.raises(ValueError, match="days"):
            compute_ratios([], [], self._grid(), days=0)


class TestTemporalProfile:
    def test_single_hour_concentration(self):
        trips = [_trip(121.01, 31.01, 121.02, 31.02, pickup=8 * 60 + m) for m in range(5)]
        results = [TripClass(FIRST_MILE)] * 5
        profile = temporal_profile(trips, results)
        assert profile.totals[8] == 5
        assert sum(profile.totals) == 5
        assert profile.first_mile[8] == 5
        assert profile.ratio("fcr", 8) == 1.0

    def test_empty_profile(self):
        profile = temporal_profile([], [])
        assert profile.totals == [0] * 24
        assert profile.ratio("fcr", 12) is None

    def test_bins_sum_to_total(self):
        rng = np.random.default_rng(3)
        labels = [FIRST_MILE, LAST_MILE, SUBSTITUTIVE, INDEPENDENT]
        trips = [_trip(121.01, 31.01, 121.02, 31.02,
                       pickup=int(rng.integers(0, 1440))) for _ in range(97)]
        results = [TripClass(labels[int(rng.integers(0, 4))]) for _ in range(97)]
        profile = temporal_profile(trips, results)
        assert sum(profile.totals) == 97
        per_class = (sum(profile.first_mile) + sum(profile.last_mile)
                     + sum(profile.substitutive) + sum(profile.independent))
        assert per_class == 97


class TestOdFlows:
    def test_single_trip_single_flow(self):
        grid = build_grid(BBOX, 0.5)
        a = cell_center(grid, *grid.cells[5])
        b = cell_center(grid, *grid.cells[25])
        flows = od_flows([_trip(a[0], a[1], b[0], b[1])], [TripClass(FIRST_MILE)],
                         grid, days=2)
        assert len(flows) == 1
        f = flows[0]
        assert f.level == "grid"
        assert f.flow == 0.5
        assert (f.from_id, f.to_id) == (cell_id(*grid.cells[5]), cell_id(*grid.cells[25]))

    def test_class_filter(self):
        grid = build_grid(BBOX, 0.5)
        a = cell_center(grid, *grid.cells[5])
        b = cell_center(grid, *grid.cells[25])
        trips = [_trip(a[0], a[1], b[0], b[1])] * 3
        results = [TripClass(FIRST_MILE), TripClass(SUBSTITUTIVE), TripClass(FIRST_MILE)]
        flows = od_flows(trips, results, grid, days=1, trip_class=FIRST_MILE)
        assert len(flows) == 1 and flows[0].flow == 2.0
        assert flows[0].trip_class == FIRST_MILE

    def test_district_rollup_conserves_grid_flows(self):
        grid = build_grid(BBOX, 0.5)
        rng = np.random.default_rng(9)
        trips = [_trip(float(rng.uniform(BBOX[0], BBOX[2])),
                       float(rng.uniform(BBOX[1], BBOX[3])),
                       float(rng.uniform(BBOX[0], BBOX[2])),
                       float(rng.uniform(BBOX[1], BBOX[3]))) for _ in range(120)]
        results = [TripClass(SUBSTITUTIVE)] * 120
        mid_lon = (BBOX[0] + BBOX[2]) / 2
        # two half-plane districts covering the whole padded area
        districts = {
            "west": [(BBOX[0] - 1, BBOX[1] - 1), (mid_lon, BBOX[1] - 1),
                     (mid_lon, BBOX[3] + 1), (BBOX[0] - 1, BBOX[3] + 1)],
            "east": [(mid_lon, BBOX[1] - 1), (BBOX[2] + 1, BBOX[1] - 1),
                     (BBOX[2] + 1, BBOX[3] + 1), (mid_lon, BBOX[3] + 1)],
        }
        flows = od_flows(trips, results, grid, days=2, districts=districts)
        grid_total = sum(f.flow for f in flows if f.level == "grid")
        district_total = sum(f.flow for f in flows if f.level == "district")
        assert district_total == pytest.approx(grid_total, rel=1e-12)
        assert grid_total == pytest.approx(120 / 2, rel=1e-12)


class TestTripStats:
    def test_mass_equals_class_count(self):
        rng = np.random.default_rng(2)
        trips = [_trip(121.01, 31.01, 121.02, 31.02,
                       duration=int(rng.integers(5, 60))) for _ in range(50)]
        results = ([TripClass(SUBSTITUTIVE)] * 30 + [TripClass(INDEPENDENT, "C5")] * 20)
        stats = trip_stats(trips, results)
        assert stats[SUBSTITUTIVE]["travel_min"].mass == 30
        assert stats[INDEPENDENT]["fare_per_km"].mass == 20
        assert stats[FIRST_MILE]["travel_min"].mass == 0

    def test_wait_histogram_requires_request_times(self):
        trips = [_trip(121.01, 31.01, 121.02, 31.02)]
        stats = trip_stats(trips, [TripClass(SUBSTITUTIVE)])
        assert "wait_min" not in stats[SUBSTITUTIVE]
        trips = [_trip(121.01, 31.01, 121.02, 31.02, pickup=480, request=474)]
        stats = trip_stats(trips, [TripClass(SUBSTITUTIVE)])
        assert stats[SUBSTITUTIVE]["wait_min"].mass == 1


class TestComplementaryBreakdown:
    def test_direct_and_indirect_split(self):
        net = build_city()
        # origin next to m2 but matched to m3 (a hub): indirect-hub
        # origin next to m3 matched to m3: direct
        # dest next to m2 matched m1 (single line): indirect-single, last-mile
        trips = [
            _trip(121.0361, 31.0002, 121.05, 31.02),
            _trip(121.0181, 31.0001, 121.05, 31.02),
            _trip(121.05, 31.02, 121.0182, 31.0003),
            _trip(121.0001, 30.9851, 121.05, 31.02),
        ]
        results = [
            TripClass(FIRST_MILE, matched_station="m3"),
            TripClass(FIRST_MILE, matched_station="m3"),
            TripClass(LAST_MILE, matched_station="m1"),
            TripClass(FIRST_MILE, matched_station="b1"),
        ]
        breakdown = complementary_breakdown(trips, results, net)
        assert breakdown["total"] == 4
        assert breakdown["mode_counts"] == {"metro": 3, "bus": 1}
        assert breakdown["by_mode"]["metro"] == {
            "direct": 1, "indirect_hub": 1, "indirect_single": 1}
        assert breakdown["by_mode"]["bus"]["direct"] == 1
        assert breakdown["mode_shares"]["metro"] == 0.75

    def test_non_complementary_trips_ignored(self):
        net = build_city()
        trips = [_trip(121.01, 31.0, 121.02, 31.0)]
        breakdown = complementary_breakdown(trips, [TripClass(SUBSTITUTIVE)], net)
        assert breakdown["total"] == 0


class TestWriters:
    def test_cell_stats_roundtrip(self, tmp_path):
        grid = build_grid(BBOX, 0.5)
        a = cell_center(grid, *grid.cells[10])
        trips = [_trip(a[0], a[1], a[0], a[1])] * 4
        results = [TripClass(FIRST_MILE), TripClass(SUBSTITUTIVE),
                   TripClass(LAST_MILE), TripClass(INDEPENDENT, "C6")]
        stats = compute_ratios(trips, results, grid, days=2)
        path = tmp_path / "cells.csv"
        write_cell_stats(stats, str(path))
        back = read_cell_stats(str(path))
        assert set(back) == set(stats)
        for cid, cs in stats.items():
            bs = back[cid]
            assert (bs.days, bs.o_total, bs.a_total, bs.fc_total, bs.lc_total,
                    bs.ds_total, bs.as_total) == (cs.days, cs.o_total, cs.a_total,
                                                  cs.fc_total, cs.lc_total,
                                                  cs.ds_total, cs.as_total)
            assert bs.fcr == cs.fcr and bs.asr == cs.asr

    def test_geojson_output(self, tmp_path):
        grid = build_grid(BBOX, 0.5)
        stats = compute_ratios([], [], grid, days=1)
        path = tmp_path / "cells.geojson"
        write_cell_stats_geojson(grid, stats, str(path))
        doc = json.loads(path.read_text())
        assert doc["type"] == "FeatureCollection"
        assert len(doc["features"]) == len(grid.cells)
        first = doc["features"][0]
        assert first["geometry"]["type"] == "Polygon"
        assert len(first["geometry"]["coordinates"][0]) == 7  # closed ring
        assert first["properties"]["fcr"] is None

    def test_flow_and_profile_writers_deterministic(self, tmp_path):
        grid = build_grid(BBOX, 0.5)
        a = cell_center(grid, *grid.cells[5])
        b = cell_center(grid, *grid.cells[25])
        trips = [_trip(a[0], a[1], b[0], b[1])]
        results = [TripClass(FIRST_MILE)]
        flows = od_flows(trips, results, grid, days=1)
        profile = temporal_profile(trips, results)
        p1, p2 = tmp_path / "f1.csv", tmp_path / "f2.csv"
        write_od_flows(flows, str(p1))
        write_od_flows(flows, str(p2))
        assert p1.read_bytes() == p2.read_bytes()
        t1 = tmp_path / "t1.csv"
        write_temporal_profile(profile, str(t1))
        lines = t1.read_text().strip().splitlines()
        assert len(lines) == 25
