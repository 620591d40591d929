"""Pipeline orchestration: one command per stage, one configuration tree.

Configuration is a JSON tree merged from four layers (later wins): built-in
defaults, the ``--config`` file, ``RIDELINK_*`` environment variables, and
command-line flags. Environment keys use ``__`` as the path separator, so
``RIDELINK_CLASSIFIER__WALK_THRESHOLD_M=500`` sets
``classifier.walk_threshold_m``; values parse as JSON with a plain-string
fallback. ``--set a.b=value`` does the same from the command line.

Stages communicate through files in the workspace directory. Each command
reads the artifacts of earlier stages by their well-known names and fails
with a machine-readable error naming the producing subcommand when one is
missing. Success prints a one-line JSON summary to stdout; failures print a
JSON error to stderr and exit 2 (input), 3 (config), or 4 (internal).
"""

from __future__ import annotations

import argparse
import copy
import csv
import dataclasses
import datetime as _dt
import hashlib
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import boost, explain, features, hexgrid, sensitivity, svgchart, synth
from .classify import (
    ALL_LABELS,
    ClassifierConfig,
    classify_all,
    read_classified,
    write_classified,
    write_summary,
)
from .errors import CliError, ConfigError, InputError, MissingArtifactError
from .ingest import (
    SchemaError,
    iqr_filter,
    parse_trips,
    write_iqr_reports,
    write_rejections,
    write_trips,
)
from .ptnet import (
    CachedPlanner,
    NetworkPlanner,
    load_network,
    station_lexicon,
)

DEFAULTS: dict = {
    "workspace": "runs/default",
    "days": 7,
    "bbox": None,
    "epoch": "2022-09-01",
    "target": "FCR",
    "jobs": 1,
    "paths": {
        "trips": None, "stations": None, "routes": None, "fares": None,
        "poi": None, "population": None, "roads": None, "districts": None,
    },
    "classifier": {
        "walk_threshold_m": 400.0,
        "time_gate_min": 15.0,
        "time_ratio": 2.0,
        "max_transfers": 2,
        "cost_ratio": 0.5,
    },
    "planner": {
        "search_radius_m": 800.0,
        "transfer_penalty_min": 5.0,
    },
    "ingest": {"iqr_k": 3.0, "per_day": False, "columns": None},
    "grid": {"side_km": 0.5},
    "features": {"vif_threshold": 10.0},
    "train": {"trials": 12, "folds": 5, "space": {}},
    "explain": {"mode": "tree", "background_size": 100, "seed": 0},
    "elasticity": {
        "parameters": ["walk_threshold_m", "time_gate_min"],
        "values": {
            "walk_threshold_m": [300.0, 400.0, 500.0, 600.0, 700.0, 800.0],
            "time_gate_min": [10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0],
            "max_transfers": [1, 2, 3],
            "cost_ratio": [0.3, 0.5, 0.7],
        },
    },
    "synth": {},
}

ENV_PREFIX = "RIDELINK_"

# workspace artifact name -> (producing subcommand, file name)
ARTIFACTS = {
    "trips_clean": ("ingest", "trips_clean.csv"),
    "rejections": ("ingest", "rejections.csv"),
    "iqr_report": ("ingest", "iqr_report.csv"),
    "alternatives": ("plan", "alternatives.jsonl"),
    "classified": ("classify", "classified.csv"),
    "summary": ("classify", "summary.json"),
    "cells": ("gridify", "cells.csv"),
    "cells_geojson": ("gridify", "cells.geojson"),
    "od_flows": ("gridify", "od_flows.csv"),
    "temporal": ("gridify", "temporal.csv"),
    "trip_stats": ("gridify", "trip_stats.json"),
    "breakdown": ("gridify", "breakdown.json"),
    "features": ("features", "features.csv"),
    "features_schema": ("features", "features_schema.json"),
    "vif_report": ("features", "vif_report.json"),
    "model": ("train", "model.json"),
    "trials": ("train", "trials.csv"),
    "cv_report": ("train", "cv_report.json"),
    "train_summary": ("train", "train_summary.json"),
    "shap": ("explain", "explain/shap.csv"),
    "importance": ("explain", "explain/importance.csv"),
    "pdp": ("explain", "explain/pdp.csv"),
    "beeswarm_svg": ("explain", "explain/beeswarm.svg"),
    "importance_svg": ("explain", "explain/importance.svg"),
    "pdp_svg": ("explain", "explain/pdp.svg"),
    "elasticity": ("elasticity", "elasticity.csv"),
}

# city input files; produced by synth unless the config points elsewhere
CITY_FILES = {
    "trips": "trips.csv",
    "stations": "stations.csv",
    "routes": "routes.csv",
    "fares": "fares.json",
    "poi": "poi.csv",
    "population": "population.csv",
    "roads": "roads.geojson",
    "scenario": "scenario.json",
}


# ---------------------------------------------------------------------------
# configuration


def _deep_merge(base: dict, override: dict) -> dict:
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _deep_merge(base[key], value)
        else:
            base[key] = value
    return base


def _parse_scalar(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def env_overrides(environ=None) -> dict:
    environ = os.environ if environ is None else environ
    out: dict = {}
    for key in sorted(environ):
        if not key.startswith(ENV_PREFIX):
            continue
        path = key[len(ENV_PREFIX):].lower().split("__")
        node = out
        for part in path[:-1]:
            node = node.setdefault(part, {})
        node[path[-1]] = _parse_scalar(environ[key])
    return out


def _set_override(data: dict, assignment: str) -> None:
    if "=" not in assignment:
        raise ConfigError(f"--set expects dotted.path=value, got {assignment!r}")
    dotted, raw = assignment.split("=", 1)
    parts = [p for p in dotted.strip().split(".") if p]
    if not parts:
        raise ConfigError(f"--set has an empty key in {assignment!r}")
    node = data
    for part in parts[:-1]:
        nxt = node.setdefault(part, {})
        if not isinstance(nxt, dict):
            raise ConfigError(f"--set path {dotted!r} crosses non-tree key {part!r}")
        node = nxt
    node[parts[-1]] = _parse_scalar(raw)


class RunConfig:
    """Merged configuration tree with typed, validated accessors."""

    def __init__(self, data: dict):
        self.data = data

    @property
    def workspace(self) -> Path:
        return Path(self.data["workspace"])

    @property
    def days(self) -> int:
        days = self.data["days"]
        if not isinstance(days, int) or days < 1:
            raise ConfigError(f"days must be a positive integer, got {days!r}")
        return days

    @property
    def jobs(self) -> int:
        jobs = self.data["jobs"]
        if not isinstance(jobs, int) or jobs < 1:
            raise ConfigError(f"jobs must be a positive integer, got {jobs!r}")
        return jobs

    @property
    def epoch(self) -> _dt.date:
        try:
            return _dt.date.fromisoformat(str(self.data["epoch"]))
        except ValueError as exc:
            raise ConfigError(f"epoch is not an ISO date: {exc}") from None

    @property
    def target(self) -> str:
        target = str(self.data["target"]).upper()
        if target not in ("FCR", "LCR", "DSR", "ASR"):
            raise ConfigError(f"target must be one of FCR/LCR/DSR/ASR, "
                              f"got {self.data['target']!r}")
        return target

    def classifier(self) -> ClassifierConfig:
        try:
            return ClassifierConfig(**self.data["classifier"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid classifier thresholds: {exc}") from None

    def planner(self, net) -> NetworkPlanner:
        try:
            return NetworkPlanner(net, **self.data["planner"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid planner settings: {exc}") from None

    def bbox(self) -> tuple[float, float, float, float]:
        box = self.data["bbox"]
        if box is None:
            manifest = self.workspace / "city" / CITY_FILES["scenario"]
            if manifest.exists():
                box = json.loads(manifest.read_text())["bbox"]
        if box is None:
            raise ConfigError(
                "bbox is not configured and no scenario manifest exists; set "
                "bbox in the config or generate a city with 'synth'")
        try:
            lon_min, lat_min, lon_max, lat_max = (float(v) for v in box)
        except (TypeError, ValueError):
            raise ConfigError(f"bbox must be four numbers, got {box!r}") from None
        if not (lon_min < lon_max and lat_min < lat_max):
            raise ConfigError(f"bbox is degenerate: {box!r}")
        return (lon_min, lat_min, lon_max, lat_max)

    # artifact and input paths ------------------------------------------

    def artifact(self, name: str) -> Path:
        _, filename = ARTIFACTS[name]
        return self.workspace / filename

    def need_artifact(self, name: str) -> Path:
        producer, filename = ARTIFACTS[name]
        path = self.workspace / filename
        if not path.exists():
            raise MissingArtifactError(filename, producer)
        return path

    def input_file(self, key: str, required: bool = True) -> Optional[Path]:
        explicit = self.data["paths"].get(key)
        if explicit:
            path = Path(explicit)
            if not path.exists():
                raise InputError(f"input file not found: {path} (paths.{key})")
            return path
        path = self.workspace / "city" / CITY_FILES[key]
        if not path.exists():
            if required:
                raise MissingArtifactError(f"city/{CITY_FILES[key]}", "synth")
            return None
        return path


def load_config(args: argparse.Namespace) -> RunConfig:
    data = copy.deepcopy(DEFAULTS)
    config_path = getattr(args, "config", None)
    if config_path:
        path = Path(config_path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            loaded = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from None
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        _deep_merge(data, loaded)
    _deep_merge(data, env_overrides())
    for assignment in getattr(args, "set", None) or []:
        _set_override(data, assignment)
    for dest, path in FLAG_PATHS.items():
        value = getattr(args, dest, None)
        if value is None:
            continue
        node = data
        for part in path[:-1]:
            node = node.setdefault(part, {})
        node[path[-1]] = value
    return RunConfig(data)


FLAG_PATHS = {
    "workspace": ["workspace"],
    "days": ["days"],
    "jobs": ["jobs"],
    "bbox_flag": ["bbox"],
    "side_km": ["grid", "side_km"],
    "target": ["target"],
    "trials": ["train", "trials"],
    "folds": ["train", "folds"],
    "mode": ["explain", "mode"],
    "iqr_k": ["ingest", "iqr_k"],
}


def _parse_bbox_flag(text: str) -> list[float]:
    parts = text.split(",")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError(
            "bbox must be lon_min,lat_min,lon_max,lat_max")
    return [float(p) for p in parts]


# ---------------------------------------------------------------------------
# shared stage helpers


def _echo(doc: dict) -> None:
    print(json.dumps(doc, sort_keys=True))


def _load_city_network(cfg: RunConfig):
    stations = cfg.input_file("stations")
    routes = cfg.input_file("routes")
    fares = cfg.input_file("fares", required=False)
    try:
        return load_network(str(stations), str(routes),
                            str(fares) if fares else None)
    except (ValueError, KeyError) as exc:
        raise InputError(f"transit network failed to load: {exc}") from None


def _parse_trips_file(path, bbox, epoch, columns=None):
    """Parse a canonical trip CSV, opting in to the optional waiting-time
    column whenever the header carries one."""
    mapping = dict(columns or {})
    if "request_time" not in mapping:
        with open(path, "r", encoding="utf-8", newline="") as handle:
            header = next(csv.reader(handle), [])
        if "request_time" in [h.strip() for h in header]:
            mapping["request_time"] = "request_time"
    return parse_trips(str(path), bbox, epoch, mapping or None)


def _read_clean_trips(cfg: RunConfig):
    path = cfg.need_artifact("trips_clean")
    trips, rejections = _parse_trips_file(path, cfg.bbox(), cfg.epoch)
    if rejections:
        raise InputError(f"cleaned trips artifact has {len(rejections)} "
                         f"unreadable rows; re-run 'ingest'")
    return trips

def _read_classified(cfg: RunConfig):
    path = cfg.need_artifact("classified")
    try:
        return read_classified(str(path), cfg.epoch)
    except (KeyError, ValueError) as exc:
        raise InputError(f"classified artifact is corrupt: {exc}") from None


def _grid(cfg: RunConfig):
    try:
        return hexgrid.build_grid(cfg.bbox(), float(cfg.data["grid"]["side_km"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid grid settings: {exc}") from None


# ---------------------------------------------------------------------------
# subcommands


def cmd_synth(cfg: RunConfig, args) -> None:
    overrides = dict(cfg.data["synth"])
    if args.seed is not None:
        overrides["seed"] = args.seed
    try:
        spec = synth.ScenarioSpec(**overrides)
    except TypeError as exc:
        raise ConfigError(f"unknown synth option: {exc}") from None
    try:
        spec.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    city_dir = cfg.workspace / "city"
    try:
        paths = synth.generate(spec, city_dir)
    except RuntimeError as exc:
        raise InputError(str(exc)) from None
    _echo({"command": "synth", "city": str(city_dir),
           "trips": spec.total_trips(), "files": sorted(paths)})


def cmd_ingest(cfg: RunConfig, args) -> None:
    trips_path = cfg.input_file("trips")
    try:
        trips, rejections = _parse_trips_file(
            trips_path, cfg.bbox(), cfg.epoch,
            cfg.data["ingest"].get("columns"))
    except SchemaError as exc:
        raise InputError(f"trip schema error: {exc}") from None
    try:
        kept, reports = iqr_filter(trips, float(cfg.data["ingest"]["iqr_k"]),
                                   bool(cfg.data["ingest"]["per_day"]))
    except ValueError as exc:
        raise InputError(str(exc)) from None
    cfg.workspace.mkdir(parents=True, exist_ok=True)
    write_trips(kept, str(cfg.artifact("trips_clean")), cfg.epoch)
    write_rejections(rejections, str(cfg.artifact("rejections")))
    write_iqr_reports(reports, str(cfg.artifact("iqr_report")))
    _echo({"command": "ingest", "parsed": len(trips),
           "rejected": len(rejections), "kept": len(kept),
           "dropped_by_iqr": len(trips) - len(kept)})


def cmd_plan(cfg: RunConfig, args) -> None:
    trips = _read_clean_trips(cfg)
    net = _load_city_network(cfg)
    cache = CachedPlanner(cfg.planner(net))
    for trip in trips:
        cache.plan(trip.olon, trip.olat, trip.dlon, trip.dlat, trip.pickup_min)
    cache.save(str(cfg.artifact("alternatives")))
    _echo({"command": "plan", "trips": len(trips), "cache_entries": len(cache)})


def cmd_classify(cfg: RunConfig, args) -> None:
    trips = _read_clean_trips(cfg)
    net = _load_city_network(cfg)
    cache = CachedPlanner.load(str(cfg.need_artifact("alternatives")))
    lexicon = station_lexicon(net)
    try:
        results, summary = classify_all(trips, cache, net, lexicon,
                                        cfg.classifier(), jobs=cfg.jobs)
    except KeyError as exc:
        raise InputError(f"alternatives cache does not cover the trip set "
                         f"({exc}); re-run 'plan'") from None
    write_classified(trips, results, str(cfg.artifact("classified")), cfg.epoch)
    write_summary(summary, str(cfg.artifact("summary")))
    _echo({"command": "classify", "trips": len(trips),
           "shares": summary["shares"]})


def cmd_gridify(cfg: RunConfig, args) -> None:
    trips, results = _read_classified(cfg)
    net = _load_city_network(cfg)
    grid = _grid(cfg)
    days = cfg.days
    stats = hexgrid.compute_ratios(trips, results, grid, days)
    districts = None
    districts_path = cfg.data["paths"].get("districts")
    if districts_path:
        districts = hexgrid.load_districts(str(cfg.input_file("districts")))
    flows = hexgrid.od_flows(trips, results, grid, days, districts=districts)
    profile = hexgrid.temporal_profile(trips, results)
    stats_by_class = hexgrid.trip_stats(trips, results)
    breakdown = hexgrid.complementary_breakdown(trips, results, net)
    hexgrid.write_cell_stats(stats, str(cfg.artifact("cells")))
    hexgrid.write_cell_stats_geojson(grid, stats, str(cfg.artifact("cells_geojson")))
    hexgrid.write_od_flows(flows, str(cfg.artifact("od_flows")))
    hexgrid.write_temporal_profile(profile, str(cfg.artifact("temporal")))
    hexgrid.write_trip_stats(stats_by_class, str(cfg.artifact("trip_stats")))
    hexgrid.write_breakdown(breakdown, str(cfg.artifact("breakdown")))
    _echo({"command": "gridify", "cells": len(stats), "flows": len(flows),
           "trips": len(trips)})


def cmd_features(cfg: RunConfig, args) -> None:
    trips, results = _read_classified(cfg)
    net = _load_city_network(cfg)
    grid = _grid(cfg)
    stats = hexgrid.read_cell_stats(str(cfg.need_artifact("cells")))
    expected = {hexgrid.cell_id(q, r) for q, r in grid.cells}
    if set(stats) != expected:
        raise InputError("grid settings do not match the cells artifact; "
                         "re-run 'gridify' with the current configuration")
    poi_path = cfg.input_file("poi", required=False)
    pop_path = cfg.input_file("population", required=False)
    roads_path = cfg.input_file("roads", required=False)
    pois = features.load_points(str(poi_path)) if poi_path else []
    population = (features.load_points(str(pop_path), value_column="population")
                  if pop_path else [])
    roads = features.load_roads(str(roads_path)) if roads_path else None
    matrix = features.assemble_features(grid, stats, net, trips, results,
                                        cfg.days, cfg.target, pois,
                                        population, roads)
    if len(matrix.y) == 0:
        raise InputError(f"no grid cell has a defined {cfg.target}; "
                         f"nothing to model")
    try:
        filtered, report = features.apply_vif(
            matrix, float(cfg.data["features"]["vif_threshold"]))
    except ValueError as exc:
        raise InputError(str(exc)) from None
    features.write_features(filtered, str(cfg.artifact("features")),
                            str(cfg.artifact("features_schema")))
    features.write_vif_report(report, str(cfg.artifact("vif_report")))
    _echo({"command": "features", "target": cfg.target,
           "cells": len(filtered.cell_ids), "columns": list(filtered.names),
           "dropped_collinear": list(report.dropped)})


def cmd_train(cfg: RunConfig, args) -> None:
    matrix = features.read_features(str(cfg.need_artifact("features")))
    if matrix.target != cfg.target:
        raise InputError(
            f"features artifact models {matrix.target} but the configured "
            f"target is {cfg.target}; re-run 'features'")
    folds = int(cfg.data["train"]["folds"])
    minimum = max(4, folds)
    if len(matrix.y) < minimum:
        raise InputError(
            f"population too small to train on: {len(matrix.y)} cell(s) with "
            f"a defined {cfg.target}, need at least {minimum}")
    try:
        space = boost.ParamSpace(**{
            key: tuple(value) if isinstance(value, list) else value
            for key, value in cfg.data["train"]["space"].items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid search space: {exc}") from None
    trials = int(cfg.data["train"]["trials"])
    try:
        best, log = boost.random_search(
            matrix.X, matrix.y, matrix.cell_ids, space, trials=trials,
            seed=args.seed, k=folds, feature_names=matrix.names,
            target=matrix.target, jobs=cfg.jobs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    model = boost.fit(matrix.X, matrix.y, best, matrix.names, matrix.target)
    cv = boost.cross_validate(matrix.X, matrix.y, matrix.cell_ids, best,
                              folds, matrix.names, matrix.target)
    fit_eval = boost.evaluate_model(model, matrix.X, matrix.y)
    boost.save_model(model, str(cfg.artifact("model")))
    boost.write_trial_log(log, str(cfg.artifact("trials")))
    boost.write_cv_report(cv, str(cfg.artifact("cv_report")))
    summary = {
        "target": matrix.target,
        "rows": len(matrix.y),
        "trials": trials,
        "seed": args.seed,
        "best_params": dataclasses.asdict(best),
        "cv_pooled": dataclasses.asdict(cv.pooled),
        "train_fit": dataclasses.asdict(fit_eval),
    }
    with open(cfg.artifact("train_summary"), "w", encoding="utf-8") as handle:
        json.dump(summary, handle, indent=2, sort_keys=True)
        handle.write("\n")
    _echo({"command": "train", "target": matrix.target, "trials": trials,
           "cv_mse": cv.pooled.mse, "cv_r2": cv.pooled.r2})


def cmd_explain(cfg: RunConfig, args) -> None:
    model = boost.load_model(str(cfg.need_artifact("model")))
    matrix = features.read_features(str(cfg.need_artifact("features")))
    if list(model.feature_names) != list(matrix.names):
        raise InputError("features artifact no longer matches the trained "
                         "model; re-run 'features' and 'train' together")
    seed = int(cfg.data["explain"]["seed"])
    background = explain.sample_background(
        matrix.X, int(cfg.data["explain"]["background_size"]), seed)
    mode = str(cfg.data["explain"]["mode"])
    try:
        shap = explain.shap_values(model, matrix.X, background, mode=mode)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    curves = [explain.pdp(model, matrix.X, name) for name in matrix.names]
    out_dir = cfg.workspace / "explain"
    written = explain.export_plots(out_dir, shap, matrix.X, curves, seed=seed)
    _echo({"command": "explain", "mode": shap.mode,
           "samples": len(matrix.y), "background": shap.n_background,
           "files": sorted(str(p) for p in written)})


def cmd_elasticity(cfg: RunConfig, args) -> None:
    trips = _read_clean_trips(cfg)
    net = _load_city_network(cfg)
    planner = cfg.planner(net)
    alts = cfg.artifact("alternatives")
    plan = CachedPlanner.load(str(alts), planner) if alts.exists() else planner
    lexicon = station_lexicon(net)
    classifier = cfg.classifier()
    parameters = args.parameter or list(cfg.data["elasticity"]["parameters"])
    reports = []
    for parameter in parameters:
        values = cfg.data["elasticity"]["values"].get(parameter)
        if not values:
            raise ConfigError(f"no sweep values configured for {parameter!r}")
        try:
            report = sensitivity.elasticity_sweep(
                trips, plan, net, lexicon, classifier, parameter,
                [float(v) for v in values], jobs=cfg.jobs)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        reports.append(report)
    sensitivity.write_elasticity_csv(reports, str(cfg.artifact("elasticity")))
    for report in reports:
        svg_path = cfg.workspace / f"elasticity_{report.parameter}.svg"
        svg_path.write_text(sensitivity.elasticity_svg(report),
                            encoding="utf-8")
    _echo({"command": "elasticity",
           "parameters": [r.parameter for r in reports],
           "baseline_shares": {r.parameter: r.ratios[r.values.index(r.baseline)]
                               for r in reports}})


def cmd_report(cfg: RunConfig, args) -> None:
    summary_path = cfg.need_artifact("summary")
    cells_path = cfg.need_artifact("cells")
    temporal_path = cfg.need_artifact("temporal")
    summary = json.loads(summary_path.read_text())
    stats = hexgrid.read_cell_stats(str(cells_path))

    report_dir = cfg.workspace / "report"
    report_dir.mkdir(parents=True, exist_ok=True)

    # class share bars
    shares = summary["shares"]
    share_svg = svgchart.bar_chart(
        list(ALL_LABELS), [100.0 * shares[label] for label in ALL_LABELS],
        "trip class shares", unit="%")
    (report_dir / "shares.svg").write_text(share_svg, encoding="utf-8")

    # hourly profile small multiples
    with open(temporal_path, newline="") as handle:
        rows = list(csv.DictReader(handle))
    hours = [int(r["hour"]) for r in rows]
    panels = []
    for label, column in (("first mile", "first_mile"),
                          ("last mile", "last_mile"),
                          ("substitutive", "substitutive"),
                          ("independent", "independent")):
        ys = [float(r[column]) for r in rows]
        panels.append((label, [float(h) for h in hours], ys, [True] * len(ys)))
    temporal_svg = svgchart.line_panels(panels, "hourly trips by class")
    (report_dir / "temporal.svg").write_text(temporal_svg, encoding="utf-8")

    defined = {
        "fcr": sum(1 for s in stats.values() if s.fcr is not None),
        "lcr": sum(1 for s in stats.values() if s.lcr is not None),
        "dsr": sum(1 for s in stats.values() if s.dsr is not None),
        "asr": sum(1 for s in stats.values() if s.asr is not None),
    }
    inventory = {}
    for name in sorted(ARTIFACTS):
        path = cfg.artifact(name)
        if not path.exists():
            continue
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        inventory[name] = {
            "path": path.relative_to(cfg.workspace).as_posix(),
            "sha256": digest,
            "bytes": path.stat().st_size,
        }
    doc = {
        "classification": summary,
        "cells": {"total": len(stats), "with_defined_ratio": defined},
        "artifacts": inventory,
        "charts": ["report/shares.svg", "report/temporal.svg"],
    }
    with open(report_dir / "report.json", "w", encoding="utf-8") as handle:
        json.dump(doc, handle, indent=2, sort_keys=True)
        handle.write("\n")
    _echo({"command": "report", "artifacts": len(inventory),
           "report": str(report_dir / "report.json")})


COMMANDS = {
    "synth": cmd_synth,
    "ingest": cmd_ingest,
    "plan": cmd_plan,
    "classify": cmd_classify,
    "gridify": cmd_gridify,
    "features": cmd_features,
    "train": cmd_train,
    "explain": cmd_explain,
    "elasticity": cmd_elasticity,
    "report": cmd_report,
}


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"invalid invocation: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--workspace", help="artifact directory")
    common.add_argument("--set", action="append", metavar="PATH=VALUE",
                        help="override one config key, e.g. grid.side_km=0.5")
    common.add_argument("--jobs", type=int, help="worker cap for parallel stages")
    common.add_argument("--days", type=int, help="observation days for ratios")
    common.add_argument("--bbox", dest="bbox_flag", type=_parse_bbox_flag,
                        help="lon_min,lat_min,lon_max,lat_max")

    parser = _Parser(prog="ridelink", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("synth", parents=[common],
                   help="generate a synthetic city with planted ground truth")\
       .add_argument("--seed", type=int, help="scenario seed override")
    p = sub.add_parser("ingest", parents=[common],
                       help="parse raw trips, reject bad rows, filter outliers")
    p.add_argument("--iqr-k", dest="iqr_k", type=float,
                   help="IQR multiplier for the outlier filter")
    sub.add_parser("plan", parents=[common],
                   help="plan transit alternatives for every cleaned trip")
    sub.add_parser("classify", parents=[common],
                   help="label trips against the planned alternatives")
    p = sub.add_parser("gridify", parents=[common],
                       help="aggregate ratios, profiles, flows, and stats")
    p.add_argument("--side-km", dest="side_km", type=float,
                   help="hexagon side length in km")
    p = sub.add_parser("features", parents=[common],
                       help="assemble per-cell features with VIF screening")
    p.add_argument("--target", help="ratio to model: FCR, LCR, DSR, or ASR")
    p = sub.add_parser("train", parents=[common],
                       help="cross-validated hyperparameter search + final fit")
    p.add_argument("--seed", type=int, required=True,
                   help="search seed (required for reproducibility)")
    p.add_argument("--target", help="ratio to model: FCR, LCR, DSR, or ASR")
    p.add_argument("--trials", type=int, help="random search trial count")
    p.add_argument("--folds", type=int, help="spatial cross-validation folds")
    p = sub.add_parser("explain", parents=[common],
                       help="attribution values, importance, dependence curves")
    p.add_argument("--mode", choices=("tree", "exact"),
                   help="attribution algorithm")
    p = sub.add_parser("elasticity", parents=[common],
                       help="threshold sweeps with arc elasticities")
    p.add_argument("--parameter", action="append",
                   help="classifier threshold to sweep (repeatable)")
    sub.add_parser("report", parents=[common],
                   help="bundle charts and a manifest from prior stages")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        cfg = load_config(args)
        COMMANDS[args.command](cfg, args)
        return 0
    except CliError as exc:
        print(json.dumps(exc.payload(), sort_keys=True), file=sys.stderr)
        return exc.exit_code
    except SystemExit:
        raise
    except KeyboardInterrupt:
        raise
    except BaseException as exc:
        payload = {"kind": "internal",
                   "error": f"{type(exc).__name__}: {exc}"}
        print(json.dumps(payload, sort_keys=True), file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
