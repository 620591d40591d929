"""Six-condition trip classifier and station-label matching.

Each trip is tested, in order, against:

* C1 service: the transit alternative's routes run at the trip's start time;
* C2 label match: the drop-off label naming a station makes the trip a
  first-mile complement, a pick-up label match makes it a last-mile complement
  (a match on both ends counts as first-mile and raises ``both_ends_station``);
* C3 walk access: both access and egress walks within the threshold;
* C4 time: for short trips (duration <= gate) transit may lose at most the gate
  in minutes, otherwise it must stay within ``time_ratio`` times the trip time;
* C5 at most ``max_transfers`` transfers;
* C6 transit fare at most ``cost_ratio`` of the trip's cost.

A trip surviving C3-C6 is substitutive; failing any of them makes it
independent, with the first failing condition recorded. Checks short-circuit:
the trace only contains conditions that were actually evaluated. All threshold
comparisons are inclusive.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple, Optional, Sequence

from .geo import great_circle_m
from .ingest import CANONICAL_COLUMNS, DEFAULT_EPOCH, TripRecord, format_time, parse_time
from .ptnet import PtAlternative, TransitNetwork, is_in_service

FIRST_MILE = "first_mile_complementary"
LAST_MILE = "last_mile_complementary"
SUBSTITUTIVE = "substitutive"
INDEPENDENT = "independent"
ALL_LABELS = (FIRST_MILE, LAST_MILE, SUBSTITUTIVE, INDEPENDENT)

CONDITIONS = ("C1", "C2", "C3", "C4", "C5", "C6")

# Trailing tokens treated as station designators rather than name words.
DEFAULT_SUFFIX_WORDS = ("exit", "gate", "entrance")
DEFAULT_SUFFIX_PHRASES = ("bus stop",)

_CODE_RE = re.compile(r"[a-z]|\d{1,3}|[a-z]\d{1,2}|\d{1,2}[a-z]")
_APOSTROPHE_RE = re.compile(r"['’]")
_PUNCT_RE = re.compile(r"[^\w\s]+", re.UNICODE)
_SPACE_RE = re.compile(r"\s+")


class NormalizedLabel(NamedTuple):
    key: str
    suffix: str


def normalize_label(
    raw: str,
    suffix_words: Sequence[str] = DEFAULT_SUFFIX_WORDS,
    suffix_phrases: Sequence[str] = DEFAULT_SUFFIX_PHRASES,
) -> NormalizedLabel:
    """Lowercase, strip punctuation, collapse whitespace, peel station suffixes.

    Suffix designators (exit/gate codes, trailing phrases like "bus stop") move
    into the ``suffix`` field so the ``key`` is comparable across spellings:
    "Anting Station Exit A" keys as "anting station" with suffix "exit a".
    The key never loses its last token.
    """
    text = _PUNCT_RE.sub(" ", _APOSTROPHE_RE.sub("", raw.lower()))
    tokens = _SPACE_RE.sub(" ", text).strip().split()
    phrases = sorted((p.lower().split() for p in suffix_phrases), key=len, reverse=True)
    words = {w.lower() for w in suffix_words}
    suffix_parts: list[str] = []
    changed = True
    while changed and len(tokens) > 1:
        changed = False
        for phrase in phrases:
            if len(tokens) > len(phrase) and tokens[-len(phrase):] == phrase:
                suffix_parts.insert(0, " ".join(phrase))
                tokens = tokens[:-len(phrase)]
                changed = True
                break
        if changed:
            continue
        if len(tokens) > 2 and tokens[-2] in words and _CODE_RE.fullmatch(tokens[-1]):
            suffix_parts.insert(0, f"{tokens[-2]} {tokens[-1]}")
            tokens = tokens[:-2]
            changed = True
        elif tokens[-1] in words:
            suffix_parts.insert(0, tokens[-1])
            tokens = tokens[:-1]
            changed = True
        elif _CODE_RE.fullmatch(tokens[-1]) and any(c.isdigit() for c in tokens[-1]):
            suffix_parts.insert(0, tokens[-1])
            tokens = tokens[:-1]
            changed = True
    return NormalizedLabel(" ".join(tokens), " ".join(suffix_parts))


def match_label(raw: str, lexicon: dict[str, tuple[str, ...]]) -> tuple[str, ...]:
    """Exact lookup of a raw label's normalized key; no fuzzy matching."""
    return lexicon.get(normalize_label(raw).key, ())


@dataclass(frozen=True)
class ClassifierConfig:
    walk_threshold_m: float = 400.0
    time_gate_min: float = 15.0
    time_ratio: float = 2.0
    max_transfers: int = 2
    cost_ratio: float = 0.5

    def __post_init__(self):
        if self.walk_threshold_m <= 0 or self.time_gate_min <= 0 or self.time_ratio <= 0:
            raise ValueError("classifier thresholds must be positive")
        if self.max_transfers < 0:
            raise ValueError("max_transfers must be >= 0")
        if not (0.0 < self.cost_ratio <= 1.0):
            raise ValueError("cost_ratio must be in (0, 1]")


@dataclass
class TripClass:
    label: str
    failed_condition: Optional[str] = None
    matched_station: Optional[str] = None
    both_ends_station: bool = False
    trace: dict[str, bool] = field(default_factory=dict)


def _nearest_station(net: TransitNetwork, candidates: Sequence[str], lon: float, lat: float) -> str:
    best = min(candidates, key=lambda sid: (great_circle_m(lon, lat, net.stations[sid].lon,
                                                           net.stations[sid].lat), sid))
    return best


def classify_trip(
    trip: TripRecord,
    alt: Optional[PtAlternative],
    net: TransitNetwork,
    lexicon: dict[str, tuple[str, ...]],
    cfg: ClassifierConfig = ClassifierConfig(),
) -> TripClass:
    if alt is None:
        raise ValueError("alternative not prepared for trip; run the planner first")
    trace: dict[str, bool] = {}

    c1 = is_in_service(net, alt, (trip.pickup_min, trip.dropoff_min))
    trace["C1"] = c1
    if not c1:
        return TripClass(INDEPENDENT, "C1", trace=trace)

    dest_hits = match_label(trip.dropoff_label, lexicon)
    orig_hits = match_label(trip.pickup_label, lexicon)
    trace["C2"] = bool(dest_hits or orig_hits)
    if dest_hits:
        matched = _nearest_station(net, dest_hits, trip.dlon, trip.dlat)
        return TripClass(FIRST_MILE, matched_station=matched,
                         both_ends_station=bool(orig_hits), trace=trace)
    if orig_hits:
        matched = _nearest_station(net, orig_hits, trip.olon, trip.olat)
        return TripClass(LAST_MILE, matched_station=matched, trace=trace)

    c3 = bool(alt.available
              and alt.access_walk_m <= cfg.walk_threshold_m
              and alt.egress_walk_m <= cfg.walk_threshold_m)
    trace["C3"] = c3
    if not c3:
        return TripClass(INDEPENDENT, "C3", trace=trace)

    t_tnc = trip.duration_min
    if t_tnc <= cfg.time_gate_min:
        c4 = (alt.t_pt_min - t_tnc) <= cfg.time_gate_min
    else:
        c4 = alt.t_pt_min <= cfg.time_ratio * t_tnc
    trace["C4"] = c4
    if not c4:
        return TripClass(INDEPENDENT, "C4", trace=trace)

    c5 = alt.transfers <= cfg.max_transfers
    trace["C5"] = c5
    if not c5:
        return TripClass(INDEPENDENT, "C5", trace=trace)

    c6 = alt.fare_rmb <= cfg.cost_ratio * trip.cost
    trace["C6"] = c6
    if not c6:
        return TripClass(INDEPENDENT, "C6", trace=trace)
    return TripClass(SUBSTITUTIVE, trace=trace)


def classify_all(
    trips: Sequence[TripRecord],
    planner,
    net: TransitNetwork,
    lexicon: dict[str, tuple[str, ...]],
    cfg: ClassifierConfig = ClassifierConfig(),
    jobs: int = 1,
) -> tuple[list[TripClass], dict]:
    """Classify every trip; returns per-trip results (input order) and a summary.

    ``planner`` is either an object with a ``plan(olon, olat, dlon, dlat,
    depart_min)`` method or an equivalent callable.
    """
    plan: Callable = planner.plan if hasattr(planner, "plan") else planner

    def one(trip: TripRecord) -> TripClass:
        alt = plan(trip.olon, trip.olat, trip.dlon, trip.dlat, trip.pickup_min)
        return classify_trip(trip, alt, net, lexicon, cfg)

    if jobs > 1 and len(trips) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, trips))
    else:
        results = [one(t) for t in trips]
    return results, summarize(results)


def summarize(results: Sequence[TripClass]) -> dict:
    counts = {label: 0 for label in ALL_LABELS}
    for r in results:
        counts[r.label] += 1
    total = len(results)
    shares = {label: (counts[label] / total if total else 0.0) for label in ALL_LABELS}
    return {"total": total, "counts": counts, "shares": shares}


CLASSIFIED_EXTRA_COLUMNS = ("label", "failed_condition", "matched_station", "both_ends_station")


def write_classified(
    trips: Sequence[TripRecord],
    results: Sequence[TripClass],
    path: str,
    epoch=DEFAULT_EPOCH,
) -> None:
    if len(trips) != len(results):
        raise ValueError("trips and results must align")
    # request_time is schema-optional: carried only when every trip has one,
    # mirroring the canonical trip writer
    with_request = bool(trips) and all(t.request_min is not None for t in trips)
    request_col = ("request_time",) if with_request else ()
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(CANONICAL_COLUMNS + request_col + CLASSIFIED_EXTRA_COLUMNS)
        for t, r in zip(trips, results):
            row = [
                t.plate_id, repr(t.olon), repr(t.olat), t.pickup_label,
                format_time(t.pickup_min, epoch), repr(t.dlon), repr(t.dlat),
                t.dropoff_label, format_time(t.dropoff_min, epoch),
                repr(t.distance_km), repr(t.cost),
            ]
            if with_request:
                row.append(format_time(t.request_min, epoch))
            row.extend([
                r.label, r.failed_condition or "", r.matched_station or "",
                "true" if r.both_ends_station else "false",
            ])
            writer.writerow(row)


def read_classified(path: str, epoch=DEFAULT_EPOCH) -> tuple[list[TripRecord], list[TripClass]]:
    """Reload a classified-trip CSV. Traces are not persisted, so they come back empty."""
    trips: list[TripRecord] = []
    results: list[TripClass] = []
    with open(path, "r", encoding="utf-8", newline="") as handle:
        for row in csv.DictReader(handle):
            request = row.get("request_time")
            trips.append(TripRecord(
                plate_id=row["plate_id"],
                olon=float(row["olon"]), olat=float(row["olat"]),
                pickup_label=row["pickup_label"],
                pickup_min=parse_time(row["pickup_time"], epoch),
                dlon=float(row["dlon"]), dlat=float(row["dlat"]),
                dropoff_label=row["dropoff_label"],
                dropoff_min=parse_time(row["dropoff_time"], epoch),
                distance_km=float(row["distance_km"]),
                cost=float(row["cost"]),
                request_min=parse_time(request, epoch) if request else None,
            ))
            label = row["label"]
            if label not in ALL_LABELS:
                raise ValueError(f"unknown trip label {label!r} in {path}")
            results.append(TripClass(
                label=label,
                failed_condition=row["failed_condition"] or None,
                matched_station=row["matched_station"] or None,
                both_ends_station=row["both_ends_station"] == "true",
            ))
    return trips, results


def write_summary(summary: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(summary, handle, indent=2)
        handle.write("\n")


__all__ = [
    "ALL_LABELS",
    "CLASSIFIED_EXTRA_COLUMNS",
    "CONDITIONS",
    "ClassifierConfig",
    "DEFAULT_SUFFIX_PHRASES",
    "DEFAULT_SUFFIX_WORDS",
    "FIRST_MILE",
    "INDEPENDENT",
    "LAST_MILE",
    "NormalizedLabel",
    "SUBSTITUTIVE",
    "TripClass",
    "classify_all",
    "classify_trip",
    "match_label",
    "normalize_label",
    "read_classified",
    "summarize",
    "write_classified",
    "write_summary",
]
