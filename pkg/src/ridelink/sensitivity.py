"""Threshold elasticity of the substitutive share.

Re-classifies a trip set while sweeping one classifier threshold over a set
of evaluation values, reporting the substitutive share at each value and its
baseline-anchored arc elasticity: the percentage change of the share divided
by the percentage change of the threshold, both measured against the
baseline configuration. Journey planning does not depend on any classifier
threshold, so each trip is planned exactly once and every sweep point reuses
the cached alternatives.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

from . import svgchart
from .classify import SUBSTITUTIVE, ClassifierConfig, classify_trip, summarize
from .ingest import TripRecord
from .ptnet import TransitNetwork

PARAMETERS = ("walk_threshold_m", "time_gate_min", "max_transfers", "cost_ratio")


@dataclass
class ElasticityReport:
    parameter: str
    baseline: float
    values: list[float]                    # evaluation points, caller order
    ratios: list[float]                    # substitutive share per point
    elasticities: list[Optional[float]]    # None at the baseline anchor


def arc_elasticity(baseline_value: float, baseline_ratio: float,
                   value: float, ratio: float) -> Optional[float]:
    """Baseline-anchored arc elasticity; None at the anchor itself and when
    the baseline share is zero (a percentage change from zero is undefined)."""
    if value == baseline_value:
        return None
    if baseline_ratio == 0.0:
        return None
    return (((ratio - baseline_ratio) / baseline_ratio)
            / ((value - baseline_value) / baseline_value))


def elasticity_sweep(
    trips: Sequence[TripRecord],
    planner,
    net: TransitNetwork,
    lexicon: dict[str, tuple[str, ...]],
    cfg: ClassifierConfig,
    parameter: str,
    values: Sequence[float],
    jobs: int = 1,
) -> ElasticityReport:
    """Substitutive share and elasticity at each threshold value.

    ``values`` must be strictly positive and include the baseline (the
    threshold currently set on ``cfg``); the share reported at the baseline
    is identical to a plain classification run with ``cfg``.
    """
    if parameter not in PARAMETERS:
        raise ValueError(f"unknown sweep parameter {parameter!r}; "
                         f"expected one of {', '.join(PARAMETERS)}")
    points = [float(v) for v in values]
    if not points:
        raise ValueError("values must not be empty")
    for v in points:
        if v <= 0.0:
            raise ValueError(f"sweep values must be positive, got {v}")
    baseline = float(getattr(cfg, parameter))
    if baseline not in points:
        raise ValueError(f"values must include the baseline "
                         f"{parameter}={baseline}")

    plan = planner.plan if hasattr(planner, "plan") else planner
    alts = [plan(t.olon, t.olat, t.dlon, t.dlat, t.pickup_min) for t in trips]

    def share_at(value: float) -> float:
        swept = replace(cfg, **{parameter: value})
        results = [classify_trip(trip, alt, net, lexicon, swept)
                   for trip, alt in zip(trips, alts)]
        return summarize(results)["shares"][SUBSTITUTIVE]

    if jobs > 1 and len(points) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            ratios = list(pool.map(share_at, points))
    else:
        ratios = [share_at(v) for v in points]

    base_ratio = ratios[points.index(baseline)]
    elasticities = [arc_elasticity(baseline, base_ratio, v, r)
                    for v, r in zip(points, ratios)]
    return ElasticityReport(parameter=parameter, baseline=baseline,
                            values=points, ratios=ratios,
                            elasticities=elasticities)


def write_elasticity_csv(reports: Sequence[ElasticityReport], path) -> None:
    """One row per sweep point; the elasticity cell is empty at the anchor."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["parameter", "value", "substitutive_ratio",
                         "arc_elasticity"])
        for report in reports:
            for v, r, e in zip(report.values, report.ratios,
                               report.elasticities):
                writer.writerow([report.parameter, repr(float(v)),
                                 repr(float(r)),
                                 "" if e is None else repr(float(e))])


def elasticity_svg(report: ElasticityReport) -> str:
    """Line chart of the substitutive share over the sweep, low to high."""
    order = sorted(range(len(report.values)), key=lambda i: report.values[i])
    xs = [report.values[i] for i in order]
    ys = [report.ratios[i] for i in order]
    return svgchart.line_chart(
        xs, ys, f"substitutive share vs {report.parameter}",
        x_label=report.parameter, y_label="substitutive share")


__all__ = ["PARAMETERS", "ElasticityReport", "arc_elasticity",
           "elasticity_sweep", "write_elasticity_csv", "elasticity_svg"]
