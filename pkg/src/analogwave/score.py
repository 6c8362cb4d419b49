"""Classify forecast clusters against observations and aggregate accuracy.

Each cluster is checked in its own month-third sector: the day with the most
favorable observed anomaly decides whether the forecast scored an extreme
hit, matched only the anomaly sign, or missed.  Aggregates follow the
method's accounting: recall over observed wave groups, precision and sign
accuracy over verifiable clusters.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .calendars import index_to_date, next_sector
from .climatology import HEAT, Climatology, WaveGroup
from .ingest import RawPanel
from .predict import ForecastCluster

EXTREME_HIT = "extreme_hit"
SAME_SIGN = "same_sign"
MISS = "miss"

#: leniency kicks in only for forecasts at least this far ahead
ADJACENCY_LEAD_DAYS = 90


@dataclass(frozen=True)
class Observation:
    best_day: int
    value: float
    baseline: float
    sd: float
    anomaly: float


@dataclass(frozen=True)
class Outcome:
    cluster: ForecastCluster
    verifiable: bool
    classification: str | None           # None when unverifiable
    observation: Observation | None
    extended: bool = False               # adjacent sector included in the check


@dataclass(frozen=True)
class ScoreReport:
    recall_waves: float | None
    precision_clusters: float | None
    sign_accuracy: float | None
    counts: dict


def _cluster_days(cluster: ForecastCluster, extended: bool) -> list[int]:
    days = cluster.sector.day_indices()
    if extended:
        days += next_sector(cluster.sector).day_indices()
    return days


def observe(cluster: ForecastCluster, panel: RawPanel, clim: Climatology,
            target_series: int, adjacent_tolerance: bool = False,
            ) -> tuple[Observation | None, bool]:
    """Best observed day for a cluster: max anomaly for heat, min for cold.

    Ties break to the earliest day.  With adjacent-sector tolerance on, a
    cluster holding any forecast with lead over 90 days also searches the
    immediately following sector.  Returns (observation, extended); the
    observation is None when no sector day is usable.
    """
    extended = adjacent_tolerance and any(
        f.target_day - f.issue_day > ADJACENCY_LEAD_DAYS for f in cluster.forecasts)
    row = panel.row_of(target_series)
    best: Observation | None = None
    for j in _cluster_days(cluster, extended):
        if j < 1 or j > panel.n_days or panel.missing[row, j - 1]:
            continue
        d = index_to_date(j)
        baseline, sd, count = clim.stats(target_series, d.month, d.day)
        if count < 2:
            continue
        value = float(panel.values[row, j - 1])
        anomaly = value - baseline
        if best is None or (anomaly > best.anomaly if cluster.direction == HEAT
                            else anomaly < best.anomaly):
            best = Observation(best_day=j, value=value, baseline=baseline,
                               sd=sd, anomaly=anomaly)
    return best, extended


def classify(observation: Observation, direction: str,
             multiplier: float = 2.0) -> str:
    """Extreme hit, same-sign, or miss for one verified observation."""
    sign_ok = observation.anomaly > 0 if direction == HEAT else observation.anomaly < 0
    if sign_ok and abs(observation.anomaly) > multiplier * observation.sd:
        return EXTREME_HIT
    if sign_ok:
        return SAME_SIGN
    return MISS


def score_clusters(clusters: Sequence[ForecastCluster], panel: RawPanel,
                   clim: Climatology, target_series: int,
                   multiplier: float = 2.0,
                   adjacent_tolerance: bool = False) -> list[Outcome]:
    """Observe and classify every cluster; unverifiable ones are kept, unclassified."""
    outcomes = []
    for c in clusters:
        obs, extended = observe(c, panel, clim, target_series, adjacent_tolerance)
        if obs is None:
            outcomes.append(Outcome(c, False, None, None, extended))
        else:
            outcomes.append(Outcome(c, True, classify(obs, c.direction, multiplier),
                                    obs, extended))
    return outcomes


def report(outcomes: Sequence[Outcome],
           wave_groups: Sequence[WaveGroup]) -> ScoreReport:
    """Aggregate accuracy: wave recall, cluster precision, sign accuracy.

    A wave group counts as hit when any extreme-hit cluster of its direction
    touches its days; each group counts once no matter how many clusters
    land on it.  Fractions are None when their denominator is empty.
    """
    verifiable = [o for o in outcomes if o.verifiable]
    n_hit = sum(1 for o in verifiable if o.classification == EXTREME_HIT)
    n_same = sum(1 for o in verifiable if o.classification == SAME_SIGN)
    n_miss = sum(1 for o in verifiable if o.classification == MISS)

    waves_hit = 0
    for g in wave_groups:
        member = set(g.member_days)
        for o in verifiable:
            if o.classification != EXTREME_HIT or o.cluster.direction != g.direction:
                continue
            if member.intersection(_cluster_days(o.cluster, o.extended)):
                waves_hit += 1
                break

    recall = waves_hit / len(wave_groups) if wave_groups else None
    precision = n_hit / len(verifiable) if verifiable else None
    sign_acc = (n_hit + n_same) / len(verifiable) if verifiable else None
    counts = {
        "waves_total": len(wave_groups),
        "waves_hit": waves_hit,
        "clusters_total": len(outcomes),
        "clusters_verifiable": len(verifiable),
        "extreme_hit": n_hit,
        "same_sign": n_same,
        "miss": n_miss,
        "unverifiable": len(outcomes) - len(verifiable),
    }
    return ScoreReport(recall_waves=recall, precision_clusters=precision,
                       sign_accuracy=sign_acc, counts=counts)


def percent(fraction: float | None) -> str:
    """One-decimal percentage rendering; empty for absent fractions."""
    return "" if fraction is None else f"{100.0 * fraction:.1f}"


OUTCOME_FIELDS = ["sector_year", "sector_month", "sector_third", "direction",
                  "classification", "verifiable", "extended", "best_date",
                  "observed_value", "baseline", "sd", "observed_anomaly",
                  "n_forecasts", "rules"]


def write_outcomes_csv(outcomes: Sequence[Outcome], path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(OUTCOME_FIELDS)
        for o in outcomes:
            obs = o.observation
            writer.writerow([
                o.cluster.sector.year, o.cluster.sector.month, o.cluster.sector.third,
                o.cluster.direction,
                o.classification or "unverifiable",
                "true" if o.verifiable else "false",
                "true" if o.extended else "false",
                index_to_date(obs.best_day).isoformat() if obs else "",
                repr(obs.value) if obs else "",
                repr(obs.baseline) if obs else "",
                repr(obs.sd) if obs else "",
                repr(obs.anomaly) if obs else "",
                len(o.cluster.forecasts),
                ";".join(o.cluster.rule_keys),
            ])


def write_summary_json(rep: ScoreReport, path: str | Path) -> None:
    doc = {
        "recall_waves": rep.recall_waves,
        "precision_clusters": rep.precision_clusters,
        "sign_accuracy": rep.sign_accuracy,
        "counts": rep.counts,
        "percent": {
            "recall_waves": percent(rep.recall_waves),
            "precision_clusters": percent(rep.precision_clusters),
            "sign_accuracy": percent(rep.sign_accuracy),
        },
    }
    with Path(path).open("w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
