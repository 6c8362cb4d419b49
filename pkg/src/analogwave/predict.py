"""Apply retained rules to produce candidate extreme-day forecasts.

A rule fires at issue day c when its n-day window ending at c escapes the
learning envelope strictly; the forecast lands l days later.  Issue days are
swept so that every target day in the validation span is reachable (the
precursor window may reach back into the learning years), and targets past
the panel end are kept but flagged unverifiable.  Forecasts are then screened
by each rule's seasonal window and clustered by month-third sector.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Sequence

import numpy as np

from .calendars import Sector, date_to_index, index_to_date, third_of
from .climatology import AnomalyMatrix
from .mining import ABOVE_MAX, BELOW_MIN, Rule, pair_window_sums


@dataclass(frozen=True)
class Forecast:
    rule_key: str
    issue_day: int
    target_day: int
    direction: str
    side: str
    sector: Sector
    verifiable: bool


@dataclass(frozen=True)
class ForecastCluster:
    sector: Sector
    direction: str
    forecasts: tuple[Forecast, ...]
    rule_keys: tuple[str, ...]


def scan(rules: Sequence[Rule], anoms: AnomalyMatrix,
         validation_range: tuple[int, int]) -> list[Forecast]:
    """Run every rule over the validation span and emit its firings as forecasts.

    For each rule, issue days range from validation start minus the lead to
    validation end, so targets cover the whole validation span plus the
    beyond-panel horizon at the far end.
    """
    val0, val1 = validation_range
    forecasts: list[Forecast] = []
    for rule in rules:
        sums, defined = pair_window_sums(anoms, rule.i1, rule.i2, rule.n)
        c0 = max(val0 - rule.l, 1)
        c1 = min(val1, anoms.n_days)
        if c0 > c1:
            continue
        cs = np.arange(c0, c1 + 1)
        ok = defined[cs]
        vals = sums[cs]
        above = ok & (vals > rule.max_thr)
        below = ok & (vals < rule.min_thr)
        for k in np.nonzero(above | below)[0]:
            c = int(cs[k])
            t = c + rule.l
            forecasts.append(Forecast(
                rule_key=rule.key, issue_day=c, target_day=t,
                direction=rule.direction,
                side=ABOVE_MAX if above[k] else BELOW_MIN,
                sector=third_of(index_to_date(t)),
                verifiable=t <= anoms.n_days))
    return forecasts


def filter_by_season(forecasts: Sequence[Forecast],
                     rules: Sequence[Rule]) -> list[Forecast]:
    """Drop forecasts whose target month falls outside the rule's window.

    Rules carrying no window (possible when excluded rules are opted back in)
    impose no constraint.
    """
    windows = {r.key: r.seasonal_window for r in rules}
    kept = []
    for f in forecasts:
        window = windows.get(f.rule_key)
        if window is None or window.contains(index_to_date(f.target_day).month):
            kept.append(f)
    return kept


def cluster(forecasts: Sequence[Forecast]) -> list[ForecastCluster]:
    """Group forecasts by (target sector, direction), deterministically ordered."""
    groups: dict[tuple[Sector, str], list[Forecast]] = {}
    for f in forecasts:
        groups.setdefault((f.sector, f.direction), []).append(f)
    clusters = []
    for (sector, direction) in sorted(groups, key=lambda k: (k[0], k[1])):
        members = sorted(groups[(sector, direction)],
                         key=lambda f: (f.target_day, f.issue_day, f.rule_key))
        keys = tuple(sorted({f.rule_key for f in members}))
        clusters.append(ForecastCluster(sector=sector, direction=direction,
                                        forecasts=tuple(members), rule_keys=keys))
    return clusters


FORECAST_FIELDS = ["rule_key", "issue_date", "target_date", "direction", "side",
                   "sector_year", "sector_month", "sector_third", "verifiable"]


def write_forecasts_csv(forecasts: Sequence[Forecast], path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(FORECAST_FIELDS)
        for f in forecasts:
            writer.writerow([
                f.rule_key,
                index_to_date(f.issue_day).isoformat(),
                index_to_date(f.target_day).isoformat(),
                f.direction, f.side,
                f.sector.year, f.sector.month, f.sector.third,
                "true" if f.verifiable else "false",
            ])


def read_forecasts_csv(path: str | Path) -> list[Forecast]:
    forecasts = []
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            forecasts.append(Forecast(
                rule_key=row[0],
                issue_day=date_to_index(date.fromisoformat(row[1])),
                target_day=date_to_index(date.fromisoformat(row[2])),
                direction=row[3], side=row[4],
                sector=Sector(int(row[5]), int(row[6]), int(row[7])),
                verifiable=row[8] == "true",
            ))
    return forecasts
