"""Seasonal concentration screen for mined rules.

A rule survives only if its firings bunch into one period of the year: some
circular window of at most four consecutive calendar months must contain at
least four firings (all firings count, not just the quorum).  Survivors are
annotated with the best window, trimmed of empty edge months, for use as a
prediction-time month filter.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .calendars import index_to_date
from .mining import Rule

WINDOW_MONTHS = 4
MIN_FIRINGS_IN_WINDOW = 4


@dataclass(frozen=True)
class SeasonalWindow:
    """Consecutive calendar months, wrapping December into January."""

    start_month: int
    length_months: int

    def __post_init__(self) -> None:
        if not 1 <= self.start_month <= 12:
            raise ValueError(f"start_month out of range: {self.start_month}")
        if not 1 <= self.length_months <= WINDOW_MONTHS:
            raise ValueError(f"length_months out of range: {self.length_months}")

    def months(self) -> tuple[int, ...]:
        return tuple((self.start_month - 1 + k) % 12 + 1
                     for k in range(self.length_months))

    def contains(self, month: int) -> bool:
        return (month - self.start_month) % 12 < self.length_months


@dataclass(frozen=True)
class FilterDecision:
    rule_key: str
    retained: bool
    firing_months: tuple[int, ...]       # chronological, all firings
    window: SeasonalWindow | None


def firing_months(rule: Rule) -> tuple[int, ...]:
    return tuple(index_to_date(day).month for day, _ in rule.firings)


def concentrated(rule: Rule) -> FilterDecision:
    """Decide retention and pick the seasonal window for one rule.

    The window is the 4-month circular window holding the most firings,
    ties broken by the earliest start month counting from January, then
    trimmed of edge months with no firings.
    """
    months = firing_months(rule)
    counts = [0] * 13                     # 1-based months
    for m in months:
        counts[m] += 1

    best_start, best_count = 1, -1
    for start in range(1, 13):
        c = sum(counts[(start - 1 + k) % 12 + 1] for k in range(WINDOW_MONTHS))
        if c > best_count:
            best_start, best_count = start, c
    if best_count < MIN_FIRINGS_IN_WINDOW:
        return FilterDecision(rule.key, False, months, None)

    window_months = [(best_start - 1 + k) % 12 + 1 for k in range(WINDOW_MONTHS)]
    while counts[window_months[0]] == 0:
        window_months.pop(0)
    while counts[window_months[-1]] == 0:
        window_months.pop()
    window = SeasonalWindow(start_month=window_months[0],
                            length_months=len(window_months))
    return FilterDecision(rule.key, True, months, window)


def filter_rules(rules: Sequence[Rule]) -> tuple[list[Rule], list[FilterDecision]]:
    """Split rules into retained (window-annotated) and an exclusion report.

    Order-preserving: retained rules keep their input order; the report has
    one row per input rule.
    """
    retained: list[Rule] = []
    report: list[FilterDecision] = []
    for rule in rules:
        decision = concentrated(rule)
        report.append(decision)
        if decision.retained:
            retained.append(rule.with_window(decision.window))
    return retained, report


def write_filter_report_csv(report: Sequence[FilterDecision], path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rule_key", "decision", "firing_months",
                         "window_start", "window_len"])
        for d in report:
            writer.writerow([
                d.rule_key,
                "retained" if d.retained else "excluded",
                ";".join(str(m) for m in d.firing_months),
                d.window.start_month if d.window else "",
                d.window.length_months if d.window else "",
            ])
