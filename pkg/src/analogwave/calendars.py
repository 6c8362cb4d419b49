"""Day-index arithmetic, calendar slots, and month-third sectors.

The whole engine addresses time through a 1-based day ordinal whose origin
is 1973-01-01 (index 1).  Indices are open-ended upward, so panels that
extend past 2014 keep working.  Dates are proleptic Gregorian civil dates;
everything serializes as ISO-8601 ``YYYY-MM-DD``.
"""

from __future__ import annotations

import calendar
from dataclasses import dataclass
from datetime import date, timedelta

EPOCH = date(1973, 1, 1)
_EPOCH_ORDINAL = EPOCH.toordinal()

#: number of distinct (month, day) calendar slots; Feb 29 is its own slot
SLOT_COUNT = 366

# Slot ordering follows a leap year, so (2, 29) sits between (2, 28) and (3, 1).
_LEAP_BASE = date(2000, 1, 1).toordinal()


class DateRangeError(ValueError):
    """A civil date falls before the 1973-01-01 epoch."""


def index_to_date(j: int) -> date:
    """Map day index ``j`` (1-based, 1 == 1973-01-01) to its civil date."""
    if j < 1:
        raise DateRangeError(f"day index must be >= 1, got {j}")
    return date.fromordinal(_EPOCH_ORDINAL + j - 1)


def date_to_index(d: date) -> int:
    """Inverse of :func:`index_to_date`; rejects dates before the epoch."""
    j = d.toordinal() - _EPOCH_ORDINAL + 1
    if j < 1:
        raise DateRangeError(f"{d.isoformat()} precedes the 1973-01-01 epoch")
    return j


def slot_of(d: date) -> tuple[int, int]:
    """Calendar slot of a date: its (month, day) pair."""
    return (d.month, d.day)


def slot_index(month: int, day: int) -> int:
    """Dense 0..365 position of a calendar slot, for array-backed lookups."""
    return date(2000, month, day).toordinal() - _LEAP_BASE


def slot_from_index(idx: int) -> tuple[int, int]:
    """Inverse of :func:`slot_index`."""
    if not 0 <= idx < SLOT_COUNT:
        raise ValueError(f"slot index out of range: {idx}")
    d = date.fromordinal(_LEAP_BASE + idx)
    return (d.month, d.day)


@dataclass(frozen=True, order=True)
class Sector:
    """One third of a civil month: days 1-10, 11-20, or 21-end."""

    year: int
    month: int
    third: int

    def __post_init__(self) -> None:
        if self.month < 1 or self.month > 12:
            raise ValueError(f"month out of range: {self.month}")
        if self.third not in (1, 2, 3):
            raise ValueError(f"third must be 1, 2, or 3, got {self.third}")

    def first_date(self) -> date:
        return date(self.year, self.month, 10 * (self.third - 1) + 1)

    def last_date(self) -> date:
        if self.third == 3:
            return date(self.year, self.month,
                        calendar.monthrange(self.year, self.month)[1])
        return date(self.year, self.month, 10 * self.third)

    def dates(self) -> list[date]:
        first, last = self.first_date(), self.last_date()
        return [first + timedelta(days=k) for k in range((last - first).days + 1)]

    def day_indices(self) -> list[int]:
        return [date_to_index(d) for d in self.dates()]

    def label(self) -> str:
        part = {1: "beginning", 2: "middle", 3: "end"}[self.third]
        return f"{part} of {calendar.month_abbr[self.month]} {self.year}"


def third_of(d: date) -> Sector:
    """Sector containing a date (third 3 absorbs days 21 through month end)."""
    third = min((d.day - 1) // 10 + 1, 3)
    return Sector(d.year, d.month, third)


def next_sector(s: Sector) -> Sector:
    """The immediately following sector, rolling over months and years."""
    if s.third < 3:
        return Sector(s.year, s.month, s.third + 1)
    if s.month < 12:
        return Sector(s.year, s.month + 1, 1)
    return Sector(s.year + 1, 1, 1)
