"""Per-calendar-date baselines, anomaly matrices, extremes, and wave groups.

The baseline for a series and calendar slot is the mean of all non-missing
values landing on that slot inside the baseline years; the spread is the
sample standard deviation (n-1 divisor).  Anomalies are raw minus baseline,
exactly.  A day is extreme when |anomaly| strictly exceeds ``multiplier``
standard deviations for its slot.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .calendars import SLOT_COUNT, index_to_date, slot_index
from .ingest import RawPanel

HEAT = "heat"
COLD = "cold"
DIRECTIONS = (HEAT, COLD)


@lru_cache(maxsize=8)
def _day_slots(n_days: int) -> np.ndarray:
    """Dense slot index (0..365) for every day 1..n_days (read-only, cached)."""
    dates = (index_to_date(j) for j in range(1, n_days + 1))
    arr = np.array([slot_index(d.month, d.day) for d in dates], dtype=np.int64)
    arr.setflags(write=False)
    return arr


@lru_cache(maxsize=8)
def _day_years(n_days: int) -> np.ndarray:
    arr = np.array([index_to_date(j).year for j in range(1, n_days + 1)],
                   dtype=np.int64)
    arr.setflags(write=False)
    return arr


@dataclass
class Climatology:
    """Baseline mean and sample SD per (series row, calendar slot).

    Cells with fewer than two contributing samples carry NaN statistics and
    are treated as absent downstream.
    """

    series_ids: list[int]
    baseline: np.ndarray          # (S, 366), NaN where count < 2
    sd: np.ndarray                # (S, 366), NaN where count < 2
    count: np.ndarray             # (S, 366) int
    baseline_years: tuple[int, int]
    _row_index: dict[int, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._row_index = {sid: k for k, sid in enumerate(self.series_ids)}

    def row_of(self, series_id: int) -> int:
        return self._row_index[series_id]

    def stats(self, series_id: int, month: int, day: int) -> tuple[float, float, int]:
        """(baseline, sd, count) for a slot; NaNs when count < 2."""
        r, s = self.row_of(series_id), slot_index(month, day)
        return float(self.baseline[r, s]), float(self.sd[r, s]), int(self.count[r, s])


def compute_climatology(panel: RawPanel,
                        baseline_years: tuple[int, int] = (1973, 2013)) -> Climatology:
    """Mean and sample SD per (series, slot) over the baseline years."""
    slots = _day_slots(panel.n_days)
    years = _day_years(panel.n_days)
    in_years = (years >= baseline_years[0]) & (years <= baseline_years[1])

    n_series = len(panel.metas)
    baseline = np.full((n_series, SLOT_COUNT), np.nan)
    sd = np.full((n_series, SLOT_COUNT), np.nan)
    count = np.zeros((n_series, SLOT_COUNT), dtype=np.int64)

    for s in range(SLOT_COUNT):
        cols = np.nonzero((slots == s) & in_years)[0]
        if cols.size == 0:
            continue
        vals = panel.values[:, cols]
        ok = ~panel.missing[:, cols]
        n = ok.sum(axis=1)
        count[:, s] = n
        has = n >= 2
        if not has.any():
            continue
        total = np.where(ok, vals, 0.0).sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            mean = total / n
        dev = np.where(ok, vals - mean[:, None], 0.0)
        ssq = (dev * dev).sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            var = ssq / (n - 1)
        baseline[has, s] = mean[has]
        sd[has, s] = np.sqrt(var[has])
    return Climatology(series_ids=list(panel.series_ids), baseline=baseline,
                       sd=sd, count=count, baseline_years=tuple(baseline_years))


@dataclass
class AnomalyMatrix:
    """Raw-minus-baseline deviations with prefix sums for O(1) window sums.

    ``prefix[r, j]`` is the sum of anomalies of row r over days 1..j with
    missing treated as zero; ``miss_prefix[r, j]`` counts the missing days in
    1..j.  A window [a..b] is fully observed iff the miss_prefix difference
    is zero, and then its sum is the prefix difference.
    """

    series_ids: list[int]
    anomalies: np.ndarray         # (S, D), NaN where missing
    missing: np.ndarray           # (S, D) bool
    prefix: np.ndarray            # (S, D+1)
    miss_prefix: np.ndarray       # (S, D+1) int
    n_days: int
    _row_index: dict[int, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._row_index = {sid: k for k, sid in enumerate(self.series_ids)}

    def row_of(self, series_id: int) -> int:
        return self._row_index[series_id]

    def anomaly(self, series_id: int, j: int) -> float | None:
        r = self.row_of(series_id)
        if self.missing[r, j - 1]:
            return None
        return float(self.anomalies[r, j - 1])

    def range_sum(self, series_id: int, a: int, b: int) -> float | None:
        """Sum of anomalies over days a..b inclusive, None if unobservable."""
        if a < 1 or b > self.n_days or a > b:
            return None
        r = self.row_of(series_id)
        if self.miss_prefix[r, b] - self.miss_prefix[r, a - 1] != 0:
            return None
        return float(self.prefix[r, b] - self.prefix[r, a - 1])

    @classmethod
    def from_anomalies(cls, series_ids: list[int], anomalies: np.ndarray,
                       missing: np.ndarray) -> "AnomalyMatrix":
        """Build the prefix machinery around precomputed anomaly rows."""
        anomalies = np.where(missing, np.nan, np.asarray(anomalies, dtype=np.float64))
        missing = np.asarray(missing, dtype=bool)
        n_series, n_days = anomalies.shape
        prefix = np.zeros((n_series, n_days + 1))
        np.cumsum(np.where(missing, 0.0, anomalies), axis=1, out=prefix[:, 1:])
        miss_prefix = np.zeros((n_series, n_days + 1), dtype=np.int64)
        np.cumsum(missing, axis=1, out=miss_prefix[:, 1:])
        return cls(series_ids=list(series_ids), anomalies=anomalies,
                   missing=missing, prefix=prefix, miss_prefix=miss_prefix,
                   n_days=n_days)


def anomalize(panel: RawPanel, clim: Climatology) -> AnomalyMatrix:
    """Subtract each day's slot baseline; missing propagates, prefix arrays fill."""
    slots = _day_slots(panel.n_days)
    rows = np.array([clim.row_of(sid) for sid in panel.series_ids])
    base = clim.baseline[rows][:, slots]          # (S, D) baseline per cell
    anomalies = panel.values - base
    missing = panel.missing | np.isnan(base)
    return AnomalyMatrix.from_anomalies(list(panel.series_ids), anomalies, missing)


@dataclass(frozen=True)
class ExtremeEvent:
    target_series: int
    day: int
    direction: str
    anomaly: float
    sd: float


def detect_extremes(anoms: AnomalyMatrix, clim: Climatology, target_series: int,
                    day_range: tuple[int, int],
                    multiplier: float = 2.0) -> list[ExtremeEvent]:
    """Days in day_range whose |anomaly| strictly exceeds multiplier * sd.

    Heat and cold events come back together, tagged by direction and sorted
    by day.  Days without statistics (count < 2) can never be extreme.
    """
    r = anoms.row_of(target_series)
    j0, j1 = day_range
    j0, j1 = max(j0, 1), min(j1, anoms.n_days)
    slots = _day_slots(anoms.n_days)[j0 - 1:j1]
    sd_day = clim.sd[clim.row_of(target_series)][slots]
    a = anoms.anomalies[r, j0 - 1:j1]
    with np.errstate(invalid="ignore"):
        hit = np.abs(a) > multiplier * sd_day    # NaN anywhere -> False
    events = []
    for k in np.nonzero(hit)[0]:
        anom = float(a[k])
        events.append(ExtremeEvent(
            target_series=target_series, day=j0 + int(k),
            direction=HEAT if anom > 0 else COLD,
            anomaly=anom, sd=float(sd_day[k])))
    return events


@dataclass(frozen=True)
class WaveGroup:
    target_series: int
    direction: str
    first_day: int
    last_day: int
    member_days: tuple[int, ...]


def group_waves(events: list[ExtremeEvent]) -> list[WaveGroup]:
    """Merge runs of consecutive extreme days into maximal groups.

    Any gap of a day or more splits groups; heat and cold never merge.
    """
    groups: list[WaveGroup] = []
    for direction in DIRECTIONS:
        days = sorted(e.day for e in events if e.direction == direction)
        if not days:
            continue
        target = events[0].target_series
        run = [days[0]]
        for d in days[1:]:
            if d == run[-1] + 1:
                run.append(d)
            else:
                groups.append(WaveGroup(target, direction, run[0], run[-1], tuple(run)))
                run = [d]
        groups.append(WaveGroup(target, direction, run[0], run[-1], tuple(run)))
    groups.sort(key=lambda g: (g.first_day, g.direction))
    return groups


def write_climatology_csv(clim: Climatology, path: str | Path) -> None:
    """Audit export: one row per (series, slot), stats blank when absent."""
    from .calendars import slot_from_index
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["series_id", "month", "day", "baseline", "sd", "count"])
        for r, sid in enumerate(clim.series_ids):
            for s in range(SLOT_COUNT):
                month, day = slot_from_index(s)
                n = int(clim.count[r, s])
                if n >= 2:
                    b, d = repr(float(clim.baseline[r, s])), repr(float(clim.sd[r, s]))
                else:
                    b, d = "", ""
                writer.writerow([sid, month, day, b, d, n])


def read_climatology_csv(path: str | Path, series_ids: list[int],
                         baseline_years: tuple[int, int]) -> Climatology:
    """Rebuild a Climatology aligned to ``series_ids`` from the audit CSV."""
    rows = {sid: k for k, sid in enumerate(series_ids)}
    baseline = np.full((len(series_ids), SLOT_COUNT), np.nan)
    sd = np.full((len(series_ids), SLOT_COUNT), np.nan)
    count = np.zeros((len(series_ids), SLOT_COUNT), dtype=np.int64)
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            sid = int(row[0])
            if sid not in rows:
                continue
            r, s = rows[sid], slot_index(int(row[1]), int(row[2]))
            count[r, s] = int(row[5])
            if row[3] != "":
                baseline[r, s] = float(row[3])
                sd[r, s] = float(row[4])
    return Climatology(series_ids=list(series_ids), baseline=baseline, sd=sd,
                       count=count, baseline_years=tuple(baseline_years))
