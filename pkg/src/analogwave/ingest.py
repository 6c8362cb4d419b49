"""Parse daily station CSVs and monthly index series into a validated panel.

A panel is a dense [series x days] matrix on the day-index axis starting at
1973-01-01.  Missing observations are masked, never interpolated: a window
sum that touches a masked day is undefined downstream.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

import numpy as np

from .calendars import DateRangeError, date_to_index, index_to_date

#: GSOD-style missing markers applied when a manifest entry names none
DEFAULT_SENTINELS = (9999.9, 999.9)

SERIES_KINDS = ("station_daily", "index_monthly", "index_daily")


class IngestError(ValueError):
    """Malformed input file or inconsistent series configuration."""


@dataclass(frozen=True)
class SeriesMeta:
    series_id: int
    name: str
    country: str = ""
    kind: str = "station_daily"
    latitude: float | None = None
    longitude: float | None = None
    units: str = ""

    def __post_init__(self) -> None:
        if self.series_id < 1:
            raise IngestError(f"series_id must be >= 1, got {self.series_id}")
        if self.kind not in SERIES_KINDS:
            raise IngestError(f"unknown series kind {self.kind!r}")
        if self.kind == "station_daily":
            if self.latitude is None or self.longitude is None:
                raise IngestError(
                    f"series {self.series_id} ({self.name}): station series "
                    "require latitude and longitude")
        if self.latitude is not None and not -90.0 <= self.latitude <= 90.0:
            raise IngestError(f"series {self.series_id}: latitude {self.latitude} out of range")
        if self.longitude is not None and not -180.0 <= self.longitude <= 180.0:
            raise IngestError(f"series {self.series_id}: longitude {self.longitude} out of range")


@dataclass
class RawPanel:
    """Dense daily matrix of raw series values with a shared missing mask."""

    metas: list[SeriesMeta]
    values: np.ndarray
    missing: np.ndarray
    n_days: int
    _row_index: dict[int, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        self.missing = np.asarray(self.missing, dtype=bool)
        if self.values.shape != (len(self.metas), self.n_days):
            raise IngestError(
                f"values shape {self.values.shape} != "
                f"({len(self.metas)}, {self.n_days})")
        if self.missing.shape != self.values.shape:
            raise IngestError("missing mask shape differs from values")
        if not np.all(np.isfinite(self.values[~self.missing])):
            raise IngestError("non-missing cells must be finite")
        self._row_index = {}
        for row, meta in enumerate(self.metas):
            if meta.series_id in self._row_index:
                raise IngestError(f"duplicate series_id {meta.series_id}")
            self._row_index[meta.series_id] = row

    @property
    def series_ids(self) -> list[int]:
        return [m.series_id for m in self.metas]

    def row_of(self, series_id: int) -> int:
        try:
            return self._row_index[series_id]
        except KeyError:
            raise KeyError(f"series {series_id} not in panel") from None

    def meta_of(self, series_id: int) -> SeriesMeta:
        return self.metas[self.row_of(series_id)]


def _parse_value(text: str, sentinels: tuple[float, ...], where: str) -> tuple[float, bool]:
    """Return (value, is_missing); sentinel and empty fields are missing."""
    text = text.strip()
    if text == "":
        return (np.nan, True)
    try:
        v = float(text)
    except ValueError:
        raise IngestError(f"{where}: cannot parse value {text!r}") from None
    if not np.isfinite(v) or any(v == s for s in sentinels):
        return (np.nan, True)
    return (v, False)


def _check_header(row: list[str], expected: tuple[str, ...], path: str) -> None:
    got = tuple(c.strip().lower() for c in row[: len(expected)])
    if got != expected:
        raise IngestError(f"{path}: expected header {','.join(expected)!r}, got {row!r}")


def parse_daily_csv(path: str | Path, n_days: int,
                    sentinels: tuple[float, ...] = DEFAULT_SENTINELS,
                    ) -> tuple[np.ndarray, np.ndarray]:
    """Read a ``date,value`` CSV into a dense daily series of length n_days.

    Unlisted days and sentinel values come back masked.  Duplicate dates and
    dates before the epoch are errors; dates past ``n_days`` are skipped so
    a long archive can feed a shorter panel.
    """
    path = Path(path)
    values = np.full(n_days, np.nan)
    missing = np.ones(n_days, dtype=bool)
    seen: set[int] = set()
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise IngestError(f"{path}: empty file, expected a date,value header")
        _check_header(header, ("date", "value"), str(path))
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            where = f"{path}:{lineno}"
            if len(row) < 2:
                raise IngestError(f"{where}: expected date,value")
            try:
                d = date.fromisoformat(row[0].strip())
            except ValueError:
                raise IngestError(f"{where}: cannot parse date {row[0]!r}") from None
            try:
                j = date_to_index(d)
            except DateRangeError:
                raise IngestError(f"{where}: {d.isoformat()} precedes 1973-01-01") from None
            if j in seen:
                raise IngestError(f"{where}: duplicate date {d.isoformat()}")
            seen.add(j)
            if j > n_days:
                continue
            v, miss = _parse_value(row[1], sentinels, where)
            if not miss:
                values[j - 1] = v
                missing[j - 1] = False
    return values, missing


def expand_monthly(rows: list[tuple[int, int, float]], n_days: int,
                   ) -> tuple[np.ndarray, np.ndarray]:
    """Broadcast monthly (year, month, value) rows onto the daily axis.

    Every day of a listed month carries that month's value; unlisted months
    stay missing for all their days.
    """
    values = np.full(n_days, np.nan)
    missing = np.ones(n_days, dtype=bool)
    seen: set[tuple[int, int]] = set()
    for year, month, value in rows:
        if not 1 <= month <= 12:
            raise IngestError(f"invalid month {month} (year {year})")
        if year < 1973:
            raise IngestError(f"month {year}-{month:02d} precedes 1973-01-01")
        if (year, month) in seen:
            raise IngestError(f"duplicate month {year}-{month:02d}")
        seen.add((year, month))
        start = date_to_index(date(year, month, 1))
        if month == 12:
            end = date_to_index(date(year + 1, 1, 1)) - 1
        else:
            end = date_to_index(date(year, month + 1, 1)) - 1
        if start > n_days:
            continue
        end = min(end, n_days)
        values[start - 1:end] = value
        missing[start - 1:end] = False
    return values, missing


def parse_monthly_csv(path: str | Path, n_days: int,
                      sentinels: tuple[float, ...] = DEFAULT_SENTINELS,
                      ) -> tuple[np.ndarray, np.ndarray]:
    """Read a ``year,month,value`` CSV and expand it onto the daily axis."""
    path = Path(path)
    rows: list[tuple[int, int, float]] = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise IngestError(f"{path}: empty file, expected a year,month,value header")
        _check_header(header, ("year", "month", "value"), str(path))
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            where = f"{path}:{lineno}"
            if len(row) < 3:
                raise IngestError(f"{where}: expected year,month,value")
            try:
                year, month = int(row[0]), int(row[1])
            except ValueError:
                raise IngestError(f"{where}: cannot parse year/month") from None
            v, miss = _parse_value(row[2], sentinels, where)
            if not miss:
                rows.append((year, month, v))
    return expand_monthly(rows, n_days)


def write_daily_csv(path: str | Path, values: np.ndarray, missing: np.ndarray) -> None:
    """Serialize a daily series back to the date,value CSV format."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "value"])
        for k in range(len(values)):
            if not missing[k]:
                writer.writerow([index_to_date(k + 1).isoformat(), repr(float(values[k]))])


def build_panel(series: list[tuple[SeriesMeta, np.ndarray, np.ndarray]]) -> RawPanel:
    """Merge parsed series into one panel; all must share the day span."""
    if not series:
        raise IngestError("cannot build an empty panel")
    n_days = len(series[0][1])
    metas = []
    for meta, values, missing in series:
        if len(values) != n_days or len(missing) != n_days:
            raise IngestError(
                f"series {meta.series_id}: day span {len(values)} != {n_days}")
        metas.append(meta)
    values = np.vstack([v for _, v, _ in series])
    missing = np.vstack([m for _, _, m in series])
    return RawPanel(metas=metas, values=values, missing=missing, n_days=n_days)


def load_manifest(path: str | Path) -> list[dict]:
    """Read the JSON manifest listing every series and its source file."""
    path = Path(path)
    with path.open() as fh:
        entries = json.load(fh)
    if not isinstance(entries, list):
        raise IngestError(f"{path}: manifest must be a JSON array")
    for k, e in enumerate(entries):
        for key in ("series_id", "name", "kind", "path"):
            if key not in e:
                raise IngestError(f"{path}: entry {k} lacks required key {key!r}")
    return entries


def ingest_manifest(manifest_path: str | Path, n_days: int) -> RawPanel:
    """Parse every series named in a manifest and assemble the panel."""
    manifest_path = Path(manifest_path)
    base = manifest_path.parent
    series = []
    for e in load_manifest(manifest_path):
        meta = SeriesMeta(
            series_id=int(e["series_id"]),
            name=str(e["name"]),
            country=str(e.get("country", "")),
            kind=str(e["kind"]),
            latitude=e.get("lat"),
            longitude=e.get("lon"),
            units=str(e.get("units", "")),
        )
        sentinels = tuple(float(s) for s in e.get("missing_sentinels", DEFAULT_SENTINELS))
        src = Path(e["path"])
        if not src.is_absolute():
            src = base / src
        if not src.exists():
            raise IngestError(f"series {meta.series_id}: file not found: {src}")
        if meta.kind == "index_monthly":
            values, missing = parse_monthly_csv(src, n_days, sentinels)
        else:
            values, missing = parse_daily_csv(src, n_days, sentinels)
        series.append((meta, values, missing))
    return build_panel(series)


def save_panel(panel: RawPanel, out_dir: str | Path) -> list[Path]:
    """Write a panel as values.npy + missing.npy + metas.json (deterministic)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "values.npy", out / "missing.npy", out / "metas.json"]
    np.save(paths[0], panel.values)
    np.save(paths[1], panel.missing)
    metas = [
        {
            "series_id": m.series_id, "name": m.name, "country": m.country,
            "kind": m.kind, "lat": m.latitude, "lon": m.longitude, "units": m.units,
        }
        for m in panel.metas
    ]
    with paths[2].open("w") as fh:
        json.dump({"n_days": panel.n_days, "metas": metas}, fh, indent=1)
        fh.write("\n")
    return paths


def load_panel(in_dir: str | Path) -> RawPanel:
    """Inverse of :func:`save_panel`."""
    src = Path(in_dir)
    values = np.load(src / "values.npy")
    missing = np.load(src / "missing.npy")
    with (src / "metas.json").open() as fh:
        doc = json.load(fh)
    metas = [
        SeriesMeta(
            series_id=int(m["series_id"]), name=m["name"], country=m.get("country", ""),
            kind=m["kind"], latitude=m.get("lat"), longitude=m.get("lon"),
            units=m.get("units", ""),
        )
        for m in doc["metas"]
    ]
    return RawPanel(metas=metas, values=values, missing=missing, n_days=int(doc["n_days"]))
