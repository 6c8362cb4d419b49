"""Run configuration: defaults, JSON config files, CLI overrides.

Defaults encode the standard setup (baseline 1973-2013, learning
1975-2010, validation 2011-2014, full lead/length grids); every field can
be overridden from a JSON file and again from CLI flags, so desk-scale
runs can shrink the search to seconds.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

from .calendars import date_to_index, index_to_date
from .climatology import DIRECTIONS
from .mining import LEAD_BOUNDS, LENGTH_BOUNDS


class ConfigError(ValueError):
    """Invalid configuration value; carries the offending field name."""

    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"config field {field_name!r}: {message}")


@dataclass
class RunConfig:
    manifest: str | None = None
    target_series: int | None = None
    directions: tuple[str, ...] = DIRECTIONS
    baseline_years: tuple[int, int] = (1973, 2013)
    learning_range: tuple[int, int] = (731, 13879)        # day indices
    validation_range: tuple[int, int] = (13880, 15340)
    lead_times: tuple[int, ...] = field(
        default_factory=lambda: tuple(range(LEAD_BOUNDS[0], LEAD_BOUNDS[1] + 1)))
    window_lengths: tuple[int, ...] = field(
        default_factory=lambda: tuple(range(LENGTH_BOUNDS[0], LENGTH_BOUNDS[1] + 1)))
    predictor_series: tuple[int, ...] | None = None       # None = all panel series
    shard_count: int = 1
    workers: int = 1
    extreme_multiplier: float = 2.0
    allow_diagonal_pairs: bool = True
    adjacent_sector_tolerance: bool = False
    include_excluded_rules: bool = False
    panel_end: int | None = None                          # day index

    @property
    def n_days(self) -> int:
        """Panel day span: explicit end, else far enough for validation and baseline."""
        if self.panel_end is not None:
            return self.panel_end
        baseline_end = date_to_index(date(self.baseline_years[1], 12, 31))
        return max(self.validation_range[1], baseline_end)

    def echo(self) -> dict:
        """JSON-able resolved configuration (dates as ISO strings) for receipts."""
        grid = lambda vs: {"min": vs[0], "max": vs[-1]} if _is_contiguous(vs) else list(vs)
        return {
            "manifest": self.manifest,
            "target_series": self.target_series,
            "directions": list(self.directions),
            "baseline_years": list(self.baseline_years),
            "learning_range": [index_to_date(j).isoformat() for j in self.learning_range],
            "validation_range": [index_to_date(j).isoformat() for j in self.validation_range],
            "lead_times": grid(self.lead_times),
            "window_lengths": grid(self.window_lengths),
            "predictor_series": list(self.predictor_series) if self.predictor_series else None,
            "shard_count": self.shard_count,
            "workers": self.workers,
            "extreme_multiplier": self.extreme_multiplier,
            "allow_diagonal_pairs": self.allow_diagonal_pairs,
            "adjacent_sector_tolerance": self.adjacent_sector_tolerance,
            "include_excluded_rules": self.include_excluded_rules,
            "panel_end": index_to_date(self.panel_end).isoformat() if self.panel_end else None,
        }


def _is_contiguous(vs: tuple[int, ...]) -> bool:
    return list(vs) == list(range(vs[0], vs[-1] + 1))


def _parse_date_field(value, field_name: str) -> int:
    try:
        return date_to_index(date.fromisoformat(str(value)))
    except ValueError as exc:
        raise ConfigError(field_name, str(exc)) from None


def _parse_date_range(value, field_name: str) -> tuple[int, int]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(field_name, "expected [start_date, end_date]")
    j0 = _parse_date_field(value[0], field_name)
    j1 = _parse_date_field(value[1], field_name)
    if j0 > j1:
        raise ConfigError(field_name, f"range start {value[0]} after end {value[1]}")
    return (j0, j1)


def _parse_grid(value, field_name: str, bounds: tuple[int, int]) -> tuple[int, ...]:
    """Grid values: {"min": a, "max": b} for a contiguous range, or a list."""
    if isinstance(value, dict):
        try:
            lo, hi = int(value["min"]), int(value["max"])
        except (KeyError, TypeError, ValueError):
            raise ConfigError(field_name, "expected {'min': a, 'max': b}") from None
        if lo > hi:
            raise ConfigError(field_name, f"min {lo} exceeds max {hi}")
        vals = tuple(range(lo, hi + 1))
    elif isinstance(value, (list, tuple)):
        try:
            vals = tuple(sorted({int(v) for v in value}))
        except (TypeError, ValueError):
            raise ConfigError(field_name, "expected integer values") from None
        if not vals:
            raise ConfigError(field_name, "empty grid")
    else:
        raise ConfigError(field_name, "expected a {'min','max'} object or a list")
    for v in vals:
        if not bounds[0] <= v <= bounds[1]:
            raise ConfigError(field_name, f"value {v} outside {list(bounds)}")
    return vals


def _parse_years(value, field_name: str) -> tuple[int, int]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(field_name, "expected [first_year, last_year]")
    y0, y1 = int(value[0]), int(value[1])
    if y0 > y1:
        raise ConfigError(field_name, f"first year {y0} after last {y1}")
    if y0 < 1973:
        raise ConfigError(field_name, f"years before 1973 unsupported, got {y0}")
    return (y0, y1)


def build_config(*sources: dict) -> RunConfig:
    """Layer config dicts (file first, CLI overrides last) over the defaults.

    Later sources win; None values in a source leave the field untouched.
    """
    cfg = RunConfig()
    merged: dict = {}
    for src in sources:
        for k, v in src.items():
            if v is not None:
                merged[k] = v

    known = {
        "manifest", "target_series", "directions", "baseline_years",
        "learning_range", "validation_range", "lead_times", "window_lengths",
        "predictor_series", "shard_count", "workers", "extreme_multiplier",
        "allow_diagonal_pairs", "adjacent_sector_tolerance",
        "include_excluded_rules", "panel_end",
    }
    for k in merged:
        if k not in known:
            raise ConfigError(k, "unknown field")

    if "manifest" in merged:
        cfg.manifest = str(merged["manifest"])
    if "target_series" in merged:
        try:
            cfg.target_series = int(merged["target_series"])
        except (TypeError, ValueError):
            raise ConfigError("target_series", "expected an integer") from None
    if "directions" in merged:
        ds = merged["directions"]
        if isinstance(ds, str):
            ds = [ds]
        ds = tuple(ds)
        for d in ds:
            if d not in DIRECTIONS:
                raise ConfigError("directions", f"unknown direction {d!r}")
        if not ds:
            raise ConfigError("directions", "at least one direction required")
        cfg.directions = ds
    if "baseline_years" in merged:
        cfg.baseline_years = _parse_years(merged["baseline_years"], "baseline_years")
    if "learning_range" in merged:
        cfg.learning_range = _parse_date_range(merged["learning_range"], "learning_range")
    if "validation_range" in merged:
        cfg.validation_range = _parse_date_range(merged["validation_range"], "validation_range")
    if "lead_times" in merged:
        cfg.lead_times = _parse_grid(merged["lead_times"], "lead_times", LEAD_BOUNDS)
    if "window_lengths" in merged:
        cfg.window_lengths = _parse_grid(merged["window_lengths"], "window_lengths",
                                         LENGTH_BOUNDS)
    if "predictor_series" in merged:
        ps = merged["predictor_series"]
        cfg.predictor_series = tuple(int(v) for v in ps) if ps is not None else None
    if "shard_count" in merged:
        cfg.shard_count = int(merged["shard_count"])
    if "workers" in merged:
        cfg.workers = int(merged["workers"])
    if "extreme_multiplier" in merged:
        cfg.extreme_multiplier = float(merged["extreme_multiplier"])
    if "allow_diagonal_pairs" in merged:
        cfg.allow_diagonal_pairs = bool(merged["allow_diagonal_pairs"])
    if "adjacent_sector_tolerance" in merged:
        cfg.adjacent_sector_tolerance = bool(merged["adjacent_sector_tolerance"])
    if "include_excluded_rules" in merged:
        cfg.include_excluded_rules = bool(merged["include_excluded_rules"])
    if "panel_end" in merged:
        cfg.panel_end = _parse_date_field(merged["panel_end"], "panel_end")

    if cfg.learning_range[1] >= cfg.validation_range[0]:
        raise ConfigError("validation_range", "learning range must end before "
                          "the validation range starts")
    if cfg.extreme_multiplier <= 0:
        raise ConfigError("extreme_multiplier", "must be positive")
    if cfg.shard_count < 1:
        raise ConfigError("shard_count", "must be >= 1")
    if cfg.workers < 1:
        raise ConfigError("workers", "must be >= 1")
    if cfg.panel_end is not None and cfg.panel_end < cfg.validation_range[1]:
        raise ConfigError("panel_end", "panel ends before the validation range")
    return cfg


def load_config_file(path: str | Path) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigError("config", f"file not found: {p}")
    try:
        with p.open() as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON in {p}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config", f"{p} must hold a JSON object")
    return doc
