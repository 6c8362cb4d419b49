"""Command-line orchestration of the forecasting pipeline.

Stages run individually or end to end; flag values override the JSON config
file, which overrides the built-in defaults.  Worker count can also come
from the ANALOGWAVE_WORKERS environment variable (flags still win).

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import os
import sys
from datetime import date

from .config import ConfigError, build_config, load_config_file
from .ingest import IngestError
from .kmz import PlacemarkError
from .mining import SearchSpaceError
from .pipeline import STAGES, StageInputError, run_stage

WORKERS_ENV = "ANALOGWAVE_WORKERS"


def _grid_arg(text: str):
    """'14:365' -> contiguous range, '30,60,90' -> explicit list."""
    text = text.strip()
    if ":" in text:
        lo, hi = text.split(":", 1)
        return {"min": int(lo), "max": int(hi)}
    return [int(v) for v in text.split(",") if v.strip()]


def _date_range_arg(text: str) -> list[str]:
    parts = text.split(":")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(
            f"expected START:END dates, got {text!r}")
    for p in parts:
        date.fromisoformat(p)   # early validation with a clear message
    return parts


def _years_arg(text: str) -> list[int]:
    parts = text.split(":")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected FIRST:LAST years, got {text!r}")
    return [int(p) for p in parts]


def _int_list_arg(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="analogwave",
        description="Mine paired precursor rules from daily climate series and "
                    "run long-range heat/cold wave forecasts.")
    parser.add_argument("stage", choices=STAGES + ("all",),
                        help="pipeline stage to run")
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--out", default="out", help="artifact directory")
    parser.add_argument("--manifest", help="series manifest JSON")
    parser.add_argument("--target", type=int, dest="target_series",
                        help="target series id")
    parser.add_argument("--directions",
                        help="comma list of directions (heat,cold)")
    parser.add_argument("--baseline-years", type=_years_arg,
                        help="baseline years as FIRST:LAST")
    parser.add_argument("--learning", type=_date_range_arg,
                        help="learning range as START:END ISO dates")
    parser.add_argument("--validation", type=_date_range_arg,
                        help="validation range as START:END ISO dates")
    parser.add_argument("--leads", type=_grid_arg,
                        help="lead-time grid: MIN:MAX or comma list")
    parser.add_argument("--lengths", type=_grid_arg,
                        help="window-length grid: MIN:MAX or comma list")
    parser.add_argument("--predictors", type=_int_list_arg,
                        help="comma list of candidate predictor series ids")
    parser.add_argument("--shards", type=int, dest="shard_count",
                        help="number of mining shards")
    parser.add_argument("--workers", type=int, help="parallel worker count")
    parser.add_argument("--multiplier", type=float, dest="extreme_multiplier",
                        help="extreme threshold in standard deviations")
    parser.add_argument("--diagonal-pairs", action=argparse.BooleanOptionalAction,
                        default=None, dest="allow_diagonal_pairs",
                        help="allow i1 == i2 predictor pairs")
    parser.add_argument("--adjacent-sector-tolerance",
                        action=argparse.BooleanOptionalAction, default=None,
                        help="let long-lead clusters match the following sector")
    parser.add_argument("--include-excluded-rules",
                        action=argparse.BooleanOptionalAction, default=None,
                        help="let seasonally excluded rules forecast too")
    parser.add_argument("--panel-end", help="panel end date (ISO)")
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    directions = None
    if args.directions is not None:
        directions = [d.strip() for d in args.directions.split(",") if d.strip()]
    return {
        "manifest": args.manifest,
        "target_series": args.target_series,
        "directions": directions,
        "baseline_years": args.baseline_years,
        "learning_range": args.learning,
        "validation_range": args.validation,
        "lead_times": args.leads,
        "window_lengths": args.lengths,
        "predictor_series": args.predictors,
        "shard_count": args.shard_count,
        "workers": args.workers,
        "extreme_multiplier": args.extreme_multiplier,
        "allow_diagonal_pairs": args.allow_diagonal_pairs,
        "adjacent_sector_tolerance": args.adjacent_sector_tolerance,
        "include_excluded_rules": args.include_excluded_rules,
        "panel_end": args.panel_end,
    }


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        file_cfg = load_config_file(args.config) if args.config else {}
        env_cfg = {}
        if os.environ.get(WORKERS_ENV):
            try:
                env_cfg["workers"] = int(os.environ[WORKERS_ENV])
            except ValueError:
                raise ConfigError("workers",
                                  f"{WORKERS_ENV} must be an integer") from None
        cfg = build_config(file_cfg, env_cfg, _overrides(args))
        written = run_stage(args.stage, cfg, args.out)
    except (ConfigError, StageInputError, SearchSpaceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (IngestError, PlacemarkError, OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for p in written:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
