"""Synthetic demonstration dataset with a planted teleconnection.

Two predictor stations carry synchronized spikes exactly 30 days before each
planted heat extreme at the target station, six times on the learning years
(all in May-July, spaced more than 30 days) and three times in the
validation year.  Amplitudes are chosen so every climatology statistic is an
exact binary float: the planted signal clears the two-sigma bar with a
deterministic margin and nothing in the core fixture depends on rounding.

A noise series and a monthly oscillation index ride along so ingest,
missing-data masking, and monthly broadcasting all get exercised.
"""

from __future__ import annotations

import csv
import json
from datetime import date
from pathlib import Path

import numpy as np

from .calendars import date_to_index, index_to_date
from .ingest import RawPanel, SeriesMeta, build_panel, write_daily_csv

SPAN = (date(1973, 1, 1), date(1978, 12, 31))

TARGET_ID, PRED_A_ID, PRED_B_ID, NOISE_ID, OSC_ID = 1, 2, 3, 4, 5

#: planted heat-extreme days at the target station
LEARNING_EXTREMES = (date(1975, 5, 5), date(1975, 6, 10), date(1975, 7, 15),
                     date(1976, 5, 20), date(1976, 6, 25), date(1976, 7, 30))
VALIDATION_EXTREMES = (date(1978, 5, 10), date(1978, 6, 15), date(1978, 7, 20))

PLANTED_LEAD = 30
TARGET_BASE, TARGET_SPIKE = 60.0, 96.0
PRED_BASE, PRED_SPIKE = 50.0, 48.0

DEMO_CONFIG = {
    "target_series": TARGET_ID,
    "directions": ["heat", "cold"],
    "baseline_years": [1973, 1978],
    "learning_range": ["1975-01-01", "1977-12-31"],
    "validation_range": ["1978-01-01", "1978-12-31"],
    "lead_times": {"min": 25, "max": 35},
    "window_lengths": {"min": 1, "max": 3},
    "shard_count": 2,
    "workers": 2,
}


def build_demo_panel(seed: int = 7) -> RawPanel:
    """The demo panel as in-memory arrays (same data the CSV tree carries)."""
    n_days = date_to_index(SPAN[1])
    rng = np.random.default_rng(seed)

    target = np.full(n_days, TARGET_BASE)
    pred_a = np.full(n_days, PRED_BASE)
    pred_b = np.full(n_days, PRED_BASE)
    for d in LEARNING_EXTREMES + VALIDATION_EXTREMES:
        j = date_to_index(d)
        target[j - 1] += TARGET_SPIKE
        pred_a[j - 1 - PLANTED_LEAD] += PRED_SPIKE
        pred_b[j - 1 - PLANTED_LEAD] += PRED_SPIKE

    noise = rng.uniform(-0.25, 0.25, size=n_days)
    noise_missing = np.zeros(n_days, dtype=bool)
    noise_missing[rng.choice(n_days, size=12, replace=False)] = True
    noise[noise_missing] = np.nan

    osc = np.empty(n_days)
    for j in range(1, n_days + 1):
        d = index_to_date(j)
        osc[j - 1] = round(0.5 * np.sin(2 * np.pi * (d.year * 12 + d.month) / 26.0), 3)

    none = np.zeros(n_days, dtype=bool)
    series = [
        (SeriesMeta(TARGET_ID, "Cape Arrow", "Atlantis", "station_daily",
                    35.21, 12.53, "degF"), target, none),
        (SeriesMeta(PRED_A_ID, "Mount Helix", "Atlantis", "station_daily",
                    -12.04, 96.88, "degF"), pred_a, none),
        (SeriesMeta(PRED_B_ID, "Port Stellar", "Atlantis", "station_daily",
                    48.41, -61.27, "degF"), pred_b, none),
        (SeriesMeta(NOISE_ID, "Drift Buoy 4", "", "index_daily",
                    None, None, "cm"), noise, noise_missing),
        (SeriesMeta(OSC_ID, "Basin Oscillation", "", "index_monthly",
                    None, None, "index"), osc, none),
    ]
    return build_panel(series)


def write_demo_tree(root: str | Path, seed: int = 7) -> tuple[Path, Path]:
    """Materialize the demo as CSV files + manifest + config for the CLI.

    Returns (manifest_path, config_path).
    """
    root = Path(root)
    data = root / "data"
    data.mkdir(parents=True, exist_ok=True)
    panel = build_demo_panel(seed)

    monthly_row_of: dict[tuple[int, int], float] = {}
    for meta in panel.metas:
        row = panel.row_of(meta.series_id)
        fname = f"series_{meta.series_id:03d}.csv"
        if meta.kind == "index_monthly":
            for j in range(1, panel.n_days + 1):
                d = index_to_date(j)
                if not panel.missing[row, j - 1]:
                    monthly_row_of.setdefault((d.year, d.month),
                                              float(panel.values[row, j - 1]))
            with (data / fname).open("w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["year", "month", "value"])
                for (y, m), v in sorted(monthly_row_of.items()):
                    writer.writerow([y, m, repr(v)])
        else:
            write_daily_csv(data / fname, panel.values[row], panel.missing[row])

    manifest = [
        {
            "series_id": m.series_id, "name": m.name, "country": m.country,
            "kind": m.kind, "lat": m.latitude, "lon": m.longitude,
            "units": m.units, "path": f"data/series_{m.series_id:03d}.csv",
            "missing_sentinels": [9999.9, 999.9],
        }
        for m in panel.metas
    ]
    manifest_path = root / "manifest.json"
    with manifest_path.open("w") as fh:
        json.dump(manifest, fh, indent=1)
        fh.write("\n")

    config = dict(DEMO_CONFIG)
    config["manifest"] = str(manifest_path)
    config_path = root / "config.json"
    with config_path.open("w") as fh:
        json.dump(config, fh, indent=1)
        fh.write("\n")
    return manifest_path, config_path
