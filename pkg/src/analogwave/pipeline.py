"""Resumable pipeline stages with provenance receipts.

Each stage reads the previous stage's artifacts from the output directory,
writes its own, and drops a JSON receipt recording input content hashes, the
resolved configuration, and wall time.  Artifact writers are deterministic:
re-running a stage on unchanged inputs reproduces its files byte for byte
(receipts carry wall time and are the one exception).
"""

from __future__ import annotations

import csv
import hashlib
import html
import json
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import climatology as clim_mod
from . import mining, predict, score, seasonal
from .calendars import index_to_date
from .config import ConfigError, RunConfig
from .ingest import RawPanel, ingest_manifest, load_panel, save_panel
from .kmz import Placemark, build_kml, package_kmz

STAGES = ("ingest", "climatology", "mine", "filter", "predict", "score",
          "export-kmz")


class StageInputError(Exception):
    """A required input artifact is absent; message names the file."""


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _require(path: Path, producer: str) -> Path:
    if not path.exists():
        raise StageInputError(
            f"missing input artifact {path} (run the {producer!r} stage first)")
    return path


class _Paths:
    def __init__(self, out_dir: str | Path):
        self.out = Path(out_dir)
        self.panel_dir = self.out / "panel"
        self.panel_files = [self.panel_dir / "values.npy",
                            self.panel_dir / "missing.npy",
                            self.panel_dir / "metas.json"]
        self.climatology = self.out / "climatology.csv"
        self.rules = self.out / "rules.jsonl"
        self.checkpoint_dir = self.out / "checkpoints" / "mine"
        self.rules_retained = self.out / "rules_retained.jsonl"
        self.filter_report = self.out / "filter_report.csv"
        self.forecasts = self.out / "forecasts.csv"
        self.outcomes = self.out / "outcomes.csv"
        self.waves = self.out / "waves.csv"
        self.summary = self.out / "summary.json"
        self.kmz = self.out / "forecast.kmz"
        self.receipts = self.out / "receipts"


def _load_panel(paths: _Paths) -> RawPanel:
    for f in paths.panel_files:
        _require(f, "ingest")
    return load_panel(paths.panel_dir)


def _load_climatology(paths: _Paths, panel: RawPanel, cfg: RunConfig):
    _require(paths.climatology, "climatology")
    return clim_mod.read_climatology_csv(paths.climatology, panel.series_ids,
                                         cfg.baseline_years)


def _extremes_by_direction(anoms, clim, cfg: RunConfig,
                           day_range: tuple[int, int]) -> dict[str, list[int]]:
    events = clim_mod.detect_extremes(anoms, clim, cfg.target_series, day_range,
                                      cfg.extreme_multiplier)
    return {d: [e.day for e in events if e.direction == d] for d in cfg.directions}


def _require_target(cfg: RunConfig, panel: RawPanel | None = None) -> int:
    if cfg.target_series is None:
        raise ConfigError("target_series", "required for this stage")
    if panel is not None and cfg.target_series not in panel.series_ids:
        raise ConfigError("target_series",
                          f"series {cfg.target_series} not in the panel")
    return cfg.target_series


def stage_ingest(cfg: RunConfig, paths: _Paths) -> tuple[list[Path], list[Path]]:
    if cfg.manifest is None:
        raise ConfigError("manifest", "required for the ingest stage")
    manifest = Path(cfg.manifest)
    _require(manifest, "ingest")
    panel = ingest_manifest(manifest, cfg.n_days)
    outputs = save_panel(panel, paths.panel_dir)
    return [manifest], outputs


def stage_climatology(cfg: RunConfig, paths: _Paths) -> tuple[list[Path], list[Path]]:
    panel = _load_panel(paths)
    clim = clim_mod.compute_climatology(panel, cfg.baseline_years)
    clim_mod.write_climatology_csv(clim, paths.climatology)
    return list(paths.panel_files), [paths.climatology]


def _mine_fingerprint(cfg: RunConfig, paths: _Paths) -> str:
    relevant = {
        "inputs": {str(f): _sha256(f) for f in paths.panel_files + [paths.climatology]},
        "target_series": cfg.target_series,
        "directions": list(cfg.directions),
        "learning_range": list(cfg.learning_range),
        "lead_times": list(cfg.lead_times),
        "window_lengths": list(cfg.window_lengths),
        "predictor_series": list(cfg.predictor_series or ()),
        "extreme_multiplier": cfg.extreme_multiplier,
        "allow_diagonal_pairs": cfg.allow_diagonal_pairs,
        "shard_count": cfg.shard_count,
    }
    return hashlib.sha256(json.dumps(relevant, sort_keys=True).encode()).hexdigest()


def stage_mine(cfg: RunConfig, paths: _Paths) -> tuple[list[Path], list[Path]]:
    panel = _load_panel(paths)
    clim = _load_climatology(paths, panel, cfg)
    target = _require_target(cfg, panel)
    anoms = clim_mod.anomalize(panel, clim)

    predictors = cfg.predictor_series or tuple(panel.series_ids)
    space = mining.SearchSpace(tuple(predictors), cfg.lead_times,
                               cfg.window_lengths, cfg.allow_diagonal_pairs)
    plan = mining.plan_shards(space.pairs(), cfg.shard_count)
    extremes = _extremes_by_direction(anoms, clim, cfg, cfg.learning_range)

    # shard checkpoints are reusable only under the exact same search setup
    paths.checkpoint_dir.mkdir(parents=True, exist_ok=True)
    fp_file = paths.checkpoint_dir / "fingerprint.json"
    fingerprint = _mine_fingerprint(cfg, paths)
    reuse = fp_file.exists() and json.loads(fp_file.read_text()).get("fingerprint") == fingerprint
    if not reuse:
        for stale in paths.checkpoint_dir.glob("shard-*.jsonl"):
            stale.unlink()
        fp_file.write_text(json.dumps({"fingerprint": fingerprint}) + "\n")

    def run_shard(shard_id: int) -> list[mining.Rule]:
        ckpt = paths.checkpoint_dir / f"shard-{shard_id:04d}.jsonl"
        if reuse and ckpt.exists():
            return mining.read_rules_jsonl(ckpt)
        rules: list[mining.Rule] = []
        for direction in cfg.directions:
            rules.extend(mining.mine_shard(
                anoms, target, direction, space, cfg.learning_range, plan,
                shard_id, extremes[direction]))
        rules.sort(key=lambda r: (r.i1, r.i2, r.l, r.n, r.direction))
        mining.write_rules_jsonl(rules, ckpt)
        return rules

    shard_ids = list(range(plan.shard_count))
    if cfg.workers <= 1 or plan.shard_count == 1:
        shard_rules = [run_shard(s) for s in shard_ids]
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            shard_rules = list(pool.map(run_shard, shard_ids))

    rules = [r for chunk in shard_rules for r in chunk]
    rules.sort(key=lambda r: (r.i1, r.i2, r.l, r.n, r.direction))
    mining.write_rules_jsonl(rules, paths.rules)
    inputs = list(paths.panel_files) + [paths.climatology]
    outputs = [paths.rules] + sorted(paths.checkpoint_dir.glob("shard-*.jsonl"))
    return inputs, outputs


def stage_filter(cfg: RunConfig, paths: _Paths) -> tuple[list[Path], list[Path]]:
    _require(paths.rules, "mine")
    rules = mining.read_rules_jsonl(paths.rules)
    retained, report = seasonal.filter_rules(rules)
    mining.write_rules_jsonl(retained, paths.rules_retained)
    seasonal.write_filter_report_csv(report, paths.filter_report)
    return [paths.rules], [paths.rules_retained, paths.filter_report]


def stage_predict(cfg: RunConfig, paths: _Paths) -> tuple[list[Path], list[Path]]:
    _require(paths.rules_retained, "filter")
    panel = _load_panel(paths)
    clim = _load_climatology(paths, panel, cfg)
    anoms = clim_mod.anomalize(panel, clim)

    rules = mining.read_rules_jsonl(paths.rules_retained)
    inputs = [paths.rules_retained] + list(paths.panel_files) + [paths.climatology]
    if cfg.include_excluded_rules:
        _require(paths.rules, "mine")
        retained_keys = {r.key for r in rules}
        rules += [r for r in mining.read_rules_jsonl(paths.rules)
                  if r.key not in retained_keys]
        inputs.append(paths.rules)

    forecasts = predict.scan(rules, anoms, cfg.validation_range)
    forecasts = predict.filter_by_season(forecasts, rules)
    predict.write_forecasts_csv(forecasts, paths.forecasts)
    return inputs, [paths.forecasts]


def stage_score(cfg: RunConfig, paths: _Paths) -> tuple[list[Path], list[Path]]:
    _require(paths.forecasts, "predict")
    panel = _load_panel(paths)
    clim = _load_climatology(paths, panel, cfg)
    target = _require_target(cfg, panel)
    anoms = clim_mod.anomalize(panel, clim)

    forecasts = predict.read_forecasts_csv(paths.forecasts)
    clusters = predict.cluster(forecasts)
    outcomes = score.score_clusters(clusters, panel, clim, target,
                                    cfg.extreme_multiplier,
                                    cfg.adjacent_sector_tolerance)

    events = clim_mod.detect_extremes(anoms, clim, target, cfg.validation_range,
                                      cfg.extreme_multiplier)
    events = [e for e in events if e.direction in cfg.directions]
    waves = clim_mod.group_waves(events)

    score.write_outcomes_csv(outcomes, paths.outcomes)
    _write_waves_csv(waves, paths.waves)
    score.write_summary_json(score.report(outcomes, waves), paths.summary)
    inputs = [paths.forecasts] + list(paths.panel_files) + [paths.climatology]
    return inputs, [paths.outcomes, paths.waves, paths.summary]


def _write_waves_csv(waves, path: Path) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["direction", "first_date", "last_date", "days"])
        for g in waves:
            writer.writerow([g.direction,
                             index_to_date(g.first_day).isoformat(),
                             index_to_date(g.last_day).isoformat(),
                             len(g.member_days)])


def _kmz_description(summary: dict, outcome_rows: list[dict]) -> str:
    counts = summary["counts"]
    pct = summary["percent"]
    parts = [
        "<h3>Long-range extreme forecast summary</h3>",
        "<p>Wave recall: {} % &middot; cluster precision: {} % &middot; "
        "sign accuracy: {} %</p>".format(
            pct["recall_waves"] or "n/a",
            pct["precision_clusters"] or "n/a",
            pct["sign_accuracy"] or "n/a"),
        "<p>{} forecast clusters over {} observed wave groups</p>".format(
            counts["clusters_total"], counts["waves_total"]),
        "<table border='1'><tr><th>Sector</th><th>Direction</th>"
        "<th>Result</th><th>Best day</th><th>Observed</th></tr>",
    ]
    for row in outcome_rows:
        parts.append(
            "<tr><td>{}-{:02d}/{}</td><td>{}</td><td>{}</td><td>{}</td>"
            "<td>{}</td></tr>".format(
                html.escape(row["sector_year"]), int(row["sector_month"]),
                row["sector_third"], html.escape(row["direction"]),
                html.escape(row["classification"]),
                html.escape(row["best_date"]) or "-",
                html.escape(row["observed_value"]) or "-"))
    parts.append("</table>")
    return "\n".join(parts)


def stage_export_kmz(cfg: RunConfig, paths: _Paths) -> tuple[list[Path], list[Path]]:
    _require(paths.summary, "score")
    _require(paths.outcomes, "score")
    panel = _load_panel(paths)
    target = _require_target(cfg, panel)
    meta = panel.meta_of(target)
    if meta.latitude is None or meta.longitude is None:
        raise ConfigError("target_series",
                          f"series {target} has no coordinates for KMZ export")

    summary = json.loads(paths.summary.read_text())
    with paths.outcomes.open(newline="") as fh:
        outcome_rows = list(csv.DictReader(fh))
    placemark = Placemark(
        name=meta.name or f"series {target}",
        latitude=meta.latitude, longitude=meta.longitude,
        description=_kmz_description(summary, outcome_rows))
    paths.kmz.write_bytes(package_kmz(build_kml([placemark])))
    inputs = [paths.summary, paths.outcomes] + list(paths.panel_files)
    return inputs, [paths.kmz]


_STAGE_FUNCS = {
    "ingest": stage_ingest,
    "climatology": stage_climatology,
    "mine": stage_mine,
    "filter": stage_filter,
    "predict": stage_predict,
    "score": stage_score,
    "export-kmz": stage_export_kmz,
}


def run_stage(stage: str, cfg: RunConfig, out_dir: str | Path) -> list[Path]:
    """Run one stage (or 'all'), write its receipt, return the written paths."""
    if stage == "all":
        written = []
        for s in STAGES:
            written.extend(run_stage(s, cfg, out_dir))
        return written
    if stage not in _STAGE_FUNCS:
        raise ConfigError("stage", f"unknown stage {stage!r}")
    paths = _Paths(out_dir)
    paths.out.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    inputs, outputs = _STAGE_FUNCS[stage](cfg, paths)
    wall = time.perf_counter() - started

    paths.receipts.mkdir(parents=True, exist_ok=True)
    receipt = {
        "stage": stage,
        "inputs": {str(p): _sha256(Path(p)) for p in inputs},
        "outputs": [str(p) for p in outputs],
        "config": cfg.echo(),
        "wall_time_s": round(wall, 6),
    }
    with (paths.receipts / f"{stage}.json").open("w") as fh:
        json.dump(receipt, fh, indent=1)
        fh.write("\n")
    return list(outputs)
