from __future__ import annotations

from dataclasses import dataclass
from datetime import date

import numpy as np
import pytest

from analogwave import mining, predict, score, seasonal
from analogwave.calendars import date_to_index
from analogwave.climatology import (HEAT, AnomalyMatrix, Climatology,
                                    anomalize, compute_climatology,
                                    detect_extremes, group_waves)
from analogwave.demo import (LEARNING_EXTREMES, PRED_A_ID, PRED_B_ID,
                             TARGET_ID, VALIDATION_EXTREMES, build_demo_panel)
from analogwave.ingest import RawPanel


@dataclass
class MiningFixture:
    """Randomized 6-series panel with designated extremes and planted spikes."""

    anoms: AnomalyMatrix
    anomalies: np.ndarray
    missing: np.ndarray
    series_ids: list[int]
    target: int
    learning: tuple[int, int]
    extreme_days: list[int]
    space: mining.SearchSpace
    leads: tuple[int, ...]
    lengths: tuple[int, ...]


def build_mining_fixture(seed: int = 2024, n_days: int = 1500) -> MiningFixture:
    rng = np.random.default_rng(seed)
    n_series = 6
    anomalies = rng.normal(0.0, 1.0, size=(n_series, n_days))
    missing = np.zeros((n_series, n_days), dtype=bool)
    missing[2, 700:704] = True
    learning = (400, 1400)
    ext = np.sort(rng.choice(np.arange(learning[0], learning[1] + 1),
                             size=30, replace=False))
    # synchronized precursor spikes 20 days ahead of every designated extreme
    for e in ext:
        anomalies[4, e - 20 - 1] += 9.0
        anomalies[5, e - 20 - 1] += 9.0
    ids = [1, 2, 3, 4, 5, 6]
    leads = tuple(range(14, 21))
    lengths = tuple(range(1, 11))
    return MiningFixture(
        anoms=AnomalyMatrix.from_anomalies(ids, anomalies, missing),
        anomalies=anomalies, missing=missing, series_ids=ids, target=1,
        learning=learning, extreme_days=[int(d) for d in ext],
        space=mining.SearchSpace(tuple(ids), leads, lengths),
        leads=leads, lengths=lengths)


@pytest.fixture(scope="session")
def mining_fixture() -> MiningFixture:
    return build_mining_fixture()


@dataclass
class DemoPipeline:
    """The planted-teleconnection demo run end to end through the library."""

    panel: RawPanel
    clim: Climatology
    anoms: AnomalyMatrix
    learning: tuple[int, int]
    validation: tuple[int, int]
    heat_extreme_days: list[int]
    rules: list[mining.Rule]
    retained: list[mining.Rule]
    forecasts: list[predict.Forecast]
    clusters: list[predict.ForecastCluster]
    outcomes: list[score.Outcome]
    waves: list
    planted_lead: int = 30
    target: int = TARGET_ID
    pred_a: int = PRED_A_ID
    pred_b: int = PRED_B_ID

    @property
    def planted_validation_days(self) -> set[int]:
        return {date_to_index(d) for d in VALIDATION_EXTREMES}

    @property
    def planted_learning_days(self) -> set[int]:
        return {date_to_index(d) for d in LEARNING_EXTREMES}


@pytest.fixture(scope="session")
def demo_pipeline() -> DemoPipeline:
    panel = build_demo_panel()
    clim = compute_climatology(panel, (1973, 1978))
    anoms = anomalize(panel, clim)
    learning = (date_to_index(date(1975, 1, 1)), date_to_index(date(1977, 12, 31)))
    validation = (date_to_index(date(1978, 1, 1)), date_to_index(date(1978, 12, 31)))

    events = detect_extremes(anoms, clim, TARGET_ID, learning)
    heat_days = [e.day for e in events if e.direction == HEAT]

    space = mining.SearchSpace(tuple(panel.series_ids),
                               tuple(range(25, 36)), (1, 2, 3))
    plan = mining.plan_shards(space.pairs(), 2)
    rules = mining.mine(anoms, TARGET_ID, HEAT, space, learning, plan,
                        heat_days, workers=2)
    retained, _ = seasonal.filter_rules(rules)

    forecasts = predict.filter_by_season(
        predict.scan(retained, anoms, validation), retained)
    clusters = predict.cluster(forecasts)
    outcomes = score.score_clusters(clusters, panel, clim, TARGET_ID)
    val_events = detect_extremes(anoms, clim, TARGET_ID, validation)
    waves = group_waves([e for e in val_events if e.direction == HEAT])
    return DemoPipeline(panel=panel, clim=clim, anoms=anoms, learning=learning,
                        validation=validation, heat_extreme_days=heat_days,
                        rules=rules, retained=retained, forecasts=forecasts,
                        clusters=clusters, outcomes=outcomes, waves=waves)
