"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Tolerances and runtime budgets are pinned here, not configurable: threshold
agreement 1e-9, firing sets exact, rule files byte-identical, and the stated
wall-clock ceilings for the heavy fixtures.
"""

import io
import json
import time
import xml.etree.ElementTree as ET
import zipfile
from contextlib import contextmanager
from datetime import date

import numpy as np
import pytest

from analogwave import mining, predict, seasonal
from analogwave.calendars import Sector, date_to_index, index_to_date
from analogwave.climatology import (HEAT, AnomalyMatrix, WaveGroup, anomalize,
                                    compute_climatology, detect_extremes)
from analogwave.ingest import SeriesMeta, build_panel
from analogwave.kmz import KML_NAMESPACE, Placemark, build_kml, package_kmz
from analogwave.predict import ForecastCluster
from analogwave.score import (EXTREME_HIT, SAME_SIGN, Observation, Outcome,
                              classify, percent, report)

from .conftest import build_mining_fixture
from .oracles import naive_mine


@contextmanager
def criterion(number, label):
    try:
        yield
    except BaseException:
        print(f"[acceptance] criterion {number:02d} ({label}): FAIL")
        raise
    print(f"[acceptance] criterion {number:02d} ({label}): PASS")


def test_01_anomaly_anchor():
    with criterion(1, "anomaly = raw minus baseline"):
        n_days = date_to_index(date(1975, 12, 31))
        values = np.zeros(n_days)
        j4 = {y: date_to_index(date(y, 1, 4)) for y in (1973, 1974, 1975)}
        values[j4[1973] - 1] = 37.0
        values[j4[1974] - 1] = 38.0
        values[j4[1975] - 1] = 39.3
        meta = SeriesMeta(series_id=114, name="t", kind="index_daily")
        panel = build_panel([(meta, values, np.zeros(n_days, dtype=bool))])
        clim = compute_climatology(panel, (1973, 1974))
        baseline, _, _ = clim.stats(114, 1, 4)
        assert baseline == 37.5
        got = anomalize(panel, clim).anomaly(114, j4[1975])
        # the deviation of a 39.3 reading from a 37.5 baseline is positive:
        # subtraction order is fixed by the definition, raw minus baseline
        assert got == 39.3 - 37.5
        assert got == pytest.approx(+1.8)
        assert got > 0


def test_02_calendar_anchors():
    with criterion(2, "day-index anchors"):
        anchors = {1: date(1973, 1, 1),
                   731: date(1975, 1, 1),
                   13879: date(2010, 12, 31),
                   13880: date(2011, 1, 1),
                   15340: date(2014, 12, 31)}
        for j, d in anchors.items():
            assert index_to_date(j) == d
            assert date_to_index(d) == j


def test_03_miner_matches_naive_oracle():
    with criterion(3, "miner equals quadruple-loop oracle"):
        started = time.perf_counter()
        f = build_mining_fixture()
        plan = mining.plan_shards(f.space.pairs(), 2)
        rules = mining.mine(f.anoms, f.target, HEAT, f.space, f.learning, plan,
                            f.extreme_days, workers=2)
        oracle = naive_mine(f.anomalies, f.missing, f.series_ids,
                            f.space.pairs(), f.leads, f.lengths, f.learning,
                            f.extreme_days)
        assert len(rules) == len(oracle) > 0
        for r, o in zip(rules, oracle):
            assert (r.i1, r.i2, r.n, r.l) == o[:4]
            assert abs(r.min_thr - o[4]) <= 1e-9
            assert abs(r.max_thr - o[5]) <= 1e-9
            assert r.firings == o[6]
            assert r.quorum == o[7]
        elapsed = time.perf_counter() - started
        assert elapsed < 60.0, f"oracle equivalence took {elapsed:.1f}s"

        # spot-check thresholds beyond the qualifying rules as well
        rng = np.random.default_rng(77)
        for _ in range(200):
            i1, i2 = sorted(rng.choice(f.series_ids, size=2))
            l = int(rng.choice(f.leads))
            n = int(rng.choice(f.lengths))
            got = mining.compute_thresholds(f.anoms, int(i1), int(i2), l, n,
                                            f.learning, f.extreme_days)
            lo = hi = None
            for j in range(f.learning[0], f.learning[1] + 1):
                if j in set(f.extreme_days):
                    continue
                s = mining.window_sum(f.anoms, int(i1), int(i2), l, n, j)
                if s is None:
                    continue
                lo = s if lo is None else min(lo, s)
                hi = s if hi is None else max(hi, s)
            assert got == (lo, hi) or (
                abs(got[0] - lo) <= 1e-9 and abs(got[1] - hi) <= 1e-9)


def test_04_rule_files_byte_identical_across_sharding():
    with criterion(4, "shard/worker determinism"):
        started = time.perf_counter()
        f = build_mining_fixture()
        reference = None
        for shards in (1, 2, 8):
            for workers in (1, 4):
                plan = mining.plan_shards(f.space.pairs(), shards)
                rules = mining.mine(f.anoms, f.target, HEAT, f.space,
                                    f.learning, plan, f.extreme_days,
                                    workers=workers)
                buf = io.StringIO()
                for rule in rules:
                    buf.write(json.dumps(mining.rule_to_json(rule)))
                    buf.write("\n")
                blob = buf.getvalue().encode()
                if reference is None:
                    reference = blob
                    assert blob
                else:
                    assert blob == reference, (shards, workers)
        elapsed = time.perf_counter() - started
        assert elapsed < 180.0, f"determinism sweep took {elapsed:.1f}s"


def test_05_planted_teleconnection_recovered(demo_pipeline):
    with criterion(5, "planted teleconnection recovery"):
        started = time.perf_counter()
        p = demo_pipeline

        planted = [r for r in p.retained
                   if {r.i1, r.i2} == {p.pred_a, p.pred_b} and r.l == p.planted_lead]
        assert planted, "planted predictor pair not recovered"
        assert planted[0].seasonal_window is not None

        wanted = p.planted_validation_days
        flagged = wanted & {f.target_day for f in p.forecasts}
        assert len(flagged) >= 0.8 * len(wanted)

        planted_sectors = {s for s in
                           (f.sector for f in p.forecasts if f.target_day in wanted)}
        hits = [o for o in p.outcomes
                if o.cluster.sector in planted_sectors and o.cluster.direction == HEAT]
        assert hits
        assert all(o.classification == EXTREME_HIT for o in hits)
        elapsed = time.perf_counter() - started
        assert elapsed < 30.0, f"planted fixture took {elapsed:.1f}s"


def test_06_envelope_soundness_spot_checks():
    with criterion(6, "envelope soundness, 10000 spot checks"):
        f = build_mining_fixture()
        plan = mining.plan_shards(f.space.pairs(), 1)
        rules = mining.mine(f.anoms, f.target, HEAT, f.space, f.learning, plan,
                            f.extreme_days)
        assert rules
        ext = set(f.extreme_days)
        non_extreme = np.array([j for j in range(f.learning[0], f.learning[1] + 1)
                                if j not in ext])
        rng = np.random.default_rng(123)
        for _ in range(10_000):
            rule = rules[int(rng.integers(len(rules)))]
            j = int(non_extreme[int(rng.integers(non_extreme.size))])
            s = mining.window_sum(f.anoms, rule.i1, rule.i2, rule.l, rule.n, j)
            if s is not None:
                assert rule.min_thr <= s <= rule.max_thr


def _rule_with_firing_months(months):
    firings = []
    for k, (year, month) in enumerate(months):
        firings.append((date_to_index(date(year, month, 1 + k % 27)),
                        mining.ABOVE_MAX))
    firings.sort()
    return mining.Rule(target_series=1, direction=HEAT, i1=2, i2=3, n=1, l=30,
                       min_thr=-1.0, max_thr=1.0, firings=tuple(firings),
                       quorum=tuple(d for d, _ in firings[:4]))


def test_07_seasonal_filter_narratives():
    with criterion(7, "seasonal concentration narratives"):
        scattered = _rule_with_firing_months(
            [(1987, 8), (1996, 4), (1997, 5), (2009, 12)])
        decision = seasonal.concentrated(scattered)
        assert not decision.retained

        bunched = _rule_with_firing_months(
            [(1976, 5), (1997, 5), (1998, 5), (1999, 5),
             (1998, 6), (1999, 6), (1976, 9)])
        decision = seasonal.concentrated(bunched)
        assert decision.retained
        assert decision.window.contains(5)
        assert decision.window.contains(6)


def _table_fixture():
    """Thirteen scored clusters against twenty-two observed wave groups.

    Eight clusters verify as extreme hits on the sector's best day, five
    match the anomaly sign only; exactly the eight hit clusters touch a wave
    group each, out of twenty-two groups in the validation years.
    """
    hit_rows = [
        # (sector, observation (value, baseline, sd), wave days, extended)
        (Sector(2011, 3, 2), (68.6, 54.9, 4.7), [date(2011, 3, 15)], False),
        (Sector(2011, 6, 2), (82.0, 72.2, 3.7), [date(2011, 6, 18)], False),
        (Sector(2011, 7, 2), (86.8, 76.6, 3.3),
         [date(2011, 7, 11), date(2011, 7, 12), date(2011, 7, 13)], False),
        (Sector(2013, 11, 1), (72.1, 61.6, 4.7), [date(2013, 11, 6)], False),
        (Sector(2014, 1, 2), (58.9, 51.6, 3.1), [date(2014, 1, 19)], False),
        (Sector(2014, 7, 2), (83.8, 76.8, 2.7),
         [date(2014, 7, 19), date(2014, 7, 20)], False),
        # long-lead forecast verified against the immediately following sector
        (Sector(2014, 9, 1), (84.3, 73.8, 3.3),
         [date(2014, 9, 19), date(2014, 9, 20)], True),
        (Sector(2014, 11, 3), (73.9, 55.6, 5.0),
         [date(2014, 11, 23 + k) for k in range(8)], False),
    ]
    same_sign_rows = [
        (Sector(2011, 2, 3), (55.1, 53.1, 4.0)),
        (Sector(2011, 10, 3), (70.2, 66.3, 4.3)),
        (Sector(2012, 1, 2), (52.3, 52.0, 3.7)),
        (Sector(2012, 12, 1), (55.7, 54.8, 3.6)),
        (Sector(2013, 12, 2), (54.7, 53.1, 3.6)),
    ]
    filler_waves = [date(2011, 4, 2), date(2011, 8, 5), date(2011, 9, 9),
                    date(2012, 2, 14), date(2012, 5, 3), date(2012, 8, 21),
                    date(2013, 3, 11), date(2013, 6, 2), date(2013, 8, 17),
                    date(2013, 10, 26), date(2014, 2, 8), date(2014, 4, 15),
                    date(2014, 6, 6), date(2014, 10, 10)]

    outcomes, waves = [], []
    for sector, (value, baseline, sd), wave_days, extended in hit_rows:
        obs = Observation(best_day=date_to_index(wave_days[0]), value=value,
                          baseline=baseline, sd=sd, anomaly=value - baseline)
        got = classify(obs, HEAT)
        assert got == EXTREME_HIT, (sector, got)
        cluster = ForecastCluster(sector=sector, direction=HEAT,
                                  forecasts=(), rule_keys=())
        outcomes.append(Outcome(cluster, True, got, obs, extended))
        days = tuple(date_to_index(d) for d in wave_days)
        waves.append(WaveGroup(1, HEAT, days[0], days[-1], days))
    for sector, (value, baseline, sd) in same_sign_rows:
        obs = Observation(best_day=date_to_index(sector.first_date()),
                          value=value, baseline=baseline, sd=sd,
                          anomaly=value - baseline)
        got = classify(obs, HEAT)
        assert got == SAME_SIGN, (sector, got)
        cluster = ForecastCluster(sector=sector, direction=HEAT,
                                  forecasts=(), rule_keys=())
        outcomes.append(Outcome(cluster, True, got, obs, False))
    for d in filler_waves:
        j = date_to_index(d)
        waves.append(WaveGroup(1, HEAT, j, j, (j,)))
    return outcomes, waves


def test_08_scorer_arithmetic_case_study():
    with criterion(8, "scorer accuracy arithmetic"):
        outcomes, waves = _table_fixture()
        assert len(outcomes) == 13
        assert len(waves) == 22
        rep = report(outcomes, waves)
        assert rep.counts["extreme_hit"] == 8
        assert rep.counts["same_sign"] == 5
        assert rep.counts["waves_hit"] == 8
        assert percent(rep.recall_waves) == "36.4"
        assert percent(rep.precision_clusters) == "61.5"
        assert percent(rep.sign_accuracy) == "100.0"


def test_09_nonanticipativity(demo_pipeline):
    with criterion(9, "nonanticipative forecasts"):
        p = demo_pipeline
        rules = {r.key: r for r in p.retained}
        assert p.forecasts
        for f in p.forecasts:
            assert f.target_day - f.issue_day == rules[f.rule_key].l
            assert rules[f.rule_key].l >= 14

        # vandalize everything after each forecast's issue day: the forecast
        # must still be emitted unchanged from the pristine prefix
        probe = min(p.forecasts, key=lambda f: f.issue_day)
        rule = rules[probe.rule_key]
        vandalized = p.anoms.anomalies.copy()
        vandalized[:, probe.issue_day:] = 1e9
        anoms2 = AnomalyMatrix.from_anomalies(p.anoms.series_ids,
                                              np.nan_to_num(vandalized),
                                              p.anoms.missing)
        again = predict.scan([rule], anoms2, p.validation)
        assert any(f.issue_day == probe.issue_day and
                   f.target_day == probe.target_day and f.side == probe.side
                   for f in again)


def test_10_kmz_validity(tmp_path):
    with criterion(10, "KMZ validity"):
        kml = build_kml([Placemark("Station One", 36.83, 7.82, "summary"),
                         Placemark("Station Two", -10.5, 140.0, "more")])
        data = package_kmz(kml)
        assert data[:4] == b"PK\x03\x04"
        with zipfile.ZipFile(io.BytesIO(data)) as zf:
            assert zf.namelist() == ["doc.kml"]
            text = zf.read("doc.kml").decode("utf-8")
        assert text == kml                       # byte-exact round trip
        root = ET.fromstring(text)
        assert root.tag == f"{{{KML_NAMESPACE}}}kml"
        coords = root.find(f".//{{{KML_NAMESPACE}}}Point/"
                           f"{{{KML_NAMESPACE}}}coordinates").text
        assert coords == "7.82,36.83,0"          # longitude leads


def test_11_single_pair_full_grid_under_five_seconds():
    with criterion(11, "full-grid pair search under 5 s"):
        rng = np.random.default_rng(11)
        n_days = 15340
        values = rng.normal(60, 8, size=(3, n_days))
        missing = np.zeros((3, n_days), dtype=bool)
        metas = [SeriesMeta(series_id=k + 1, name=f"s{k + 1}", kind="index_daily")
                 for k in range(3)]
        panel = build_panel([(m, values[i], missing[i])
                             for i, m in enumerate(metas)])
        clim = compute_climatology(panel, (1973, 2013))
        anoms = anomalize(panel, clim)
        learning = (731, 13879)
        assert learning[1] - learning[0] + 1 == 13149
        events = detect_extremes(anoms, clim, 1, learning)
        ext = [e.day for e in events if e.direction == HEAT]
        assert len(ext) > 50

        space = mining.SearchSpace((2, 3), tuple(range(14, 366)),
                                   tuple(range(1, 366)), allow_diagonal=False)
        plan = mining.plan_shards(space.pairs(), 1)
        assert len(space.pairs()) == 1
        started = time.perf_counter()
        mining.mine(anoms, 1, HEAT, space, learning, plan, ext, workers=1)
        elapsed = time.perf_counter() - started
        assert elapsed < 5.0, f"full grid took {elapsed:.2f}s"
