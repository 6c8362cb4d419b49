"""Exhaustive search for paired precursor rules behind extreme-temperature days.

A candidate rule (i1, i2, n, l) reads the two series' anomalies summed over
the n-day window ending l days before a target day.  Non-extreme learning
days define a [Min, Max] envelope for that signal; the rule fires on extreme
days whose signal escapes the envelope strictly, and qualifies when at least
four firings are pairwise separated by more than 30 days under a greedy
chronological selection.

Window sums are prefix differences, so each is O(1); per (pair, n) the
envelope for every lead-time comes from range-max/min sparse tables over the
window-sum axis, queried on the runs of consecutive non-extreme days.  Every
comparison uses the exact double-precision prefix-difference values that
window_sum() returns, which makes thresholds and firings bit-reproducible
for any shard count and worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import json
import numpy as np

from .calendars import date_to_index, index_to_date
from .climatology import AnomalyMatrix

ABOVE_MAX = "above_max"
BELOW_MIN = "below_min"

#: firings must be more than this many days apart to count toward the quorum
QUORUM_SPACING_DAYS = 30
#: minimum number of spaced firings for a rule to qualify
QUORUM_SIZE = 4

LEAD_BOUNDS = (14, 365)
LENGTH_BOUNDS = (1, 365)


class SearchSpaceError(ValueError):
    """Invalid search-space or shard-plan configuration."""


@dataclass(frozen=True)
class SearchSpace:
    """Candidate predictor ids and the (lead, window-length) grid to sweep."""

    series_ids: tuple[int, ...]
    lead_times: tuple[int, ...]
    window_lengths: tuple[int, ...]
    allow_diagonal: bool = True

    def __post_init__(self) -> None:
        # an empty id set is legal and simply mines nothing
        if not self.lead_times or not self.window_lengths:
            raise SearchSpaceError("lead_times and window_lengths must be non-empty")
        lo, hi = LEAD_BOUNDS
        for l in self.lead_times:
            if not lo <= l <= hi:
                raise SearchSpaceError(f"lead_time {l} outside [{lo}, {hi}]")
        lo, hi = LENGTH_BOUNDS
        for n in self.window_lengths:
            if not lo <= n <= hi:
                raise SearchSpaceError(f"window_length {n} outside [{lo}, {hi}]")

    def pairs(self) -> list[tuple[int, int]]:
        return enumerate_pairs(self.series_ids, self.allow_diagonal)


def enumerate_pairs(series_ids: Iterable[int], allow_diagonal: bool = True,
                    ) -> list[tuple[int, int]]:
    """Unordered pairs {i1, i2} enumerated once, ascending, with i1 <= i2."""
    ids = sorted(set(series_ids))
    out = []
    for a_pos, a in enumerate(ids):
        for b in ids[a_pos:]:
            if a == b and not allow_diagonal:
                continue
            out.append((a, b))
    return out


@dataclass(frozen=True)
class ShardPlan:
    """Deterministic round-robin partition of the pair set."""

    shard_count: int
    assignments: dict[tuple[int, int], int] = field(hash=False)

    def pairs_of(self, shard_id: int) -> list[tuple[int, int]]:
        return [p for p, s in self.assignments.items() if s == shard_id]


def plan_shards(pairs: Sequence[tuple[int, int]], shard_count: int) -> ShardPlan:
    """Assign pairs to shards round-robin by enumeration order."""
    if shard_count < 1:
        raise SearchSpaceError(f"shard_count must be >= 1, got {shard_count}")
    assignments = {pair: k % shard_count for k, pair in enumerate(pairs)}
    if len(assignments) != len(pairs):
        raise SearchSpaceError("duplicate pair in shard planning")
    return ShardPlan(shard_count=shard_count, assignments=assignments)


@dataclass(frozen=True)
class Rule:
    """A qualified six-parameter precursor rule plus its learning-sample firings."""

    target_series: int
    direction: str
    i1: int
    i2: int
    n: int
    l: int
    min_thr: float
    max_thr: float
    firings: tuple[tuple[int, str], ...]     # (extreme day, side), chronological
    quorum: tuple[int, ...]                  # greedy >30-day-spaced selection
    seasonal_window: object | None = None    # set by the seasonal filter

    @property
    def key(self) -> str:
        return (f"{self.target_series}:{self.direction}:"
                f"{self.i1}:{self.i2}:{self.n}:{self.l}")

    def with_window(self, window) -> "Rule":
        return replace(self, seasonal_window=window)


def _rule_sort_key(rule: Rule):
    return (rule.i1, rule.i2, rule.l, rule.n, rule.direction)


def window_sum(anoms: AnomalyMatrix, i1: int, i2: int, l: int, n: int,
               j: int) -> float | None:
    """Paired anomaly sum over the n days ending l days before day j.

    None when the window starts before day 1, ends outside the panel, or
    touches a missing day in either series.
    """
    end = j - l
    start = end - n
    if start < 0 or end > anoms.n_days or n < 1:
        return None
    r1, r2 = anoms.row_of(i1), anoms.row_of(i2)
    mp = anoms.miss_prefix
    if mp[r1, end] - mp[r1, start] != 0 or mp[r2, end] - mp[r2, start] != 0:
        return None
    p = anoms.prefix
    return float((p[r1, end] - p[r1, start]) + (p[r2, end] - p[r2, start]))


def pair_window_sums(anoms: AnomalyMatrix, i1: int, i2: int, n: int,
                     ) -> tuple[np.ndarray, np.ndarray]:
    """All n-day paired window sums, indexed by window end day e in 0..n_days.

    Returns (sums, defined); sums[e] is meaningful only where defined[e].
    The arithmetic matches window_sum() bit for bit.
    """
    sums = np.zeros(anoms.n_days + 1)
    defined = np.zeros(anoms.n_days + 1, dtype=bool)
    if n < 1 or n > anoms.n_days:
        return sums, defined
    r1, r2 = anoms.row_of(i1), anoms.row_of(i2)
    p1, p2 = anoms.prefix[r1], anoms.prefix[r2]
    m1, m2 = anoms.miss_prefix[r1], anoms.miss_prefix[r2]
    sums[n:] = (p1[n:] - p1[:-n]) + (p2[n:] - p2[:-n])
    defined[n:] = ((m1[n:] - m1[:-n]) == 0) & ((m2[n:] - m2[:-n]) == 0)
    return sums, defined


def compute_thresholds(anoms: AnomalyMatrix, i1: int, i2: int, l: int, n: int,
                       learning_range: tuple[int, int],
                       extreme_days: Iterable[int],
                       ) -> tuple[float, float] | None:
    """(Min, Max) of the window sum over defined, non-extreme learning days.

    None when no learning day has a defined window, in which case the
    (i1, i2, l, n) candidate is unusable.
    """
    sums, defined = pair_window_sums(anoms, i1, i2, n)
    lr0, lr1 = learning_range
    js = np.arange(lr0, lr1 + 1)
    ends = js - l
    ok = (ends >= 0) & (ends <= anoms.n_days)
    ok &= defined[np.clip(ends, 0, anoms.n_days)]
    ext = np.fromiter(extreme_days, dtype=np.int64)
    if ext.size:
        ok &= ~np.isin(js, ext)
    if not ok.any():
        return None
    vals = sums[ends[ok]]
    return float(vals.min()), float(vals.max())


def find_firings(anoms: AnomalyMatrix, i1: int, i2: int, l: int, n: int,
                 min_thr: float, max_thr: float, extreme_days: Iterable[int],
                 ) -> list[tuple[int, str]]:
    """Extreme days whose defined window sum escapes [min_thr, max_thr] strictly."""
    sums, defined = pair_window_sums(anoms, i1, i2, n)
    firings = []
    for j in sorted(extreme_days):
        e = j - l
        if e < 0 or e > anoms.n_days or not defined[e]:
            continue
        s = sums[e]
        if s > max_thr:
            firings.append((j, ABOVE_MAX))
        elif s < min_thr:
            firings.append((j, BELOW_MIN))
    return firings


def qualify(firings: Sequence[tuple[int, str]]) -> tuple[int, ...] | None:
    """Greedy chronological quorum: keep a firing only if it lands more than
    30 days after the last kept one; qualifies at four or more."""
    selected: list[int] = []
    for day, _ in firings:
        if not selected or day - selected[-1] > QUORUM_SPACING_DAYS:
            selected.append(day)
    if len(selected) >= QUORUM_SIZE:
        return tuple(selected)
    return None


class _SearchContext:
    """Shared read-only precomputation for one mine() invocation.

    Everything here depends only on the learning range, the extreme-day set,
    and the (lead, length) grid, so it is built once and read by every
    worker.  The e-axis (window end day) is padded on the left by the
    largest lead so that every gather index stays in bounds.
    """

    def __init__(self, anoms: AnomalyMatrix, space: SearchSpace,
                 learning_range: tuple[int, int], extreme_days: Iterable[int]):
        self.lr0, self.lr1 = learning_range
        if not 1 <= self.lr0 <= self.lr1 <= anoms.n_days:
            raise SearchSpaceError(
                f"learning range {learning_range} outside panel days "
                f"[1, {anoms.n_days}]")
        self.leads = np.array(sorted(space.lead_times), dtype=np.int64)
        self.lengths = sorted(space.window_lengths)
        self.ext_days = np.array(
            sorted(d for d in set(extreme_days) if self.lr0 <= d <= self.lr1),
            dtype=np.int64)

        self.pad = int(self.leads.max())
        self.e_size = self.pad + anoms.n_days + 1   # padded index = e + pad

        runs = []
        cursor = self.lr0
        for d in self.ext_days:
            if d > cursor:
                runs.append((cursor, int(d) - 1))
            cursor = int(d) + 1
        if cursor <= self.lr1:
            runs.append((cursor, self.lr1))
        self.runs = runs

        if runs:
            starts = np.array([a for a, _ in runs], dtype=np.int64)
            ends = np.array([b for _, b in runs], dtype=np.int64)
            lengths = ends - starts + 1
            ks = np.array([int(m).bit_length() - 1 for m in lengths], dtype=np.int64)
            hs = np.int64(1) << ks
            self.levels = int(ks.max()) + 1
            # flat gather indices into a (levels, e_size) table, one row of
            # lags per run; both ends of the standard two-block RMQ query
            base_left = ks * self.e_size + starts + self.pad
            base_right = ks * self.e_size + ends + self.pad - hs + 1
            self.idx_left = base_left[:, None] - self.leads[None, :]
            self.idx_right = base_right[:, None] - self.leads[None, :]
        else:
            self.levels = 1
            self.idx_left = self.idx_right = None

        if self.ext_days.size:
            self.ext_idx = (self.ext_days[:, None] + self.pad) - self.leads[None, :]
        else:
            self.ext_idx = None


def _range_table(g: np.ndarray, levels: int, op) -> np.ndarray:
    """Sparse table T[k][i] = op-fold of g[i : i + 2**k] (clipped at the end)."""
    t = np.empty((levels, g.size), dtype=g.dtype)
    t[0] = g
    for k in range(1, levels):
        h = 1 << (k - 1)
        op(t[k - 1, :-h], t[k - 1, h:], out=t[k, :-h])
        t[k, -h:] = t[k - 1, -h:]
    return t


def _mine_pair(ctx: _SearchContext, anoms: AnomalyMatrix, target_series: int,
               direction: str, i1: int, i2: int) -> list[Rule]:
    rules: list[Rule] = []
    if ctx.ext_idx is None or ctx.idx_left is None:
        return rules
    for n in ctx.lengths:
        sums, defined = pair_window_sums(anoms, i1, i2, n)

        g_max = np.full(ctx.e_size, -np.inf)
        g_min = np.full(ctx.e_size, np.inf)
        g_ext = np.full(ctx.e_size, np.nan)
        g_max[ctx.pad:] = np.where(defined, sums, -np.inf)
        g_min[ctx.pad:] = np.where(defined, sums, np.inf)
        g_ext[ctx.pad:] = np.where(defined, sums, np.nan)

        t_max = _range_table(g_max, ctx.levels, np.maximum).ravel()
        t_min = _range_table(g_min, ctx.levels, np.minimum).ravel()
        max_l = np.maximum(t_max[ctx.idx_left], t_max[ctx.idx_right]).max(axis=0)
        min_l = np.minimum(t_min[ctx.idx_left], t_min[ctx.idx_right]).min(axis=0)

        ext_sums = g_ext[ctx.ext_idx]            # (extremes, leads)
        with np.errstate(invalid="ignore"):
            above = ext_sums > max_l[None, :]
            below = ext_sums < min_l[None, :]
        counts = above.sum(axis=0) + below.sum(axis=0)
        candidates = np.nonzero(np.isfinite(max_l) & (counts >= QUORUM_SIZE))[0]

        for li in candidates:
            firings = []
            for k in range(ctx.ext_days.size):
                if above[k, li]:
                    firings.append((int(ctx.ext_days[k]), ABOVE_MAX))
                elif below[k, li]:
                    firings.append((int(ctx.ext_days[k]), BELOW_MIN))
            quorum = qualify(firings)
            if quorum is None:
                continue
            rules.append(Rule(
                target_series=target_series, direction=direction,
                i1=i1, i2=i2, n=n, l=int(ctx.leads[li]),
                min_thr=float(min_l[li]), max_thr=float(max_l[li]),
                firings=tuple(firings), quorum=quorum))
    return rules


def mine_shard(anoms: AnomalyMatrix, target_series: int, direction: str,
               space: SearchSpace, learning_range: tuple[int, int],
               plan: ShardPlan, shard_id: int,
               extreme_days: Iterable[int]) -> list[Rule]:
    """Mine one shard's pairs; output sorted by (i1, i2, l, n, direction)."""
    ctx = _SearchContext(anoms, space, learning_range, extreme_days)
    rules: list[Rule] = []
    for i1, i2 in plan.pairs_of(shard_id):
        rules.extend(_mine_pair(ctx, anoms, target_series, direction, i1, i2))
    rules.sort(key=_rule_sort_key)
    return rules


def mine(anoms: AnomalyMatrix, target_series: int, direction: str,
         space: SearchSpace, learning_range: tuple[int, int], plan: ShardPlan,
         extreme_days: Iterable[int], workers: int = 1) -> list[Rule]:
    """Sweep every pair in the plan over the full (lead, length) grid.

    The result is identical for any shard count and worker count: shards
    partition the pair set, workers only change scheduling, and the merged
    list is sorted by (i1, i2, l, n, direction).
    """
    for sid in space.series_ids:
        anoms.row_of(sid)   # raises KeyError for unknown predictors
    expected = set(space.pairs())
    if set(plan.assignments) != expected:
        raise SearchSpaceError("shard plan does not cover the search space pairs")

    ctx = _SearchContext(anoms, space, learning_range, extreme_days)

    def run_shard(shard_id: int) -> list[Rule]:
        rules: list[Rule] = []
        for i1, i2 in plan.pairs_of(shard_id):
            rules.extend(_mine_pair(ctx, anoms, target_series, direction, i1, i2))
        return rules

    shard_ids = list(range(plan.shard_count))
    if workers <= 1 or plan.shard_count == 1:
        shard_results = [run_shard(s) for s in shard_ids]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            shard_results = list(pool.map(run_shard, shard_ids))

    rules = [r for chunk in shard_results for r in chunk]
    rules.sort(key=_rule_sort_key)
    return rules


def rule_to_json(rule: Rule) -> dict:
    """JSON-friendly form; days render as ISO dates."""
    window = None
    if rule.seasonal_window is not None:
        window = {"start_month": rule.seasonal_window.start_month,
                  "length_months": rule.seasonal_window.length_months}
    return {
        "target": rule.target_series,
        "direction": rule.direction,
        "i1": rule.i1,
        "i2": rule.i2,
        "n": rule.n,
        "l": rule.l,
        "min": rule.min_thr,
        "max": rule.max_thr,
        "firings": [{"date": index_to_date(d).isoformat(), "side": side}
                    for d, side in rule.firings],
        "quorum": [index_to_date(d).isoformat() for d in rule.quorum],
        "seasonal_window": window,
    }


def rule_from_json(doc: dict) -> Rule:
    from datetime import date

    from .seasonal import SeasonalWindow

    window = None
    if doc.get("seasonal_window") is not None:
        w = doc["seasonal_window"]
        window = SeasonalWindow(start_month=int(w["start_month"]),
                                length_months=int(w["length_months"]))
    return Rule(
        target_series=int(doc["target"]), direction=doc["direction"],
        i1=int(doc["i1"]), i2=int(doc["i2"]), n=int(doc["n"]), l=int(doc["l"]),
        min_thr=float(doc["min"]), max_thr=float(doc["max"]),
        firings=tuple((date_to_index(date.fromisoformat(f["date"])), f["side"])
                      for f in doc["firings"]),
        quorum=tuple(date_to_index(date.fromisoformat(d)) for d in doc["quorum"]),
        seasonal_window=window,
    )


def write_rules_jsonl(rules: Sequence[Rule], path: str | Path) -> None:
    with Path(path).open("w") as fh:
        for rule in rules:
            fh.write(json.dumps(rule_to_json(rule)))
            fh.write("\n")


def read_rules_jsonl(path: str | Path) -> list[Rule]:
    rules = []
    with Path(path).open() as fh:
        for line in fh:
            line = line.strip()
            if line:
                rules.append(rule_from_json(json.loads(line)))
    return rules
