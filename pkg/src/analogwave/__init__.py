"""Precursor-rule mining and long-range heat/cold wave forecasting."""

from .calendars import Sector, date_to_index, index_to_date, third_of
from .climatology import (AnomalyMatrix, Climatology, ExtremeEvent, WaveGroup,
                          anomalize, compute_climatology, detect_extremes,
                          group_waves)
from .config import RunConfig, build_config
from .ingest import RawPanel, SeriesMeta, build_panel, ingest_manifest
from .kmz import Placemark, build_kml, package_kmz
from .mining import (Rule, SearchSpace, ShardPlan, compute_thresholds,
                     enumerate_pairs, find_firings, mine, plan_shards, qualify,
                     window_sum)
from .predict import Forecast, ForecastCluster, cluster, filter_by_season, scan
from .score import Outcome, ScoreReport, classify, observe, report
from .seasonal import SeasonalWindow, concentrated, filter_rules

__version__ = "0.1.0"
