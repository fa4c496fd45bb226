"""Scoring and benchmarking of sample-based forecasts of conflict fatalities."""

from .core import (BinScheme, DomainError, EvaluationWindow, GridTopology, Level, ObservationPanel,
                   UnitId, bin_index, date_from_month_id, month_id_from_date, neighbors)
from .evaluation import ScoreTable, rank_submissions, score_submission
from .metrics import (ForecastSet, IgnConfig, MisConfig, ResampleMode, crps_ensemble,
                      ignorance_score, interval_score, quantile_type7, resample_to_n)

__all__ = [
    "BinScheme", "DomainError", "EvaluationWindow", "ForecastSet", "GridTopology", "IgnConfig",
    "Level", "MisConfig", "ObservationPanel", "ResampleMode", "ScoreTable", "UnitId", "bin_index",
    "crps_ensemble", "date_from_month_id", "ignorance_score", "interval_score", "month_id_from_date",
    "neighbors", "quantile_type7", "rank_submissions", "resample_to_n", "score_submission",
]
