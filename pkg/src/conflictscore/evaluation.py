"""Score whole submissions, aggregate per window, and rank submissions."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

from .core import EvaluationWindow, Level, ObservationPanel, window_of_month
from .metrics import ForecastSet, IgnConfig, MisConfig, score_cell

METRICS = ("crps", "ign", "mis")
ROW_COLUMNS = ("unit_id", "month_id", "window", *METRICS)


class ScoringError(ValueError):
    """A submission cannot be scored as given."""


def score_threads() -> int:
    try:
        return max(1, int(os.environ.get("SCORE_THREADS", "1")))
    except ValueError:
        return 1


def overall_mean(window_means: Mapping[str, float] | Sequence[float]) -> float:
    """Unweighted mean of per-window means (the 'overall' row)."""
    values = list(window_means.values()) if isinstance(window_means, Mapping) else list(window_means)
    if not values:
        raise ScoringError("no windows to aggregate")
    if any(not math.isfinite(v) for v in values):
        raise ScoringError("non-finite window aggregate")
    return float(sum(values) / len(values))


@dataclass
class ScoreTable:
    """Per-cell scores of one submission plus their aggregates.

    ``rows`` has columns unit_id, month_id, window, crps, ign, mis, sorted by
    window order, then unit, then month.
    """

    level: Level
    rows: pd.DataFrame
    window_order: tuple[str, ...]
    coverage_gaps: pd.DataFrame = field(
        default_factory=lambda: pd.DataFrame({"unit_id": [], "month_id": []}, dtype="int64"))

    def __post_init__(self):
        missing = [c for c in ROW_COLUMNS if c not in self.rows.columns]
        if missing:
            raise ScoringError(f"score rows lack columns {missing}")
        bad = ~np.isfinite(self.rows[list(METRICS)].to_numpy(dtype=float))
        if bad.any():
            i = int(np.argwhere(bad)[0][0])
            r = self.rows.iloc[i]
            raise ScoringError(f"unscorable cell unit {r.unit_id} month {r.month_id}")

    @property
    def keys(self) -> set[tuple[int, int]]:
        return set(zip(self.rows["unit_id"].tolist(), self.rows["month_id"].tolist()))

    def window_means(self) -> pd.DataFrame:
        means = self.rows.groupby("window", sort=False)[list(METRICS)].mean()
        order = [w for w in self.window_order if w in means.index]
        return means.loc[order]

    def overall(self) -> dict[str, float]:
        means = self.window_means()
        return {m: overall_mean(means[m].tolist()) for m in METRICS}

    def summary(self) -> pd.DataFrame:
        """Window rows plus an 'Overall' row, as in a benchmark table."""
        means = self.window_means()
        overall = pd.DataFrame([self.overall()], index=["Overall"])
        return pd.concat([means, overall])

    @classmethod
    def from_rows(cls, level: Level, rows: pd.DataFrame,
                  window_order: Sequence[str] | None = None) -> "ScoreTable":
        rows = rows.loc[:, list(ROW_COLUMNS)].copy()
        rows["unit_id"] = rows["unit_id"].astype("int64")
        rows["month_id"] = rows["month_id"].astype("int64")
        rows["window"] = rows["window"].astype(str)
        if window_order is None:
            first = rows.groupby("window")["month_id"].min().sort_values(kind="stable")
            window_order = tuple(first.index)
        return cls(level, rows.reset_index(drop=True), tuple(window_order))


def _score_chunk(items, ign_cfg, mis_cfg):
    return [score_cell(f.draws, y, ign_cfg, mis_cfg) for f, y in items]


def score_submission(forecasts: Iterable[ForecastSet], panel: ObservationPanel,
                     windows: Sequence[EvaluationWindow], ign_cfg: IgnConfig = IgnConfig(),
                     mis_cfg: MisConfig = MisConfig(), threads: int | None = None) -> ScoreTable:
    forecasts = list(forecasts)
    windows = list(windows)
    seen = set()
    items, meta, missing, stray = [], [], [], []
    for f in forecasts:
        if f.unit.level is not panel.level:
            raise ScoringError(f"forecast for {f.unit} does not match panel level {panel.level.value}")
        key = (f.unit.id, f.month)
        if key in seen:
            raise ScoringError(f"duplicate forecast for unit {key[0]} month {key[1]}")
        seen.add(key)
        w = window_of_month(windows, f.month)
        if w is None:
            stray.append(key)
            continue
        if key not in panel:
            missing.append(key)
            continue
        items.append((f, panel.get(*key)))
        meta.append((key[0], key[1], w.name))
    if stray:
        raise ScoringError(f"{len(stray)} forecast cells fall outside every window, e.g. {sorted(stray)[:5]}")
    if missing:
        raise ScoringError(f"{len(missing)} forecast cells have no observation, e.g. {sorted(missing)[:5]}")

    threads = threads or score_threads()
    if threads > 1 and len(items) > 1:
        size = -(-len(items) // (threads * 4))
        chunks = [items[i:i + size] for i in range(0, len(items), size)]
        with ThreadPoolExecutor(threads) as pool:
            triples = [t for part in pool.map(_score_chunk, chunks, [ign_cfg] * len(chunks),
                                              [mis_cfg] * len(chunks)) for t in part]
    else:
        triples = _score_chunk(items, ign_cfg, mis_cfg)

    rows = pd.DataFrame({
        "unit_id": np.array([m[0] for m in meta], dtype=np.int64),
        "month_id": np.array([m[1] for m in meta], dtype=np.int64),
        "window": [m[2] for m in meta],
        "crps": np.array([t.crps for t in triples], dtype=float),
        "ign": np.array([t.ign for t in triples], dtype=float),
        "mis": np.array([t.mis for t in triples], dtype=float),
    })
    order = {w.name: i for i, w in enumerate(windows)}
    rows["_w"] = rows["window"].map(order)
    rows = rows.sort_values(["_w", "unit_id", "month_id"], kind="stable").drop(columns="_w")

    window_months = {m for w in windows for m in w.forecast_months}
    gaps = [(u, m) for u, m, _ in panel.cells() if m in window_months and (u, m) not in seen]
    gap_frame = pd.DataFrame(gaps, columns=["unit_id", "month_id"], dtype="int64")
    present = [w.name for w in windows if w.name in set(rows["window"])]
    return ScoreTable(panel.level, rows.reset_index(drop=True), tuple(present), gap_frame)


@dataclass(frozen=True)
class LeaderboardEntry:
    name: str
    crps: float
    ign: float
    mis: float
    rank: int


def rank_submissions(tables: Mapping[str, ScoreTable]) -> list[LeaderboardEntry]:
    """Rank by overall CRPS; the other scores are reported only."""
    if not tables:
        return []
    names = sorted(tables)
    ref = tables[names[0]].keys
    for name in names[1:]:
        if tables[name].keys != ref:
            raise ScoringError(f"{name!r} covers different cells than {names[0]!r}; scores are not comparable")
    overall = {name: tables[name].overall() for name in names}
    ordered = sorted(names, key=lambda n: (overall[n]["crps"], n))
    return [LeaderboardEntry(n, overall[n]["crps"], overall[n]["ign"], overall[n]["mis"], i + 1)
            for i, n in enumerate(ordered)]
