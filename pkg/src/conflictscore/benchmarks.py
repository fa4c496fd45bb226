"""Benchmark forecast generators.

Each generator turns an observation panel and a set of evaluation windows into
forecasts for every unit and every forecast month of each window, using only
data up to the window's training cutoff.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .core import DomainError, EvaluationWindow, GridTopology, Level, ObservationPanel, UnitId
from .metrics import MAX_DRAWS, MIN_DRAWS, ForecastSet
from .streams import keyed_rng


class BenchmarkKind(str, enum.Enum):
    EXACTLY_ZERO = "exactly_zero"
    LAST_HISTORICAL = "last_historical"
    CONFLICTOLOGY_WINDOW = "conflictology12"
    CONFLICTOLOGY_NEIGHBORS = "conflictology_neighbors12"
    BOOTSTRAP_POOL = "bootstrap240"


class MissingHistory(KeyError):
    """Observations a generator needs are absent from the panel."""

    def __init__(self, problems: list[str]):
        self.problems = problems
        shown = "; ".join(problems[:10])
        more = f" (+{len(problems) - 10} more)" if len(problems) > 10 else ""
        super().__init__(f"missing history: {shown}{more}")

    def __str__(self):
        return self.args[0]


@dataclass(frozen=True)
class BenchmarkSpec:
    kind: BenchmarkKind
    lookback_months: int = 12
    use_neighbors: bool = False
    n_draws: int = 1000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", BenchmarkKind(self.kind))
        if self.lookback_months < 1:
            raise DomainError("lookback_months must be at least 1")
        if self.kind in (BenchmarkKind.EXACTLY_ZERO, BenchmarkKind.LAST_HISTORICAL,
                         BenchmarkKind.BOOTSTRAP_POOL):
            _check_n_draws(self.n_draws)

    @classmethod
    def default(cls, kind, seed: int = 0, n_draws: int = 1000) -> "BenchmarkSpec":
        kind = BenchmarkKind(kind)
        lookback = 240 if kind is BenchmarkKind.BOOTSTRAP_POOL else 12
        return cls(kind, lookback, kind is BenchmarkKind.CONFLICTOLOGY_NEIGHBORS, n_draws, seed)


def _check_n_draws(n_draws: int) -> None:
    if not MIN_DRAWS <= n_draws <= MAX_DRAWS:
        raise DomainError(f"n_draws must lie in [{MIN_DRAWS}, {MAX_DRAWS}], got {n_draws}")


def poisson_expand(point: float, n_draws: int, seed: int, *key) -> np.ndarray:
    """``n_draws`` Poisson(point) variates from the stream keyed by ``(seed, *key)``."""
    if not point >= 0:
        raise DomainError(f"Poisson mean must be non-negative, got {point}")
    _check_n_draws(n_draws)
    return keyed_rng(seed, "poisson", *key).poisson(point, n_draws).astype(np.int64)


def tile_to_min(values: np.ndarray, n_min: int = MIN_DRAWS) -> np.ndarray:
    """Repeat whole copies of ``values`` until there are at least ``n_min`` of them."""
    values = np.asarray(values)
    if values.size == 0:
        raise DomainError("cannot tile an empty sample")
    reps = -(-n_min // values.size)
    return np.tile(values, reps) if reps > 1 else values


def _units(level: Level, units: Iterable[int | UnitId]) -> list[int]:
    out = []
    for u in units:
        if isinstance(u, UnitId):
            if u.level is not level:
                raise DomainError(f"unit {u} does not match panel level {level.value}")
            u = u.id
        out.append(int(u))
    return sorted(set(out))


def gen_exactly_zero(level: Level, units, windows: Iterable[EvaluationWindow],
                     n_draws: int = 1000) -> list[ForecastSet]:
    _check_n_draws(n_draws)
    zeros = np.zeros(n_draws, dtype=np.int32)
    return [ForecastSet(UnitId(level, u), m, zeros)
            for w in windows for u in _units(level, units) for m in w.forecast_months]


def gen_last_historical(panel: ObservationPanel, units, windows: Iterable[EvaluationWindow],
                        n_draws: int = 1000, seed: int = 0) -> list[ForecastSet]:
    out, missing = [], []
    for w in windows:
        for u in _units(panel.level, units):
            if (u, w.train_cutoff) not in panel:
                missing.append(f"unit {u} month {w.train_cutoff} (window {w.name})")
                continue
            point = panel.get(u, w.train_cutoff)
            unit = UnitId(panel.level, u)
            for m in w.forecast_months:
                draws = poisson_expand(point, n_draws, seed, panel.level, u, m)
                out.append(ForecastSet(unit, m, draws))
    if missing:
        raise MissingHistory(missing)
    return out


def gen_conflictology_window(panel: ObservationPanel, units, windows: Iterable[EvaluationWindow],
                             lookback: int = 12, use_neighbors: bool = False,
                             topo: GridTopology | None = None) -> list[ForecastSet]:
    """Use the last ``lookback`` observed values (of the unit, plus its grid
    neighbours if asked) as the forecast sample for every month in the window."""
    if use_neighbors:
        if panel.level is not Level.PGM:
            raise DomainError("the neighbour variant needs a grid-cell panel")
        if topo is None:
            topo = GridTopology(frozenset(panel.units))
    out, missing = [], []
    for w in windows:
        start, end = w.train_cutoff - lookback + 1, w.train_cutoff
        for u in _units(panel.level, units):
            sources = [u]
            if use_neighbors:
                sources += sorted(topo.neighbors(u))
            parts = []
            for s in sources:
                try:
                    parts.append(panel.history(s, start, end))
                except KeyError:
                    missing.append(f"unit {s} months {start}..{end} (window {w.name}, forecast unit {u})")
            if len(parts) != len(sources):
                continue
            draws = tile_to_min(np.concatenate(parts))
            unit = UnitId(panel.level, u)
            out.extend(ForecastSet(unit, m, draws) for m in w.forecast_months)
    if missing:
        raise MissingHistory(missing)
    return out


def bootstrap_pool(panel: ObservationPanel, start: int, end: int,
                   pool_units: Iterable[int] | None = None) -> np.ndarray:
    """All observed values in months start..end across the pool universe."""
    lo = min((panel.month_range(u)[0] for u in panel.units), default=None)
    if lo is None or start < lo:
        raise MissingHistory([f"panel starts at month {lo}, pool needs month {start}"])
    members = panel.units if pool_units is None else sorted(set(pool_units))
    parts = []
    for u in members:
        if u not in panel.values:
            continue
        first, last = panel.month_range(u)
        a, b = max(first, start), min(last, end)
        if a <= b:
            parts.append(panel.history(u, a, b))
    pool = np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)
    if pool.size == 0:
        raise DomainError(f"empty bootstrap pool for months {start}..{end}")
    return pool


def gen_bootstrap_pool(panel: ObservationPanel, units, windows: Iterable[EvaluationWindow],
                       lookback: int = 240, n_draws: int = 1000, seed: int = 0,
                       pool_units: Iterable[int] | None = None) -> list[ForecastSet]:
    _check_n_draws(n_draws)
    out = []
    for w in windows:
        pool = bootstrap_pool(panel, w.train_cutoff - lookback + 1, w.train_cutoff, pool_units)
        for u in _units(panel.level, units):
            unit = UnitId(panel.level, u)
            for m in w.forecast_months:
                idx = keyed_rng(seed, "bootstrap", panel.level, u, m).integers(0, pool.size, n_draws)
                out.append(ForecastSet(unit, m, pool[idx]))
    return out


def generate(spec: BenchmarkSpec, panel: ObservationPanel, windows: Iterable[EvaluationWindow],
             units=None, topo: GridTopology | None = None) -> list[ForecastSet]:
    """Dispatch on ``spec.kind``; ``units`` defaults to every unit in the panel."""
    windows = list(windows)
    units = panel.units if units is None else units
    kind = spec.kind
    if kind is BenchmarkKind.EXACTLY_ZERO:
        return gen_exactly_zero(panel.level, units, windows, spec.n_draws)
    if kind is BenchmarkKind.LAST_HISTORICAL:
        return gen_last_historical(panel, units, windows, spec.n_draws, spec.seed)
    if kind in (BenchmarkKind.CONFLICTOLOGY_WINDOW, BenchmarkKind.CONFLICTOLOGY_NEIGHBORS):
        return gen_conflictology_window(panel, units, windows, spec.lookback_months,
                                        spec.use_neighbors, topo)
    pool_units = None if topo is None or topo.region_mask is None else topo.region_mask
    return gen_bootstrap_pool(panel, units, windows, spec.lookback_months, spec.n_draws,
                              spec.seed, pool_units)
