"""File formats and submission validation.

Submissions are long tables with one row per draw::

    cm:  month_id, country_id, draw, prediction
    pgm: priogrid_gid, month_id, draw, prediction

all int32. Within a cell, draws are taken in physical row order; Fourier
resampling in the ignorance score depends on that order, so tools that
rewrite submission files must not reorder rows inside a cell.

Observation files hold ``<unit column>, month_id, fatalities``. Point
submissions hold ``<unit column>, month_id, prediction`` with a real-valued
prediction. Parquet is the container; ``.csv`` is accepted as well.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np
import pandas as pd
import pyarrow as pa
import pyarrow.parquet as pq

from .benchmarks import poisson_expand
from .core import DomainError, Level, ObservationPanel, UnitId
from .evaluation import METRICS, ScoreTable
from .metrics import MAX_DRAWS, MIN_DRAWS, ForecastSet

ID_ALIASES = {"priogrid_id": "priogrid_gid"}
VALUE = "prediction"
FATALITIES = "fatalities"


class FileFormatError(ValueError):
    """A file cannot be read or lacks the structure needed to interpret it."""


def read_table(path: str | Path) -> pd.DataFrame:
    path = Path(path)
    try:
        if path.suffix.lower() == ".csv":
            df = pd.read_csv(path)
        else:
            df = pq.read_table(path).to_pandas()
    except FileNotFoundError:
        raise
    except Exception as exc:
        raise FileFormatError(f"{path}: cannot read as {'CSV' if path.suffix == '.csv' else 'parquet'}: {exc}") from exc
    return df.rename(columns=ID_ALIASES)


def write_table(df: pd.DataFrame, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix.lower() == ".csv":
        df.to_csv(path, index=False, lineterminator="\n")
    else:
        table = pa.Table.from_pandas(df, preserve_index=False)
        pq.write_table(table.replace_schema_metadata(None), path)


def detect_level(df: pd.DataFrame) -> Level:
    has_cm = Level.CM.id_column in df.columns
    has_pgm = Level.PGM.id_column in df.columns
    if has_cm == has_pgm:
        raise FileFormatError("cannot tell the level: need exactly one of country_id, priogrid_gid")
    return Level.CM if has_cm else Level.PGM


def _columns(level: Level, value: str) -> list[str]:
    if level is Level.CM:
        return ["month_id", "country_id", "draw", value]
    return ["priogrid_gid", "month_id", "draw", value]


# ---------------------------------------------------------------------------
# validation


class Violation(str, enum.Enum):
    MISSING_COLUMN = "missing-column"
    COLUMN_TYPE = "column-type"
    NULL_VALUE = "null-value"
    NEGATIVE_COUNT = "negative count"
    DUPLICATE = "duplicate-row"
    DRAW_COUNT_LOW = f"draw-count below {MIN_DRAWS}"
    DRAW_COUNT_HIGH = f"draw-count above {MAX_DRAWS}"
    DRAW_IDS = "draw-ids not 0..n-1"
    UNKNOWN_UNIT = "unknown unit"
    UNKNOWN_CELL = "cell outside universe"
    MISSING_CELL = "missing cell"
    BAD_UNIT_ID = "invalid unit id"


@dataclass
class ValidationReport:
    level: Level
    issues: list[tuple[Violation, str]] = field(default_factory=list)

    def add(self, kind: Violation, detail: str) -> None:
        self.issues.append((kind, detail))

    @property
    def valid(self) -> bool:
        return not self.issues

    @property
    def classes(self) -> set[Violation]:
        return {k for k, _ in self.issues}

    def format(self) -> str:
        if self.valid:
            return "valid: no violations\n"
        lines = [f"{len(self.issues)} violation(s)"]
        lines += [f"  [{k.value}] {d}" for k, d in self.issues]
        return "\n".join(lines) + "\n"


def _examples(frame: pd.DataFrame, cols: list[str], n: int = 3) -> str:
    rows = frame[cols].head(n).to_dict("records")
    return ", ".join(str(r) for r in rows)


def validate(df: pd.DataFrame, level: Level | str, universe: set[tuple[int, int]] | None = None) -> ValidationReport:
    """Check a submission table; never raises on malformed content."""
    level = Level(level)
    report = ValidationReport(level)
    df = df.rename(columns=ID_ALIASES)
    unit_col = level.id_column
    need = [unit_col, "month_id", "draw", VALUE]
    absent = [c for c in need if c not in df.columns]
    for c in absent:
        report.add(Violation.MISSING_COLUMN, f"column {c!r} is required at level {level.value}")
    if absent:
        return report
    for c in need:
        if df[c].isna().any():
            report.add(Violation.NULL_VALUE, f"column {c!r} has {int(df[c].isna().sum())} null value(s)")
        elif not pd.api.types.is_integer_dtype(df[c]) or pd.api.types.is_bool_dtype(df[c]):
            report.add(Violation.COLUMN_TYPE, f"column {c!r} has type {df[c].dtype}, expected int32")
        elif df[c].size and (df[c].max() > np.iinfo(np.int32).max or df[c].min() < np.iinfo(np.int32).min):
            report.add(Violation.COLUMN_TYPE, f"column {c!r} overflows int32")
    if not report.valid:
        return report

    neg = df[df[VALUE] < 0]
    if len(neg):
        report.add(Violation.NEGATIVE_COUNT, f"{len(neg)} row(s), e.g. {_examples(neg, need)}")
    lo, hi = (1, 720 * 360) if level is Level.PGM else (1, np.iinfo(np.int32).max)
    bad_ids = df[(df[unit_col] < lo) | (df[unit_col] > hi) | (df["month_id"] < 1)]
    if len(bad_ids):
        report.add(Violation.BAD_UNIT_ID, f"{len(bad_ids)} row(s), e.g. {_examples(bad_ids, need)}")

    dup = df[df.duplicated([unit_col, "month_id", "draw"], keep=False)]
    if len(dup):
        report.add(Violation.DUPLICATE, f"{len(dup)} row(s) share (unit, month, draw), e.g. {_examples(dup, need)}")

    cells = df.groupby([unit_col, "month_id"], sort=True)["draw"].agg(["size", "min", "max", "nunique"])
    low = cells[cells["size"] < MIN_DRAWS]
    if len(low):
        report.add(Violation.DRAW_COUNT_LOW,
                   f"{len(low)} cell(s), e.g. {[(*k, int(n)) for k, n in low['size'].head(3).items()]}")
    high = cells[cells["size"] > MAX_DRAWS]
    if len(high):
        report.add(Violation.DRAW_COUNT_HIGH,
                   f"{len(high)} cell(s), e.g. {[(*k, int(n)) for k, n in high['size'].head(3).items()]}")
    ids_ok = (cells["min"] == 0) & (cells["max"] == cells["size"] - 1) & (cells["nunique"] == cells["size"])
    if not ids_ok.all():
        bad = cells[~ids_ok]
        report.add(Violation.DRAW_IDS, f"{len(bad)} cell(s), e.g. {list(bad.index[:3])}")

    if universe is not None:
        keys = set((int(u), int(m)) for u, m in cells.index)
        known_units = {u for u, _ in universe}
        unknown_units = sorted({u for u, _ in keys} - known_units)
        if unknown_units:
            report.add(Violation.UNKNOWN_UNIT, f"{len(unknown_units)} unit(s), e.g. {unknown_units[:5]}")
        outside = sorted(k for k in keys - universe if k[0] in known_units)
        if outside:
            report.add(Violation.UNKNOWN_CELL, f"{len(outside)} cell(s), e.g. {outside[:5]}")
        missing = sorted(universe - keys)
        if missing:
            report.add(Violation.MISSING_CELL, f"{len(missing)} cell(s), e.g. {missing[:5]}")
    return report


def read_universe(path: str | Path, level: Level | str) -> set[tuple[int, int]]:
    level = Level(level)
    df = read_table(path)
    cols = [level.id_column, "month_id"]
    if any(c not in df.columns for c in cols):
        raise FileFormatError(f"{path}: universe needs columns {cols}")
    return set(zip(df[cols[0]].astype(int).tolist(), df[cols[1]].astype(int).tolist()))


# ---------------------------------------------------------------------------
# submissions


def forecasts_from_frame(df: pd.DataFrame, level: Level | str | None = None) -> list[ForecastSet]:
    """Group a submission table into per-cell forecasts, keeping row order within each cell."""
    df = df.rename(columns=ID_ALIASES)
    level = detect_level(df) if level is None else Level(level)
    unit_col = level.id_column
    for c in (unit_col, "month_id", VALUE):
        if c not in df.columns:
            raise FileFormatError(f"submission lacks column {c!r}")
    values = df[VALUE].to_numpy()
    out = []
    for (u, m), idx in sorted(df.groupby([unit_col, "month_id"], sort=False).indices.items()):
        out.append(ForecastSet(UnitId(level, int(u)), int(m), values[idx]))
    return out


def forecasts_to_frame(forecasts: Iterable[ForecastSet]) -> pd.DataFrame:
    forecasts = sorted(forecasts, key=lambda f: (f.month, f.unit.id))
    if not forecasts:
        raise DomainError("no forecasts to write")
    level = forecasts[0].unit.level
    if any(f.unit.level is not level for f in forecasts):
        raise DomainError("forecasts mix levels")
    sizes = np.array([f.n for f in forecasts])
    frame = pd.DataFrame({
        "month_id": np.repeat([f.month for f in forecasts], sizes).astype(np.int32),
        level.id_column: np.repeat([f.unit.id for f in forecasts], sizes).astype(np.int32),
        "draw": np.concatenate([np.arange(n, dtype=np.int32) for n in sizes]),
        VALUE: np.concatenate([f.draws for f in forecasts]).astype(np.int32),
    })
    return frame[_columns(level, VALUE)]


def read_submission(path: str | Path, level: Level | str | None = None) -> list[ForecastSet]:
    return forecasts_from_frame(read_table(path), level)


def write_submission(forecasts: Iterable[ForecastSet], path: str | Path) -> None:
    write_table(forecasts_to_frame(forecasts), path)


def load_point_submission(path_or_frame, n_draws: int = 1000, seed: int = 0,
                          level: Level | str | None = None) -> list[ForecastSet]:
    """Expand point predictions into Poisson samples, one keyed stream per cell."""
    df = path_or_frame if isinstance(path_or_frame, pd.DataFrame) else read_table(path_or_frame)
    df = df.rename(columns=ID_ALIASES)
    level = detect_level(df) if level is None else Level(level)
    unit_col = level.id_column
    if VALUE not in df.columns or "month_id" not in df.columns:
        raise FileFormatError(f"point submission needs columns {unit_col}, month_id, {VALUE}")
    if df.duplicated([unit_col, "month_id"]).any():
        raise FileFormatError("point submission has more than one row per cell")
    bad = df[~(df[VALUE] >= 0)]
    if len(bad):
        rows = ", ".join(f"row {i}: {v}" for i, v in bad[VALUE].head(5).items())
        raise DomainError(f"negative or missing point predictions ({rows})")
    out = []
    for u, m, point in zip(df[unit_col].astype(int), df["month_id"].astype(int), df[VALUE].astype(float)):
        out.append(ForecastSet(UnitId(level, u), m, poisson_expand(point, n_draws, seed, level, u, m)))
    return sorted(out, key=lambda f: (f.month, f.unit.id))


def is_point_submission(df: pd.DataFrame) -> bool:
    return "draw" not in df.columns


# ---------------------------------------------------------------------------
# observations


def panel_from_frame(df: pd.DataFrame) -> ObservationPanel:
    df = df.rename(columns=ID_ALIASES)
    level = detect_level(df)
    cols = [level.id_column, "month_id", FATALITIES]
    missing = [c for c in cols if c not in df.columns]
    if missing:
        raise FileFormatError(f"observation file lacks columns {missing}")
    if df[cols].isna().any().any():
        raise FileFormatError("observation file has null values")
    return ObservationPanel.from_records(level, df[cols[0]], df["month_id"], df[FATALITIES])


def read_observations(path: str | Path) -> ObservationPanel:
    return panel_from_frame(read_table(path))


def panel_to_frame(panel: ObservationPanel) -> pd.DataFrame:
    units, months, values = panel.to_arrays()
    return pd.DataFrame({
        panel.level.id_column: units.astype(np.int32),
        "month_id": months.astype(np.int32),
        FATALITIES: values.astype(np.int32),
    })


def write_observations(panel: ObservationPanel, path: str | Path) -> None:
    write_table(panel_to_frame(panel), path)


# ---------------------------------------------------------------------------
# score tables


def score_table_to_frame(table: ScoreTable) -> pd.DataFrame:
    frame = table.rows.rename(columns={"unit_id": table.level.id_column}).copy()
    frame[table.level.id_column] = frame[table.level.id_column].astype(np.int32)
    frame["month_id"] = frame["month_id"].astype(np.int32)
    return frame


def write_score_table(table: ScoreTable, path: str | Path) -> None:
    write_table(score_table_to_frame(table), path)


def read_score_table(path: str | Path) -> ScoreTable:
    df = read_table(path)
    level = detect_level(df)
    missing = [c for c in ("month_id", "window", *METRICS) if c not in df.columns]
    if missing:
        raise FileFormatError(f"{path}: score table lacks columns {missing}")
    return ScoreTable.from_rows(level, df.rename(columns={level.id_column: "unit_id"}))
