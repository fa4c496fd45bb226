"""Units of analysis, the month calendar, grid topology, bins and windows."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping

import numpy as np

N_ROWS = 360
N_COLS = 720
N_CELLS = N_ROWS * N_COLS
CELL_SIZE = 0.5
WINDOW_LENGTH = 12


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class Level(str, enum.Enum):
    CM = "cm"
    PGM = "pgm"

    @property
    def id_column(self) -> str:
        return "country_id" if self is Level.CM else "priogrid_gid"


@dataclass(frozen=True, order=True)
class UnitId:
    level: Level
    id: int

    def __post_init__(self):
        if self.level is Level.PGM:
            if not 1 <= self.id <= N_CELLS:
                raise DomainError(f"priogrid gid {self.id} outside [1, {N_CELLS}]")
        elif self.id <= 0:
            raise DomainError(f"country id must be positive, got {self.id}")

    def __str__(self):
        return f"{self.level.value}:{self.id}"


# ---------------------------------------------------------------------------
# calendar: month_id 1 == January 1980


def month_id_from_date(year: int, month: int) -> int:
    if year < 1980:
        raise DomainError(f"year {year} precedes the 1980 epoch")
    if not 1 <= month <= 12:
        raise DomainError(f"month {month} not in 1..12")
    return (year - 1980) * 12 + month


def date_from_month_id(month_id: int) -> tuple[int, int]:
    if month_id < 1:
        raise DomainError(f"month_id must be positive, got {month_id}")
    year, rem = divmod(month_id - 1, 12)
    return 1980 + year, rem + 1


def parse_year_month(text: str) -> int:
    """Parse ``YYYY-MM`` into a month_id."""
    try:
        year, month = (int(p) for p in text.strip().split("-"))
    except ValueError:
        raise DomainError(f"expected YYYY-MM, got {text!r}") from None
    return month_id_from_date(year, month)


def format_month_id(month_id: int) -> str:
    year, month = date_from_month_id(month_id)
    return f"{year:04d}-{month:02d}"


# ---------------------------------------------------------------------------
# evaluation windows


@dataclass(frozen=True)
class EvaluationWindow:
    name: str
    train_cutoff: int
    forecast_months: tuple[int, ...]

    def __post_init__(self):
        months = tuple(int(m) for m in self.forecast_months)
        object.__setattr__(self, "forecast_months", months)
        if len(months) != WINDOW_LENGTH:
            raise DomainError(f"window {self.name!r} needs {WINDOW_LENGTH} months, got {len(months)}")
        if any(b - a != 1 for a, b in zip(months, months[1:])):
            raise DomainError(f"window {self.name!r} forecast months are not consecutive")
        if months[0] <= self.train_cutoff:
            raise DomainError(f"window {self.name!r} forecasts months at or before its cutoff")

    @classmethod
    def starting(cls, name: str, train_cutoff: int, first_month: int) -> "EvaluationWindow":
        return cls(name, train_cutoff, tuple(range(first_month, first_month + WINDOW_LENGTH)))

    def __contains__(self, month_id: int) -> bool:
        return self.forecast_months[0] <= month_id <= self.forecast_months[-1]

    @property
    def steps(self) -> tuple[int, ...]:
        """Forecast horizon of each month, counted in months after the cutoff."""
        return tuple(m - self.train_cutoff for m in self.forecast_months)


def yearly_window(year: int) -> EvaluationWindow:
    """Calendar-year window trained on data up to October of the year before."""
    return EvaluationWindow.starting(
        str(year), month_id_from_date(year - 1, 10), month_id_from_date(year, 1)
    )


def true_future_window() -> EvaluationWindow:
    return EvaluationWindow.starting(
        "true_future", month_id_from_date(2024, 4), month_id_from_date(2024, 7)
    )


def challenge_windows() -> list[EvaluationWindow]:
    return [yearly_window(y) for y in range(2018, 2024)] + [true_future_window()]


def parse_windows(text: str) -> list[EvaluationWindow]:
    """Parse window config lines ``name,YYYY-MM,YYYY-MM`` (cutoff, first forecast month).

    Blank lines and ``#`` comments are skipped.
    """
    windows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 3:
            raise DomainError(f"line {lineno}: expected 'name,cutoff,first_month', got {raw!r}")
        name, cutoff, first = parts
        windows.append(EvaluationWindow.starting(name, parse_year_month(cutoff), parse_year_month(first)))
    names = [w.name for w in windows]
    if len(set(names)) != len(names):
        raise DomainError("duplicate window names")
    return windows


def read_windows(path: str | Path) -> list[EvaluationWindow]:
    return parse_windows(Path(path).read_text(encoding="utf-8"))


def format_windows(windows: Iterable[EvaluationWindow]) -> str:
    return "".join(
        f"{w.name},{format_month_id(w.train_cutoff)},{format_month_id(w.forecast_months[0])}\n"
        for w in windows
    )


def window_of_month(windows: Iterable[EvaluationWindow], month_id: int) -> EvaluationWindow | None:
    found = [w for w in windows if month_id in w]
    if len(found) > 1:
        raise DomainError(f"month {month_id} belongs to more than one window")
    return found[0] if found else None


# ---------------------------------------------------------------------------
# grid topology

_QUEEN = [(dr, dc) for dr in (-1, 0, 1) for dc in (-1, 0, 1) if (dr, dc) != (0, 0)]
_ROOK = [(-1, 0), (1, 0), (0, -1), (0, 1)]


def gid_to_row_col(gid: int) -> tuple[int, int]:
    """1-based (row, col); row 1 is the southernmost band, col 1 starts at 180W."""
    if not 1 <= gid <= N_CELLS:
        raise DomainError(f"gid {gid} outside [1, {N_CELLS}]")
    row, col = divmod(gid - 1, N_COLS)
    return row + 1, col + 1


def row_col_to_gid(row: int, col: int) -> int:
    if not (1 <= row <= N_ROWS and 1 <= col <= N_COLS):
        raise DomainError(f"cell ({row}, {col}) outside the grid")
    return (row - 1) * N_COLS + col


def gid_center(gid: int) -> tuple[float, float]:
    """(lat, lon) of the cell centre."""
    row, col = gid_to_row_col(gid)
    return -90 + (row - 0.5) * CELL_SIZE, -180 + (col - 0.5) * CELL_SIZE


@dataclass(frozen=True)
class GridTopology:
    """The 0.5 degree grid restricted to a region mask.

    ``region_mask=None`` means the full 720 x 360 grid.
    """

    region_mask: frozenset[int] | None = None
    contiguity: str = "queen"

    def __post_init__(self):
        if self.contiguity not in ("queen", "rook"):
            raise DomainError(f"unknown contiguity {self.contiguity!r}")
        if self.region_mask is not None:
            mask = frozenset(int(g) for g in self.region_mask)
            bad = [g for g in mask if not 1 <= g <= N_CELLS]
            if bad:
                raise DomainError(f"region mask holds gids outside the grid, e.g. {bad[0]}")
            object.__setattr__(self, "region_mask", mask)

    n_rows = N_ROWS
    n_cols = N_COLS
    cell_size = CELL_SIZE

    def __contains__(self, gid: int) -> bool:
        return self.region_mask is None or gid in self.region_mask

    def neighbors(self, gid: int) -> frozenset[int]:
        row, col = gid_to_row_col(gid)
        offsets = _QUEEN if self.contiguity == "queen" else _ROOK
        out = set()
        for dr, dc in offsets:
            r, c = row + dr, col + dc
            if 1 <= r <= N_ROWS and 1 <= c <= N_COLS:
                g = (r - 1) * N_COLS + c
                if g in self:
                    out.add(g)
        return frozenset(out)


def neighbors(gid: int | UnitId, topo: GridTopology) -> frozenset[int]:
    if isinstance(gid, UnitId):
        if gid.level is not Level.PGM:
            raise DomainError("neighbors are only defined for grid cells")
        gid = gid.id
    return topo.neighbors(gid)


def read_region_mask(path: str | Path) -> frozenset[int]:
    gids = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        try:
            gids.append(int(line))
        except ValueError:
            raise DomainError(f"{path}:{lineno}: not an integer gid: {line!r}") from None
    return frozenset(gids)


def write_region_mask(path: str | Path, gids: Iterable[int]) -> None:
    Path(path).write_text("".join(f"{g}\n" for g in sorted(gids)), encoding="utf-8")


# ---------------------------------------------------------------------------
# bins


@dataclass(frozen=True)
class BinScheme:
    # lower edge of each bin; the last bin is open-ended
    lower_edges: tuple[int, ...] = (0, 1, 3, 6, 11, 26, 51, 101, 251, 501, 1001)

    def __post_init__(self):
        edges = self.lower_edges
        if edges[0] != 0 or any(b <= a for a, b in zip(edges, edges[1:])):
            raise DomainError("bin edges must start at 0 and increase strictly")

    def __len__(self):
        return len(self.lower_edges)

    @property
    def intervals(self) -> list[tuple[int, float]]:
        upper = [e - 1 for e in self.lower_edges[1:]] + [float("inf")]
        return list(zip(self.lower_edges, upper))

    def labels(self) -> list[str]:
        return [f"{lo}" if lo == hi else (f"{lo}-" if hi == float("inf") else f"{lo}-{hi}")
                for lo, hi in self.intervals]

    def index(self, values) -> np.ndarray:
        """Vectorised bin index for an array of non-negative values."""
        values = np.asarray(values)
        if values.size and values.min() < 0:
            raise DomainError("bin_index needs non-negative values")
        return np.searchsorted(self.lower_edges, values, side="right") - 1


DEFAULT_BINS = BinScheme()


def bin_index(y: int, scheme: BinScheme = DEFAULT_BINS) -> int:
    if y < 0:
        raise DomainError(f"bin_index needs y >= 0, got {y}")
    return int(scheme.index(np.array([y]))[0])


# ---------------------------------------------------------------------------
# observations


@dataclass(frozen=True)
class ObservationPanel:
    """Observed fatalities per (unit, month) at one level.

    Stored as one contiguous int array per unit, starting at ``first_month[unit]``.
    Units are addressed by their integer id; the level is a property of the panel.
    """

    level: Level
    first_month: Mapping[int, int]
    values: Mapping[int, np.ndarray]
    _units: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if set(self.first_month) != set(self.values):
            raise DomainError("first_month and values disagree on units")
        for uid, arr in self.values.items():
            UnitId(self.level, uid)
            if arr.ndim != 1:
                raise DomainError(f"unit {uid}: values must be one-dimensional")
            if arr.size and arr.min() < 0:
                raise DomainError(f"unit {uid}: negative fatalities")
            arr.setflags(write=False)
        object.__setattr__(self, "_units", tuple(sorted(self.values)))

    @classmethod
    def from_records(cls, level: Level, unit_ids, month_ids, fatalities) -> "ObservationPanel":
        unit_ids = np.asarray(unit_ids, dtype=np.int64)
        month_ids = np.asarray(month_ids, dtype=np.int64)
        fatalities = np.asarray(fatalities)
        if not np.issubdtype(fatalities.dtype, np.integer):
            if not np.all(np.isfinite(fatalities)) or np.any(fatalities != np.round(fatalities)):
                raise DomainError("fatalities must be integers")
        fatalities = fatalities.astype(np.int64)
        if fatalities.size and fatalities.min() < 0:
            raise DomainError("fatalities must be non-negative")
        order = np.lexsort((month_ids, unit_ids))
        u, m, f = unit_ids[order], month_ids[order], fatalities[order]
        dup = (u[1:] == u[:-1]) & (m[1:] == m[:-1])
        if dup.any():
            i = int(np.argmax(dup))
            raise DomainError(f"duplicate observation for unit {u[i]}, month {m[i]}")
        first, values = {}, {}
        bounds = np.flatnonzero(np.diff(u)) + 1
        for seg_u, seg_m, seg_f in zip(np.split(u, bounds), np.split(m, bounds), np.split(f, bounds)):
            if seg_u.size == 0:
                continue
            uid = int(seg_u[0])
            if np.any(np.diff(seg_m) != 1):
                raise DomainError(f"unit {uid}: observed months are not contiguous")
            first[uid] = int(seg_m[0])
            values[uid] = seg_f.copy()
        return cls(level, first, values)

    @property
    def units(self) -> tuple[int, ...]:
        return self._units

    def month_range(self, unit: int) -> tuple[int, int]:
        first = self.first_month[unit]
        return first, first + len(self.values[unit]) - 1

    def __contains__(self, key: tuple[int, int]) -> bool:
        unit, month = key
        if unit not in self.values:
            return False
        lo, hi = self.month_range(unit)
        return lo <= month <= hi

    def get(self, unit: int, month: int) -> int:
        if (unit, month) not in self:
            raise KeyError((unit, month))
        return int(self.values[unit][month - self.first_month[unit]])

    def history(self, unit: int, start: int, end: int) -> np.ndarray:
        """Observed values for months start..end inclusive; raises KeyError on any gap."""
        if unit not in self.values:
            raise KeyError(f"unit {unit} not in panel")
        lo, hi = self.month_range(unit)
        if start < lo or end > hi:
            raise KeyError(f"unit {unit} lacks months {max(start, lo) if start < lo else hi + 1}..")
        return self.values[unit][start - lo:end - lo + 1]

    def cells(self) -> Iterator[tuple[int, int, int]]:
        for uid in self._units:
            first = self.first_month[uid]
            for k, v in enumerate(self.values[uid]):
                yield uid, first + k, int(v)

    def __len__(self):
        return sum(len(v) for v in self.values.values())

    def to_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        units, months, vals = [], [], []
        for uid in self._units:
            arr = self.values[uid]
            units.append(np.full(len(arr), uid, dtype=np.int64))
            months.append(np.arange(self.first_month[uid], self.first_month[uid] + len(arr), dtype=np.int64))
            vals.append(np.asarray(arr, dtype=np.int64))
        if not units:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty, empty
        return np.concatenate(units), np.concatenate(months), np.concatenate(vals)

    def with_value(self, unit: int, month: int, value: int) -> "ObservationPanel":
        """Copy of the panel with one cell replaced."""
        if (unit, month) not in self:
            raise KeyError((unit, month))
        values = {u: np.array(v) for u, v in self.values.items()}
        values[unit][month - self.first_month[unit]] = value
        return ObservationPanel(self.level, dict(self.first_month), values)
