import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conflictscore.core import (
    N_CELLS, BinScheme, DomainError, EvaluationWindow, GridTopology, Level, ObservationPanel,
    UnitId, bin_index, challenge_windows, date_from_month_id, format_windows, gid_center,
    gid_to_row_col, month_id_from_date, neighbors, parse_windows, read_region_mask,
    row_col_to_gid, true_future_window, window_of_month, write_region_mask,
)
from conflictscore.core import yearly_window


@pytest.mark.parametrize("year,month,expected", [(1980, 1, 1), (1990, 1, 121), (2024, 4, 532)])
def test_month_id_examples(year, month, expected):
    assert month_id_from_date(year, month) == expected
    assert date_from_month_id(expected) == (year, month)


@pytest.mark.parametrize("year,month", [(1979, 12), (2000, 0), (2000, 13)])
def test_month_id_domain(year, month):
    with pytest.raises(DomainError):
        month_id_from_date(year, month)


def test_month_id_round_trip_exhaustive():
    for y in range(1980, 2101):
        for m in range(1, 13):
            assert date_from_month_id(month_id_from_date(y, m)) == (y, m)


def test_unit_id_invariants():
    UnitId(Level.PGM, 1)
    UnitId(Level.PGM, N_CELLS)
    for bad in (0, N_CELLS + 1):
        with pytest.raises(DomainError):
            UnitId(Level.PGM, bad)
    with pytest.raises(DomainError):
        UnitId(Level.CM, 0)


# --- windows ---------------------------------------------------------------

def test_yearly_window_cuts_off_in_october():
    w = yearly_window(2018)
    assert date_from_month_id(w.train_cutoff) == (2017, 10)
    assert date_from_month_id(w.forecast_months[0]) == (2018, 1)
    assert date_from_month_id(w.forecast_months[-1]) == (2018, 12)
    assert w.steps == tuple(range(3, 15))


def test_true_future_window():
    w = true_future_window()
    assert date_from_month_id(w.train_cutoff) == (2024, 4)
    assert date_from_month_id(w.forecast_months[0]) == (2024, 7)
    assert date_from_month_id(w.forecast_months[-1]) == (2025, 6)
    assert w.steps == tuple(range(3, 15))


def test_window_invariants():
    with pytest.raises(DomainError):
        EvaluationWindow("short", 10, tuple(range(11, 22)))
    with pytest.raises(DomainError):
        EvaluationWindow("gap", 10, tuple(range(11, 22)) + (30,))
    with pytest.raises(DomainError):
        EvaluationWindow.starting("early", 10, 10)


def test_window_config_round_trip():
    windows = challenge_windows()
    text = format_windows(windows)
    assert text.splitlines()[0] == "2018,2017-10,2018-01"
    assert text.splitlines()[-1] == "true_future,2024-04,2024-07"
    assert parse_windows("# comment\n\n" + text) == windows


def test_window_config_errors():
    with pytest.raises(DomainError):
        parse_windows("2018,2017-10\n")
    with pytest.raises(DomainError):
        parse_windows("a,2017-10,2018-01\na,2018-10,2019-01\n")
    with pytest.raises(DomainError):
        parse_windows("a,2017-13,2018-01\n")


def test_window_of_month():
    ws = [yearly_window(2018), yearly_window(2019)]
    assert window_of_month(ws, month_id_from_date(2019, 5)).name == "2019"
    assert window_of_month(ws, month_id_from_date(2020, 5)) is None
    overlapping = ws + [EvaluationWindow.starting("x", month_id_from_date(2018, 5), month_id_from_date(2018, 6))]
    with pytest.raises(DomainError):
        window_of_month(overlapping, month_id_from_date(2018, 7))


# --- grid ------------------------------------------------------------------

def _brute_neighbors(gid, mask=None, offsets=None):
    """Enumerate row/col offsets directly."""
    row, col = (gid - 1) // 720 + 1, (gid - 1) % 720 + 1
    out = set()
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            if (dr, dc) == (0, 0):
                continue
            if offsets == "rook" and dr and dc:
                continue
            r, c = row + dr, col + dc
            if 1 <= r <= 360 and 1 <= c <= 720:
                g = (r - 1) * 720 + c
                if mask is None or g in mask:
                    out.add(g)
    return out


def test_gid_layout():
    assert gid_to_row_col(1) == (1, 1)
    assert gid_to_row_col(722) == (2, 2)
    assert row_col_to_gid(360, 720) == N_CELLS
    lat, lon = gid_center(1)
    assert (lat, lon) == (-89.75, -179.75)


def test_neighbors_examples():
    topo = GridTopology()
    assert neighbors(722, topo) == {1, 2, 3, 721, 723, 1441, 1442, 1443}
    assert neighbors(1, topo) == {2, 721, 722}
    assert neighbors(722, GridTopology(frozenset())) == set()
    assert neighbors(UnitId(Level.PGM, 722), topo) == neighbors(722, topo)


def test_neighbors_domain():
    with pytest.raises(DomainError):
        neighbors(0, GridTopology())
    with pytest.raises(DomainError):
        neighbors(N_CELLS + 1, GridTopology())
    with pytest.raises(DomainError):
        neighbors(UnitId(Level.CM, 5), GridTopology())


def test_neighbor_counts_and_rook():
    topo = GridTopology()
    assert len(neighbors(row_col_to_gid(1, 300), topo)) == 5
    assert len(neighbors(row_col_to_gid(360, 720), topo)) == 3
    rook = GridTopology(contiguity="rook")
    assert neighbors(722, rook) == {2, 721, 723, 1442}


def test_neighbors_match_enumeration_with_mask():
    rng = np.random.default_rng(3)
    mask = frozenset(rng.integers(1, N_CELLS + 1, 50_000).tolist())
    topo = GridTopology(mask)
    for gid in rng.integers(1, N_CELLS + 1, 500):
        assert topo.neighbors(int(gid)) == _brute_neighbors(int(gid), mask)


def test_neighbors_symmetric_irreflexive():
    topo = GridTopology()
    rng = np.random.default_rng(11)
    for a in rng.integers(1, N_CELLS + 1, 10_000):
        a = int(a)
        nb = topo.neighbors(a)
        assert a not in nb
        assert 3 <= len(nb) <= 8
        for b in nb:
            assert a in topo.neighbors(b)
    # random pairs: membership relation is symmetric
    pairs = rng.integers(1, N_CELLS + 1, (10_000, 2))
    pairs[:, 1] = np.clip(pairs[:, 0] + rng.choice([-721, -720, -1, 1, 719, 720, 5000], 10_000), 1, N_CELLS)
    for a, b in pairs:
        assert (int(b) in topo.neighbors(int(a))) == (int(a) in topo.neighbors(int(b)))


def test_region_mask_file(tmp_path):
    path = tmp_path / "mask.txt"
    write_region_mask(path, [5, 3, 1])
    assert path.read_text() == "1\n3\n5\n"
    assert read_region_mask(path) == {1, 3, 5}
    path.write_text("1\nx\n")
    with pytest.raises(DomainError):
        read_region_mask(path)


# --- bins ------------------------------------------------------------------

@pytest.mark.parametrize("y,b", [(0, 0), (1, 1), (2, 1), (3, 2), (10, 3), (11, 4), (1000, 9), (1001, 10), (10**9, 10)])
def test_bin_index_examples(y, b):
    assert bin_index(y) == b


def test_bin_index_negative():
    with pytest.raises(DomainError):
        bin_index(-1)


def test_bins_partition_exhaustively():
    scheme = BinScheme()
    assert len(scheme) == 11
    intervals = scheme.intervals
    for y in range(0, 5001):
        containing = [i for i, (lo, hi) in enumerate(intervals) if lo <= y <= hi]
        assert containing == [bin_index(y)]
    idx = scheme.index(np.arange(5001))
    assert np.all(np.diff(idx) >= 0)
    assert scheme.labels()[:4] == ["0", "1-2", "3-5", "6-10"] and scheme.labels()[-1] == "1001-"


@given(st.integers(0, 10**7), st.integers(0, 10**7))
def test_bin_index_monotone(a, b):
    if a <= b:
        assert bin_index(a) <= bin_index(b)


# --- panel -----------------------------------------------------------------

def test_panel_from_records():
    p = ObservationPanel.from_records(Level.CM, [2, 1, 1, 2], [5, 6, 5, 6], [0, 3, 1, 7])
    assert p.units == (1, 2)
    assert p.get(1, 5) == 1 and p.get(1, 6) == 3
    assert (2, 6) in p and (2, 7) not in p
    assert list(p.history(2, 5, 6)) == [0, 7]
    with pytest.raises(KeyError):
        p.history(2, 4, 6)
    assert len(p) == 4
    assert sorted(p.cells()) == [(1, 5, 1), (1, 6, 3), (2, 5, 0), (2, 6, 7)]


@pytest.mark.parametrize("units,months,values", [
    ([1, 1], [5, 5], [0, 1]),       # duplicate key
    ([1, 1], [5, 7], [0, 1]),       # gap
    ([1], [5], [-1]),               # negative
    ([0], [5], [1]),                # bad country id
    ([1], [5], [1.5]),              # non-integer
])
def test_panel_rejects(units, months, values):
    with pytest.raises(DomainError):
        ObservationPanel.from_records(Level.CM, units, months, values)


def test_panel_is_immutable():
    p = ObservationPanel.from_records(Level.CM, [1], [5], [2])
    with pytest.raises(ValueError):
        p.values[1][0] = 9
    q = p.with_value(1, 5, 9)
    assert p.get(1, 5) == 2 and q.get(1, 5) == 9
