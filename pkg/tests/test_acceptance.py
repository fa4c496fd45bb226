"""Build exit criteria, one test each.

Run with ``pytest tests/test_acceptance.py``; the terminal summary ends with a
PASS/FAIL line per criterion.
"""

import math
import time
from collections import Counter
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from conflictscore import benchmarks as bm
from conflictscore import fileio
from conflictscore.cli import main
from conflictscore.core import Level, UnitId, bin_index, format_windows, month_id_from_date, yearly_window
from conflictscore.ensemble import allocate_slots, pool_draws
from conflictscore.evaluation import overall_mean, score_submission
from conflictscore.fileio import Violation
from conflictscore.metrics import (
    ForecastSet, IgnConfig, MisConfig, crps_ensemble, ignorance_score, interval_score, interval_score_bounds,
)
from conflictscore.synthdata import SynthSpec, generate_panel

EXAMPLE = [0, 0, 0, 2, 11, 4]
FLOOR = -math.log2(1001 / 1011)
CEILING = -math.log2(1 / 1011)
WINDOWS = [yearly_window(y) for y in range(2018, 2024)]


def _hand_tile(draws, n):
    out = []
    while len(out) < n:
        out.extend(draws)
    return out[:n]


def _crps_quadrature(x, y):
    # forecast CDF and observation step are constant on each [k, k+1) for integer data
    x = np.sort(np.asarray(x))
    mids = np.arange(int(max(x.max(), y)) + 1) + 0.5
    cdf = np.searchsorted(x, mids, side="right") / x.size
    return float(((cdf - (mids >= y)) ** 2).sum())


@pytest.mark.acceptance(1, "IGN worked example (FOURIER and TILE)")
def test_ign_worked_example():
    start = time.perf_counter()
    assert ignorance_score(EXAMPLE, 0) == pytest.approx(0.92, abs=0.1)
    assert ignorance_score(EXAMPLE, 10) == pytest.approx(2.46, abs=0.3)

    tile = IgnConfig(resample_mode="tile")
    counts = Counter(bin_index(v) for v in _hand_tile(EXAMPLE, 1000))
    for y in (0, 10):
        oracle = -math.log2((counts[bin_index(y)] + 1) / 1011)
        assert ignorance_score(EXAMPLE, y, tile) == pytest.approx(oracle, abs=1e-12)
    assert ignorance_score(EXAMPLE, 10, tile) == pytest.approx(-math.log2(1 / 1011), abs=1e-12)
    # the hand count has 501 zeros, so the y=0 score is -log2(502/1011)
    assert ignorance_score(EXAMPLE, 0, tile) == pytest.approx(-math.log2(502 / 1011), abs=1e-12)
    assert time.perf_counter() - start < 1.0


@pytest.mark.acceptance(2, "IGN bounds over 10,000 random ensembles")
def test_ign_bounds():
    rng = np.random.default_rng(2)
    lo, hi = math.inf, -math.inf
    for i in range(10_000):
        n = int(rng.integers(1, 300))
        kind = i % 4
        if kind == 0:
            x = rng.poisson(rng.uniform(0, 30), n)
        elif kind == 1:
            x = rng.negative_binomial(0.3, 0.01, n)
        elif kind == 2:
            x = np.full(n, rng.integers(0, 2000))
        else:
            x = rng.integers(0, 5000, n) * (rng.random(n) < 0.2)
        y = int(rng.choice([0, rng.integers(0, 20), rng.integers(0, 5000)]))
        s = ignorance_score(x, y)
        lo, hi = min(lo, s), max(hi, s)
    assert FLOOR - 1e-12 <= lo and hi <= CEILING + 1e-12
    assert hi <= 9.982
    pure = ignorance_score([7] * 50, 9)
    assert pure == pytest.approx(FLOOR, abs=1e-12)
    assert round(pure, 3) == 0.014


@pytest.mark.acceptance(3, "MIS worked example")
def test_mis_worked_example():
    assert interval_score([0, 0, 4, 10], 5, MisConfig(a=0.1, compat_mode=True)) == pytest.approx(8.2, abs=1e-12)
    assert interval_score([0, 0, 4, 10], 5, MisConfig(a=0.1)) == pytest.approx(9.1, abs=1e-12)
    assert interval_score_bounds(0, 2, 5, 0.1) == pytest.approx(62, abs=1e-12)


@pytest.mark.acceptance(4, "CRPS of a single draw equals absolute error")
def test_crps_reduces_to_mae():
    rng = np.random.default_rng(4)
    xs = rng.integers(0, 10**6, 1000)
    ys = rng.integers(0, 10**6, 1000)
    for x, y in zip(xs, ys):
        assert abs(crps_ensemble([int(x)], int(y)) - abs(int(x) - int(y))) <= 1e-12


@pytest.mark.acceptance(5, "CRPS estimator matches numerical integration")
def test_crps_matches_integration():
    start = time.perf_counter()
    rng = np.random.default_rng(5)
    for _ in range(200):
        n = int(rng.integers(1, 51))
        x = rng.negative_binomial(0.5, rng.uniform(0.01, 0.5), n)
        y = int(rng.integers(0, int(x.max()) + 20))
        assert crps_ensemble(x, y) == pytest.approx(_crps_quadrature(x, y), abs=1e-9)
    assert time.perf_counter() - start < 10.0


# yearly rows and overall row of the four country-month benchmark score tables
TABLES = {
    "exactly_zero": {"crps": ([24.13, 23.02, 32.04, 87.34, 120.97, 53.54], 56.84),
           "ign": ([1.56, 1.56, 1.55, 1.61, 1.63, 1.61], 1.59),
           "mis": ([482.61, 460.38, 640.81, 1746.78, 2419.36, 1070.86], 1136.80)},
    "last_historical": {"ign": ([1.20, 1.05, 1.11, 1.23, 1.12, 1.12], 1.14),
           "mis": ([380.62, 172.69, 455.81, 1690.71, 2599.28, 13523.46], 3137.09)},
    "conflictology12": {"ign": ([0.64, 0.61, 0.57, 0.69, 0.69, 0.68], 0.65),
           "mis": ([186.55, 89.06, 344.96, 1435.55, 2142.13, 1042.92], 873.53)},
    "bootstrap240": {"ign": ([1.12, 1.11, 1.12, 1.15, 1.15, 1.15], 1.14),
           "mis": ([454.09, 426.01, 606.00, 1708.30, 2380.74, 1030.99], 1101.02)},
}


@pytest.mark.acceptance(6, "Aggregation arithmetic on the benchmark tables")
def test_table_arithmetic():
    off = []
    for table, cols in TABLES.items():
        for metric, (rows, printed) in cols.items():
            got = overall_mean(rows)
            if abs(got - printed) > 0.005:
                off.append(f"{table} {metric}: mean {got:.4f} vs printed {printed}")
    assert not off, "; ".join(off)


def _spiked_panel(seed):
    panel = generate_panel(SynthSpec(Level.CM, 100, month_id_from_date(1990, 1), month_id_from_date(2023, 12),
                                     seed=seed))
    for w in WINDOWS:
        quiet = min(panel.units, key=lambda u: (panel.history(u, w.train_cutoff - 11, w.train_cutoff).sum(), u))
        panel = panel.with_value(quiet, w.train_cutoff, 1000)
    return panel


@pytest.mark.acceptance(7, "Benchmark ordering on a synthetic panel")
def test_benchmark_ordering():
    start = time.perf_counter()
    panel = _spiked_panel(seed=0)
    crps = {}
    for kind in ("conflictology12", "exactly_zero", "last_historical"):
        fs = bm.generate(bm.BenchmarkSpec.default(kind, seed=1), panel, WINDOWS)
        crps[kind] = score_submission(fs, panel, WINDOWS).overall()["crps"]
    assert crps["conflictology12"] < crps["exactly_zero"] < crps["last_historical"], crps
    assert time.perf_counter() - start < 60.0


@pytest.mark.acceptance(8, "Bootstrap over an all-zero panel scores as exactly zero")
def test_degenerate_bootstrap():
    first = WINDOWS[0].train_cutoff - 239
    last = WINDOWS[-1].forecast_months[-1]
    panel = generate_panel(SynthSpec(Level.CM, 20, first, last, zero_share=1 - 1e-12, seed=8))
    assert not np.concatenate([panel.values[u] for u in panel.units]).any()
    boot = bm.generate(bm.BenchmarkSpec.default("bootstrap240", seed=8), panel, WINDOWS)
    zero = bm.generate(bm.BenchmarkSpec.default("exactly_zero"), panel, WINDOWS)
    a = score_submission(boot, panel, WINDOWS).rows
    b = score_submission(zero, panel, WINDOWS).rows
    pd.testing.assert_frame_equal(a, b, check_exact=True)


def _pipeline(root: Path) -> dict[str, bytes]:
    root.mkdir()
    windows = root / "windows.txt"
    windows.write_text(format_windows(WINDOWS))
    obs = root / "obs.parquet"
    run = lambda *argv: main([str(a) for a in argv])  # noqa: E731
    assert run("synth", "--level", "cm", "--units", "20", "--months", "1995-01..2023-12", "--seed", 9,
               "--out", obs) == 0
    for kind in ("exactly_zero", "last_historical", "conflictology12", "bootstrap240"):
        sub = root / "subs" / f"{kind}.parquet"
        assert run("benchmark", kind, "--obs", obs, "--windows", windows, "--seed", 9, "--n-draws", 200,
                   "--out", sub) == 0
        assert run("score", sub, "--obs", obs, "--windows", windows,
                   "--out", root / "scores" / f"{kind}_scores.parquet") == 0
    ens = root / "subs_ensemble" / "ensemble.parquet"
    assert run("ensemble", "--members", root / "subs", "--test-scores", root / "scores", "--n-draws", 200,
               "--seed", 9, "--out", ens) == 0
    assert run("score", ens, "--obs", obs, "--windows", windows,
               "--out", root / "scores" / "ensemble_scores.parquet") == 0
    assert run("report", *sorted((root / "scores").glob("*.parquet")), "--out-dir", root / "report") == 0
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.mark.acceptance(9, "Two pipeline runs are byte-identical")
def test_pipeline_determinism(tmp_path, capsys):
    first = _pipeline(tmp_path / "a")
    second = _pipeline(tmp_path / "b")
    assert sorted(first) == sorted(second)
    assert any(name.endswith(".png") for name in first)
    differing = [name for name in first if first[name] != second[name]]
    assert not differing, differing


def _base_frame():
    fs = [ForecastSet(UnitId(Level.CM, u), m, np.arange(20) % 6) for u in (1, 2) for m in (457, 458)]
    return fileio.forecasts_to_frame(fs)


def _cell(df, u, m):
    return (df.country_id == u) & (df.month_id == m)


def _malformed():
    df = _base_frame()
    out = {}
    out["draws_14"] = (df[~(_cell(df, 1, 457) & (df.draw >= 14))], Violation.DRAW_COUNT_LOW)
    big = pd.DataFrame({"month_id": 457, "country_id": 1, "draw": np.arange(1001), "prediction": 1}, dtype=np.int32)
    out["draws_1001"] = (pd.concat([df[~_cell(df, 1, 457)], big]), Violation.DRAW_COUNT_HIGH)
    neg = df.copy()
    neg.loc[7, "prediction"] = -3
    out["negative"] = (neg, Violation.NEGATIVE_COUNT)
    out["duplicate_rows"] = (pd.concat([df, df.iloc[[4]]]), Violation.DUPLICATE)
    unknown = df.copy()
    unknown.loc[_cell(df, 2, 458), "country_id"] = 77
    out["unknown_unit"] = (pd.concat([df, unknown[unknown.country_id == 77]]), Violation.UNKNOWN_UNIT)
    out["missing_cell"] = (df[~_cell(df, 2, 458)], Violation.MISSING_CELL)
    outside = df[_cell(df, 2, 458)].assign(month_id=np.int32(470))
    out["cell_outside_universe"] = (pd.concat([df, outside]), Violation.UNKNOWN_CELL)
    out["float_prediction"] = (df.assign(prediction=df.prediction + 0.5), Violation.COLUMN_TYPE)
    out["string_month_id"] = (df.assign(month_id=df.month_id.astype(str)), Violation.COLUMN_TYPE)
    out["missing_column"] = (df.drop(columns="prediction"), Violation.MISSING_COLUMN)
    gaps = df.copy()
    gaps.loc[_cell(df, 1, 458), "draw"] = np.arange(20, dtype=np.int32) * 2
    out["noncontiguous_draw_ids"] = (gaps, Violation.DRAW_IDS)
    nulls = df.astype({"prediction": "Int32"})
    nulls.loc[3, "prediction"] = pd.NA
    out["null_prediction"] = (nulls, Violation.NULL_VALUE)
    return out


@pytest.mark.acceptance(10, "Validation suite of 12 malformed files")
def test_validation_corpus(tmp_path, capsys):
    universe = tmp_path / "universe.csv"
    pd.DataFrame({"country_id": [1, 1, 2, 2], "month_id": [457, 458, 457, 458]}).to_csv(universe, index=False)
    corpus = _malformed()
    assert len(corpus) == 12
    clean = tmp_path / "clean.parquet"
    fileio.write_table(_base_frame(), clean)
    assert main(["validate", str(clean), "--level", "cm", "--universe", str(universe)]) == 0
    capsys.readouterr()
    wrong = []
    for name, (frame, expected) in corpus.items():
        path = tmp_path / f"{name}.parquet"
        fileio.write_table(frame.reset_index(drop=True), path)
        code = main(["validate", str(path), "--level", "cm", "--universe", str(universe)])
        printed = capsys.readouterr().out
        if code != 1 or f"[{expected.value}]" not in printed:
            wrong.append(f"{name}: exit {code}, output {printed!r}")
    assert not wrong, wrong


def _variance_se(lam, n):
    # sd of the sample variance of n Poisson draws: fourth central moment is lam + 3 lam^2
    mu4 = lam + 3 * lam**2
    return math.sqrt((mu4 - lam**2 * (n - 3) / (n - 1)) / n)


@pytest.mark.acceptance(11, "Poisson expansion moments")
def test_poisson_moments():
    n = 1000
    for point in (0.5, 4, 100):
        x = bm.poisson_expand(point, n, 11, "acceptance", point)
        assert abs(x.mean() - point) < 3 * math.sqrt(point / n), (point, x.mean())
        assert abs(x.var(ddof=1) - point) < 3 * _variance_se(point, n), (point, x.var(ddof=1))


@pytest.mark.acceptance(12, "Ensemble slot allocation over 1,000 weight vectors")
def test_ensemble_allocation():
    rng = np.random.default_rng(12)
    unit = UnitId(Level.CM, 1)
    for i in range(1000):
        k = int(rng.integers(1, 25))
        raw = rng.exponential(1.0, k) * (rng.random(k) < 0.8)
        if not raw.any():
            raw[0] = 1.0
        weights = {f"m{j:02d}": w for j, w in enumerate(raw / raw.sum())}
        n_draws = int(rng.choice([15, 100, 999, 1000]))
        slots = allocate_slots(weights, n_draws)
        assert sum(slots.values()) == n_draws
        assert all(abs(slots[m] - w * n_draws) < 1 for m, w in weights.items())
        if i % 10 == 0:
            # member j only ever draws the value j, so the pooled counts are the slots
            members = {m: ForecastSet(unit, 457, np.full(15, j)) for j, m in enumerate(weights)}
            pooled = pool_draws(members, weights, n_draws, seed=i)
            assert pooled.n == n_draws
            counts = Counter(pooled.draws.tolist())
            assert {f"m{j:02d}": c for j, c in counts.items()} == {m: s for m, s in slots.items() if s}
