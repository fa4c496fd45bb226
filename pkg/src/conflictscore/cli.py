"""Command-line interface.

Exit codes: 0 success, 1 validation failure, 2 usage or fatal error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import benchmarks, fileio, report
from .core import (DomainError, GridTopology, Level, parse_year_month, read_region_mask,
                   read_windows, write_region_mask)
from .ensemble import WeightRule, build_ensemble, compute_weights
from .evaluation import ScoringError, rank_submissions, score_submission
from .metrics import IgnConfig, MisConfig
from .synthdata import SynthSpec, generate_panel, unit_ids

log = logging.getLogger("conflictscore")

EXIT_OK, EXIT_INVALID, EXIT_FATAL = 0, 1, 2


def _month_range(text: str) -> tuple[int, int]:
    try:
        a, b = text.split("..")
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A..B, got {text!r}") from None

    def one(t: str) -> int:
        t = t.strip()
        return parse_year_month(t) if "-" in t else int(t)

    try:
        return one(a), one(b)
    except (ValueError, DomainError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def cmd_validate(args) -> int:
    df = fileio.read_table(args.submission)
    universe = fileio.read_universe(args.universe, args.level) if args.universe else None
    rep = fileio.validate(df, args.level, universe)
    sys.stdout.write(rep.format())
    return EXIT_OK if rep.valid else EXIT_INVALID


def _load_forecasts(args):
    df = fileio.read_table(args.submission)
    if fileio.is_point_submission(df):
        log.info("point submission: expanding with Poisson draws (n=%d, seed=%d)", args.n_draws, args.seed)
        return fileio.load_point_submission(df, args.n_draws, args.seed)
    return fileio.forecasts_from_frame(df)


def cmd_score(args) -> int:
    panel = fileio.read_observations(args.obs)
    windows = read_windows(args.windows)
    ign_cfg = IgnConfig(n_target=args.ign_n, resample_mode=args.ign_mode)
    mis_cfg = MisConfig(a=args.mis_a, compat_mode=args.mis_q == "compat")
    table = score_submission(_load_forecasts(args), panel, windows, ign_cfg, mis_cfg)
    name = args.name or Path(args.submission).stem
    out = Path(args.out) if args.out else Path(args.submission).with_name(f"{name}_scores.parquet")
    fileio.write_score_table(table, out)
    if len(table.coverage_gaps):
        gaps = out.with_name(out.stem + "_coverage_gaps.csv")
        fileio.write_table(table.coverage_gaps, gaps)
    sys.stdout.write(report.summary_markdown(name, table))
    log.info("wrote %s", out)
    return EXIT_OK


def cmd_benchmark(args) -> int:
    panel = fileio.read_observations(args.obs)
    windows = read_windows(args.windows)
    topo = None
    if args.mask:
        topo = GridTopology(read_region_mask(args.mask), contiguity=args.contiguity)
    elif panel.level is Level.PGM:
        topo = GridTopology(frozenset(panel.units), contiguity=args.contiguity)
    spec = benchmarks.BenchmarkSpec.default(args.kind, seed=args.seed, n_draws=args.n_draws)
    forecasts = benchmarks.generate(spec, panel, windows, topo=topo)
    fileio.write_submission(forecasts, args.out)
    log.info("wrote %d cells to %s", len(forecasts), args.out)
    return EXIT_OK


def cmd_ensemble(args) -> int:
    members_dir, scores_dir = Path(args.members), Path(args.test_scores)
    members = {p.stem: p for p in sorted(members_dir.glob("*.parquet"))}
    if not members:
        raise ScoringError(f"no member submissions (*.parquet) in {members_dir}")
    tables = {}
    for name in members:
        candidates = [scores_dir / f"{name}_scores.parquet", scores_dir / f"{name}.parquet"]
        found = next((c for c in candidates if c.exists()), None)
        if found is None:
            raise ScoringError(f"no test scores for member {name!r} in {scores_dir}")
        tables[name] = fileio.read_score_table(found)
    weights = compute_weights(tables, args.rule, args.tau)
    for name, w in sorted(weights.items()):
        sys.stdout.write(f"{name}\t{w:.6f}\n")
    submissions = {name: fileio.read_submission(path) for name, path in members.items()}
    pooled = build_ensemble(submissions, weights, args.n_draws, args.seed)
    fileio.write_submission(pooled, args.out)
    log.info("wrote ensemble of %d members to %s", len(members), args.out)
    return EXIT_OK


def cmd_synth(args) -> int:
    first, last = args.months
    spec = SynthSpec(Level(args.level), args.units, first, last, zero_share=args.zero_share,
                     persistence=args.persistence, seed=args.seed)
    panel = generate_panel(spec)
    fileio.write_observations(panel, args.out)
    if args.mask_out:
        write_region_mask(args.mask_out, unit_ids(spec))
    log.info("wrote %d observations to %s", len(panel), args.out)
    return EXIT_OK


def cmd_report(args) -> int:
    tables = {}
    for path in args.scores:
        name = Path(path).stem
        if name.endswith("_scores"):
            name = name[: -len("_scores")]
        tables[name] = fileio.read_score_table(path)
    try:
        board = rank_submissions(tables) if len(tables) > 1 else None
    except ScoringError as exc:
        log.warning("no leaderboard: %s", exc)
        board = None

    if args.format == "md":
        text = "\n".join(report.summary_markdown(n, tables[n]) for n in sorted(tables))
        if board:
            text += "\n" + report.leaderboard_markdown(board)
    else:
        text = report.summary_frame(tables).to_csv(index=False, float_format="%.6f", lineterminator="\n")
    sys.stdout.write(text)

    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"summary.{args.format}").write_text(text, encoding="utf-8")
        if board:
            report.leaderboard_frame(board).to_csv(out / "leaderboard.csv", index=False,
                                                  float_format="%.6f", lineterminator="\n")
        if not args.no_figures:
            report.plot_window_scores(tables, out / "window_scores.png")
            if board:
                report.plot_leaderboard(board, out / "leaderboard.png")
            for name, table in tables.items():
                report.plot_cell_distribution(table, name, out / f"{name}_cell_crps.png")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="conflictscore",
                                description="Score, benchmark and pool probabilistic fatality forecasts.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check a submission file")
    v.add_argument("submission")
    v.add_argument("--level", choices=[lv.value for lv in Level], required=True)
    v.add_argument("--universe", help="table of (unit, month_id) cells that must be forecast")
    v.set_defaults(func=cmd_validate)

    s = sub.add_parser("score", help="score a submission against observations")
    s.add_argument("submission")
    s.add_argument("--obs", required=True)
    s.add_argument("--windows", required=True)
    s.add_argument("--ign-mode", choices=["tile", "fourier"], default="fourier")
    s.add_argument("--ign-n", type=int, default=1000)
    s.add_argument("--mis-q", choices=["standard", "compat"], default="standard")
    s.add_argument("--mis-a", type=float, default=0.1)
    s.add_argument("--n-draws", type=int, default=1000, help="draws per cell for point submissions")
    s.add_argument("--seed", type=_seed, default=0)
    s.add_argument("--name")
    s.add_argument("--out", help="score table path (default: <submission>_scores.parquet)")
    s.set_defaults(func=cmd_score)

    b = sub.add_parser("benchmark", help="generate a benchmark submission")
    b.add_argument("kind", choices=[k.value for k in benchmarks.BenchmarkKind])
    b.add_argument("--obs", required=True)
    b.add_argument("--windows", required=True)
    b.add_argument("--seed", type=_seed, required=True)
    b.add_argument("--n-draws", type=int, default=1000)
    b.add_argument("--mask", help="region mask (gid per line) for grid-level runs")
    b.add_argument("--contiguity", choices=["queen", "rook"], default="queen")
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_benchmark)

    e = sub.add_parser("ensemble", help="CRPS-weighted pool of several submissions")
    e.add_argument("--members", required=True, help="directory of member submissions")
    e.add_argument("--test-scores", required=True, help="directory of member score tables")
    e.add_argument("--rule", choices=[r.value for r in WeightRule], default="inverse")
    e.add_argument("--tau", type=float, default=1.0)
    e.add_argument("--n-draws", type=int, default=1000)
    e.add_argument("--seed", type=_seed, default=0)
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_ensemble)

    y = sub.add_parser("synth", help="write a synthetic observation panel")
    y.add_argument("--level", choices=[lv.value for lv in Level], required=True)
    y.add_argument("--units", type=int, required=True)
    y.add_argument("--months", type=_month_range, required=True, help="A..B as month ids or YYYY-MM")
    y.add_argument("--seed", type=_seed, default=0)
    y.add_argument("--zero-share", type=float)
    y.add_argument("--persistence", type=float)
    y.add_argument("--mask-out", help="also write the generated unit ids as a region mask")
    y.add_argument("--out", required=True)
    y.set_defaults(func=cmd_synth)

    r = sub.add_parser("report", help="tables and figures from score files")
    r.add_argument("scores", nargs="+")
    r.add_argument("--format", choices=["md", "csv"], default="md")
    r.add_argument("--out-dir")
    r.add_argument("--no-figures", action="store_true")
    r.set_defaults(func=cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (DomainError, ScoringError, fileio.FileFormatError, benchmarks.MissingHistory,
            FileNotFoundError, KeyError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
