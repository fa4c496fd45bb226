"""Benchmark-style score tables (markdown / CSV) and the figures that go with them."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from .evaluation import METRICS, LeaderboardEntry, ScoreTable  # noqa: E402

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "svg.hashsalt": "conflictscore",
}
# PNG metadata carries the matplotlib version by default; drop it so reruns are byte-identical
PNG_METADATA = {"Software": None}


def summary_markdown(name: str, table: ScoreTable) -> str:
    summary = table.summary()
    lines = [f"### {name}", "", "|  | crps | ign | mis |", "|---|---:|---:|---:|"]
    for label, row in summary.iterrows():
        lines.append(f"| {label} | {row['crps']:.2f} | {row['ign']:.2f} | {row['mis']:.2f} |")
    gaps = len(table.coverage_gaps)
    if gaps:
        lines += ["", f"{gaps} observed cell(s) in the windows were not forecast."]
    return "\n".join(lines) + "\n"


def summary_frame(tables: Mapping[str, ScoreTable]) -> pd.DataFrame:
    """Long table: submission, window (or 'Overall'), crps, ign, mis."""
    parts = []
    for name in sorted(tables):
        s = tables[name].summary().rename_axis("window").reset_index()
        s.insert(0, "submission", name)
        parts.append(s)
    return pd.concat(parts, ignore_index=True)


def leaderboard_markdown(board: list[LeaderboardEntry]) -> str:
    lines = ["### Leaderboard (ranked by CRPS)", "", "| rank | submission | crps | ign | mis |",
             "|---:|---|---:|---:|---:|"]
    lines += [f"| {e.rank} | {e.name} | {e.crps:.2f} | {e.ign:.2f} | {e.mis:.2f} |" for e in board]
    return "\n".join(lines) + "\n"


def leaderboard_frame(board: list[LeaderboardEntry]) -> pd.DataFrame:
    return pd.DataFrame([(e.rank, e.name, e.crps, e.ign, e.mis) for e in board],
                        columns=["rank", "submission", "crps", "ign", "mis"])


def plot_window_scores(tables: Mapping[str, ScoreTable], path: str | Path) -> Path:
    """One panel per metric: window means for every submission."""
    path = Path(path)
    with plt.rc_context(RC):
        fig, axes = plt.subplots(1, len(METRICS), figsize=(10, 3.2), constrained_layout=True)
        for ax, metric in zip(axes, METRICS):
            for name in sorted(tables):
                means = tables[name].window_means()[metric]
                ax.plot(range(len(means)), means.to_numpy(), marker="o", lw=1.2, label=name)
                ax.set_xticks(range(len(means)), list(means.index), rotation=45)
            ax.set_title(metric.upper())
            if metric != "ign":
                ax.set_yscale("symlog", linthresh=1.0)
            ax.set_xlabel("window")
        axes[0].set_ylabel("mean score")
        axes[-1].legend(loc="best", frameon=False)
        fig.savefig(path, dpi=120, metadata=PNG_METADATA)
        plt.close(fig)
    return path


def plot_leaderboard(board: list[LeaderboardEntry], path: str | Path) -> Path:
    path = Path(path)
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(5, 0.4 * len(board) + 1.2), constrained_layout=True)
        names = [e.name for e in board][::-1]
        ax.barh(names, [e.crps for e in board][::-1], color="0.35")
        ax.set_xlabel("overall CRPS (lower is better)")
        fig.savefig(path, dpi=120, metadata=PNG_METADATA)
        plt.close(fig)
    return path


def plot_cell_distribution(table: ScoreTable, name: str, path: str | Path) -> Path:
    """Per-cell CRPS distribution by window, on log1p scale."""
    path = Path(path)
    rows = table.rows
    order = list(table.window_order)
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(6, 3.2), constrained_layout=True)
        data = [rows.loc[rows["window"] == w, "crps"].to_numpy() for w in order]
        ax.boxplot(data, showfliers=True, flierprops={"markersize": 2})
        ax.set_xticks(range(1, len(order) + 1), order, rotation=45)
        ax.set_yscale("symlog", linthresh=1.0)
        ax.set_ylabel("cell CRPS")
        ax.set_title(name)
        fig.savefig(path, dpi=120, metadata=PNG_METADATA)
        plt.close(fig)
    return path
