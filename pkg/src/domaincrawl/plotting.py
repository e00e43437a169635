"""Figures for crawl reports, written next to the tab-separated metrics."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.dpi": 100,
    "savefig.bbox": "tight",
}


def _bar(ax, labels, values, color):
    ax.bar(range(len(values)), values, color=color)
    ax.set_xticks(range(len(values)))
    ax.set_xticklabels(labels, rotation=30, ha="right")


def plot_domains(report: dict, path: Path) -> Path:
    per_domain = report["per_domain_fetched"]
    per_worker = report["per_worker_fetched"]
    with plt.rc_context(STYLE):
        fig, (left, right) = plt.subplots(1, 2, figsize=(8, 3))
        _bar(left, list(per_domain), list(per_domain.values()), "#4c72b0")
        left.set_title("pages fetched per domain")
        _bar(right, [f"w{w}" for w in per_worker], list(per_worker.values()), "#dd8452")
        right.set_title("URLs processed per worker")
        fig.savefig(path)
        plt.close(fig)
    return path


def plot_progress(report: dict, path: Path) -> Path:
    per_round = report["per_round_fetched"]
    total = 0
    cumulative = []
    for n in per_round:
        total += n
        cumulative.append(total)
    rounds = range(1, len(per_round) + 1)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6, 3))
        ax.plot(rounds, cumulative, color="#4c72b0", lw=1.5)
        ax.set_xlabel("round")
        ax.set_ylabel("URLs processed")
        twin = ax.twinx()
        twin.bar(rounds, per_round, color="#55a868", alpha=0.35, width=1.0)
        twin.set_ylabel("per round")
        # Keep the cumulative line above the bars.
        ax.set_zorder(twin.get_zorder() + 1)
        ax.patch.set_visible(False)
        ax.set_title(f"crawl progress ({report['stop_reason']}, {report['rounds']} rounds)")
        fig.savefig(path)
        plt.close(fig)
    return path


def render_report_figures(report: dict, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return [
        plot_domains(report, out / "domains.png"),
        plot_progress(report, out / "progress.png"),
    ]
