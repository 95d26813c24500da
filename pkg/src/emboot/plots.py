"""Figure rendering for run reports.

Every report path that writes delimited output also renders a figure next
to it: the precision-throughput curve for traces, and the contributing-
pattern histogram for decision-list evaluations.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluate import CurvePoint, DecisionListEvaluation

_STYLES = {
    "emboot": dict(color="tab:blue", marker="o"),
    "epb": dict(color="tab:orange", marker="s"),
    "lp": dict(color="tab:green", marker="^"),
}


def save_precision_throughput(curves: dict[str, list[CurvePoint]], path) -> None:
    """One precision-vs-throughput line per system."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for system, points in curves.items():
        style = _STYLES.get(system, dict(marker="."))
        ax.plot(
            [p.throughput for p in points],
            [p.precision for p in points],
            markersize=3,
            linewidth=1.2,
            label=system,
            **style,
        )
    ax.set_xlabel("throughput (entities promoted)")
    ax.set_ylabel("precision")
    ax.set_ylim(0.0, 1.05)
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_pattern_histogram(evaluation: DecisionListEvaluation, path) -> None:
    """Bar chart of how many patterns contributed to each prediction."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    counts = sorted(evaluation.histogram)
    ax.bar(
        counts,
        [evaluation.histogram[c] for c in counts],
        color="tab:blue",
        width=0.8,
    )
    ax.set_xlabel("matching patterns per prediction")
    ax.set_ylabel("predictions")
    ax.grid(alpha=0.3, axis="y")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
