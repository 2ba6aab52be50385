"""Figure rendering for the report path: training loss, power, and timing."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .feature_space import ReducerModel  # noqa: E402


def save_loss_curve(model: ReducerModel, path) -> None:
    iterations = [it for it, _ in model.loss_trace]
    losses = [loss for _, loss in model.loss_trace]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(iterations, losses)
    ax.set_xlabel("iteration")
    ax.set_ylabel("cross-entropy loss")
    ax.set_title("Reducer training loss")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _group_rows(rows):
    grouped = {}
    for row in rows:
        grouped.setdefault((row["method"], row["delta"]), []).append(row)
    for series in grouped.values():
        series.sort(key=lambda r: r["n1"])
    return grouped


def save_power_figure(rows, path) -> None:
    """Rejection rate per method; lines over n1 when several sizes are present."""
    rows = list(rows)
    sizes = sorted({row["n1"] for row in rows})
    fig, ax = plt.subplots(figsize=(7, 4.5))
    if len(sizes) > 1:
        for (method, delta), series in sorted(_group_rows(rows).items()):
            ax.plot([r["n1"] for r in series], [r["rejection_rate"] for r in series],
                    marker="o", label=f"{method}, delta={delta}")
        ax.set_xlabel("n1")
    else:
        labels = [f"{r['method']}\ndelta={r['delta']}" for r in rows]
        ax.bar(range(len(rows)), [r["rejection_rate"] for r in rows])
        ax.set_xticks(range(len(rows)), labels, rotation=45, ha="right", fontsize=7)
    ax.set_ylabel("rejection rate")
    ax.set_ylim(0, 1.05)
    ax.set_title("Detection power / Type-I error")
    if len(sizes) > 1:
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_timing_figure(rows, path) -> None:
    """Mean single-run wall time per method over n1 (log scale)."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for (method, delta), series in sorted(_group_rows(rows).items()):
        ax.plot([r["n1"] for r in series], [r["mean_elapsed_s"] for r in series],
                marker="o", label=method)
    ax.set_xlabel("n1")
    ax.set_ylabel("mean elapsed seconds")
    ax.set_yscale("log")
    ax.set_title("Single-run detection time")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
