"""Matplotlib figures rendered to files next to the CSV outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

LOSS_COLUMNS = ("discriminator", "adversarial", "l1", "perceptual", "contextual", "total")


def save_loss_curves(records: list[dict], path: Path | str) -> Path:
    """Per-step loss curves from training records (one line per term)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    steps = [r["step"] for r in records]
    fig, ax = plt.subplots(figsize=(8, 5))
    for column in LOSS_COLUMNS:
        if records and column in records[0]:
            ax.plot(steps, [r[column] for r in records], label=column, linewidth=1)
    ax.set_xlabel("step")
    ax.set_ylabel("loss")
    ax.legend(loc="upper right", fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_metric_histograms(values_by_metric: dict[str, list[float]], path: Path | str) -> Path:
    """One histogram panel per per-pair metric in the evaluation report."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = [name for name, values in values_by_metric.items() if values]
    if not names:
        names = list(values_by_metric)
    fig, axes = plt.subplots(1, max(len(names), 1), figsize=(4 * max(len(names), 1), 3.5))
    if len(names) <= 1:
        axes = [axes]
    for ax, name in zip(axes, names):
        values = values_by_metric.get(name, [])
        if values:
            ax.hist(values, bins=min(20, max(5, len(values))), color="steelblue", edgecolor="black")
        ax.set_title(name)
        ax.set_xlabel(name)
        ax.set_ylabel("count")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
