"""Matplotlib figures written next to the delimited run outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .model import CAPTURE_STAGES, RunLog  # noqa: E402

_STAGE_TITLES = {
    "classical": "after classical reduction",
    "feature_map": "after feature mapping",
    "qnn": "after quantum layer",
}


def save_training_curves(log: RunLog, path: Path) -> None:
    """Accuracy-vs-epoch line plot for the train and validation series."""
    epochs = range(1, len(log) + 1)
    fig, ax = plt.subplots(figsize=(7, 4.2))
    ax.plot(epochs, log.train_acc, label="train", color="tab:blue")
    ax.plot(epochs, log.val_acc, label="validation", color="tab:orange")
    ax.set_xlabel("epoch")
    ax.set_ylabel("accuracy")
    ax.set_ylim(0.0, 1.02)
    ax.grid(alpha=0.3)
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def save_stage_scatter(stage_report: dict, path: Path) -> None:
    """3x2 grid of stage projections, colored by true label, per split."""
    fig, axes = plt.subplots(len(CAPTURE_STAGES), 2, figsize=(9, 11))
    for row, stage in enumerate(CAPTURE_STAGES):
        info = stage_report[stage]
        for col, which in enumerate(("train", "val")):
            ax = axes[row, col]
            coords = info["projected"][which]
            labels = info["labels"][which]
            y = coords[:, 1] if coords.shape[1] > 1 else 0.0 * coords[:, 0]
            sc = ax.scatter(coords[:, 0], y, c=labels, cmap="viridis", s=14)
            ax.set_title(f"{_STAGE_TITLES[stage]} ({which})", fontsize=9)
            ax.set_xlabel("pc1", fontsize=8)
            ax.set_ylabel("pc2", fontsize=8)
            ax.tick_params(labelsize=7)
    fig.colorbar(sc, ax=axes, shrink=0.5, label="class index")
    fig.savefig(path, format="svg")
    plt.close(fig)
