"""Run-directory reports: metrics files, stage projections, figures.

Everything a finished run writes lives here so the CLI commands stay
thin.  CSV output is comma-separated with LF endings and 6-decimal fixed
floats; ``metrics.json`` nests the config echo, the final accuracies, and
the metric block whose keys are the stable reporting contract.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .diagnostics import (
    CurveMetrics,
    compute_curve_metrics,
    fisher_discriminant_ratio,
    pca,
    silhouette,
)
from .model import CAPTURE_STAGES, HqcnnModel, RunLog

METRIC_KEYS = (
    "final_gap",
    "mean_gap",
    "epoch_to_90",
    "early_slope",
    "overfit_drop",
    "train_sigma",
    "train_mu_abs_diff",
    "val_sigma",
    "val_mu_abs_diff",
    "stability_ratio",
    "silhouette_classical",
    "silhouette_feature_map",
    "silhouette_qnn",
    "fdr_avg",
)


def _fmt(key: str, value) -> str:
    if value is None:
        return "not_reached" if key == "epoch_to_90" else "null"
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def compute_stage_report(model: HqcnnModel, dataset) -> dict:
    """Stage embeddings -> projections, variance ratios, silhouettes.

    The projection basis is fitted on the training split and reused for
    validation, so both splits live in the same coordinates.  Silhouettes
    are reported for true labels and for the model's own predictions;
    single-cluster cases come back as None.
    """
    splits = {}
    for which in ("train", "val"):
        x, y = dataset.arrays(which)
        logits, caps = model.forward(x, capture=set(CAPTURE_STAGES))
        splits[which] = {
            "true": y,
            "pred": logits.argmax(axis=1),
            "stages": caps,
        }
    report = {}
    for stage in CAPTURE_STAGES:
        train_emb = splits["train"]["stages"][stage]
        val_emb = splits["val"]["stages"][stage]
        k = min(2, train_emb.shape[1], train_emb.shape[0] - 1)
        fit = pca(train_emb, k)
        center = train_emb.mean(axis=0)
        proj = {
            "train": fit.projected,
            "val": (val_emb - center) @ fit.components.T,
        }
        sil = {}
        for which in ("train", "val"):
            for source in ("true", "pred"):
                labels = splits[which][source]
                try:
                    value = silhouette(proj[which], labels)
                except ValueError:
                    value = None
                sil[f"{which}_{source}"] = value
        report[stage] = {
            "explained_variance_ratio": [float(r) for r in fit.explained_variance_ratio],
            "silhouette": sil,
            "projected": proj,
            "labels": {w: splits[w]["true"] for w in ("train", "val")},
            "predicted": {w: splits[w]["pred"] for w in ("train", "val")},
        }
    return report


def compute_fdr(stage_report: dict) -> float | None:
    """Average pairwise separability of the first post-quantum component."""
    qnn_stage = stage_report["qnn"]
    feature = qnn_stage["projected"]["val"][:, 0]
    labels = qnn_stage["labels"]["val"]
    by_class = {int(c): feature[labels == c] for c in np.unique(labels)}
    try:
        _, avg = fisher_discriminant_ratio(by_class)
    except ValueError:
        return None
    return avg


def metrics_payload(
    log: RunLog,
    curve: CurveMetrics | None,
    stage_report: dict | None,
    fdr_avg: float | None,
    config_echo: dict,
) -> dict:
    metrics = dict.fromkeys(METRIC_KEYS)
    if curve is not None:
        metrics.update(
            final_gap=curve.final_gap,
            mean_gap=curve.mean_gap,
            epoch_to_90=curve.epoch_to_threshold,
            early_slope=curve.early_slope,
            overfit_drop=curve.overfit_drop,
            train_sigma=curve.train_sigma,
            train_mu_abs_diff=curve.train_mu,
            val_sigma=curve.val_sigma,
            val_mu_abs_diff=curve.val_mu,
            stability_ratio=curve.stability_ratio,
        )
    if stage_report is not None:
        for stage in CAPTURE_STAGES:
            metrics[f"silhouette_{stage}"] = stage_report[stage]["silhouette"]["val_pred"]
    metrics["fdr_avg"] = fdr_avg
    final_accuracy = {
        "train": log.train_acc[-1] if len(log) else None,
        "val": log.val_acc[-1] if len(log) else None,
    }
    return {"config": config_echo, "final_accuracy": final_accuracy, "metrics": metrics}


def write_metrics(payload: dict, run_dir: Path) -> None:
    with open(run_dir / "metrics.json", "w", encoding="ascii", newline="\n") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    lines = [f"{key} = {_fmt(key, value)}" for key, value in payload["metrics"].items()]
    with open(run_dir / "metrics.txt", "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_stage_files(stage_report: dict, run_dir: Path) -> list[Path]:
    written = []
    for stage, info in stage_report.items():
        for which in ("train", "val"):
            path = run_dir / f"stage_{stage}_{which}.csv"
            coords = info["projected"][which]
            labels = info["labels"][which]
            predicted = info["predicted"][which]
            header = ",".join(f"pc{i + 1}" for i in range(coords.shape[1]))
            lines = [f"{header},label,predicted"]
            for row, lab, pred in zip(coords, labels, predicted):
                cells = ",".join(f"{v:.6f}" for v in row)
                lines.append(f"{cells},{lab},{pred}")
            with open(path, "w", encoding="ascii", newline="\n") as fh:
                fh.write("\n".join(lines) + "\n")
            written.append(path)
    summary = {
        stage: {
            "explained_variance_ratio": info["explained_variance_ratio"],
            "silhouette": info["silhouette"],
        }
        for stage, info in stage_report.items()
    }
    path = run_dir / "pca_stages.json"
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    written.append(path)
    return written


def curve_metrics_or_none(log: RunLog) -> CurveMetrics | None:
    if len(log) == 0:
        return None
    return compute_curve_metrics(log.train_acc, log.val_acc)
