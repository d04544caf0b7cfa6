"""Training-curve metrics, staged PCA, silhouette, and class separability.

Conventions: accuracy series are indexed by epoch; fluctuation statistics
use the population divisor over the T-1 absolute first-order differences
(variance divided by the count of differences, not count minus one).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def generalization_gap(train_acc, val_acc) -> tuple[float, float]:
    """(final |train - val| gap, mean per-epoch absolute gap)."""
    train_acc = np.asarray(train_acc, dtype=float)
    val_acc = np.asarray(val_acc, dtype=float)
    if train_acc.size == 0 or train_acc.shape != val_acc.shape:
        raise ValueError("need equal-length nonempty train/val series")
    gaps = np.abs(train_acc - val_acc)
    return float(gaps[-1]), float(gaps.mean())


def epoch_to_threshold(val_acc, threshold: float = 0.9) -> int | None:
    """1-based index of the first epoch at or above the threshold."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must be in (0, 1)")
    val_acc = np.asarray(val_acc, dtype=float)
    hits = np.flatnonzero(val_acc >= threshold)
    return int(hits[0]) + 1 if hits.size else None


def early_slope(val_acc, n: int = 5) -> float:
    """(series[n] - series[0]) / n, the initial learning trend."""
    val_acc = np.asarray(val_acc, dtype=float)
    if val_acc.size <= n:
        raise ValueError(f"series of length {val_acc.size} too short for n={n}")
    return float((val_acc[n] - val_acc[0]) / n)


def overfit_drop(val_acc) -> float:
    """Peak validation accuracy minus final validation accuracy."""
    val_acc = np.asarray(val_acc, dtype=float)
    if val_acc.size == 0:
        raise ValueError("empty series")
    return float(val_acc.max() - val_acc[-1])


def fluctuation_stats(series) -> tuple[float, float]:
    """(sigma, mu) of the absolute epoch-to-epoch differences."""
    series = np.asarray(series, dtype=float)
    if series.size < 2:
        raise ValueError("need at least two epochs for fluctuation statistics")
    deltas = np.abs(np.diff(series))
    return float(deltas.std()), float(deltas.mean())


def stability_ratio(mu_val: float, mu_train: float) -> float:
    """Validation-to-training ratio of mean absolute fluctuations."""
    if mu_train <= 0.0:
        raise ValueError("stability ratio undefined for mu_train <= 0")
    return mu_val / mu_train


@dataclass
class CurveMetrics:
    final_gap: float
    mean_gap: float
    epoch_to_threshold: int | None
    early_slope: float | None
    overfit_drop: float
    train_sigma: float | None
    train_mu: float | None
    val_sigma: float | None
    val_mu: float | None
    stability_ratio: float | None


def compute_curve_metrics(
    train_acc, val_acc, threshold: float = 0.9, early_n: int = 5
) -> CurveMetrics:
    """All curve metrics of a finished run.

    Lenient about short runs: metrics whose preconditions a short series
    cannot meet (early slope, fluctuations) come back as None rather than
    raising, so smoke runs still produce a full report.
    """
    final_gap, mean_gap = generalization_gap(train_acc, val_acc)
    slope = early_slope(val_acc, early_n) if len(val_acc) > early_n else None
    if len(train_acc) >= 2:
        train_sigma, train_mu = fluctuation_stats(train_acc)
        val_sigma, val_mu = fluctuation_stats(val_acc)
        ratio = stability_ratio(val_mu, train_mu) if train_mu > 0 else None
    else:
        train_sigma = train_mu = val_sigma = val_mu = ratio = None
    return CurveMetrics(
        final_gap=final_gap,
        mean_gap=mean_gap,
        epoch_to_threshold=epoch_to_threshold(val_acc, threshold),
        early_slope=slope,
        overfit_drop=overfit_drop(val_acc),
        train_sigma=train_sigma,
        train_mu=train_mu,
        val_sigma=val_sigma,
        val_mu=val_mu,
        stability_ratio=ratio,
    )


@dataclass
class PcaResult:
    components: np.ndarray  # [k, dims], orthonormal rows
    explained_variance_ratio: np.ndarray  # [k]
    projected: np.ndarray  # [samples, k]


def pca(samples: np.ndarray, k: int) -> PcaResult:
    """Top-k principal directions of mean-centered data, via SVD.

    Ratios are eigenvalue shares of the total variance; zero-variance data
    yields all-zero ratios.  Component signs are fixed (largest-magnitude
    entry positive) so results are reproducible.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2 or samples.shape[0] < 2:
        raise ValueError(f"need a [samples >= 2, dims] matrix, got {samples.shape}")
    n, dims = samples.shape
    if not 1 <= k <= min(dims, n - 1):
        raise ValueError(f"k={k} out of range for {n} samples of dim {dims}")
    centered = samples - samples.mean(axis=0)
    _, svals, vt = np.linalg.svd(centered, full_matrices=False)
    eigvals = svals**2 / n
    components = vt[:k]
    for i in range(k):
        j = np.argmax(np.abs(components[i]))
        if components[i, j] < 0:
            components[i] = -components[i]
    total = eigvals.sum()
    ratios = eigvals[:k] / total if total > 0 else np.zeros(k)
    return PcaResult(
        components=components,
        explained_variance_ratio=ratios,
        projected=centered @ components.T,
    )


def silhouette(points: np.ndarray, labels) -> float:
    """Mean of (b - a) / max(a, b) over points, Euclidean distance.

    a is the mean intra-cluster distance (0 contribution for singleton
    clusters), b the smallest mean distance to another cluster; points
    with max(a, b) = 0 score 0.
    """
    points = np.asarray(points, dtype=float)
    labels = np.asarray(labels)
    if points.ndim != 2 or len(points) != len(labels):
        raise ValueError("points and labels must align")
    unique = np.unique(labels)
    if unique.size < 2:
        raise ValueError("silhouette undefined for a single cluster")
    diffs = points[:, None, :] - points[None, :, :]
    dist = np.sqrt((diffs**2).sum(axis=-1))
    scores = np.zeros(len(points))
    for i in range(len(points)):
        own = labels == labels[i]
        if own.sum() == 1:
            continue  # singleton cluster scores 0
        a = dist[i, own].sum() / (own.sum() - 1)
        b = min(dist[i, labels == other].mean() for other in unique if other != labels[i])
        denom = max(a, b)
        if denom > 0:
            scores[i] = (b - a) / denom
    return float(scores.mean())


def fisher_discriminant_ratio(
    values_by_class: dict,
) -> tuple[dict[tuple, float], float]:
    """Pairwise (mean1 - mean2)^2 / (var1 + var2) on a 1-D feature.

    Population variances.  Returns the table over ordered class pairs
    (symmetric by construction) and its average.
    """
    keys = sorted(values_by_class)
    if len(keys) < 2:
        raise ValueError("need at least two classes")
    stats = {}
    for key in keys:
        vals = np.asarray(values_by_class[key], dtype=float)
        if vals.size < 2:
            raise ValueError(f"class {key!r} needs at least 2 samples")
        stats[key] = (vals.mean(), vals.var())
    table: dict[tuple, float] = {}
    for i in keys:
        for j in keys:
            if i == j:
                continue
            (m1, v1), (m2, v2) = stats[i], stats[j]
            pooled = v1 + v2
            if pooled <= 0.0:
                raise ValueError(f"zero pooled variance for classes {i!r}, {j!r}")
            table[(i, j)] = (m1 - m2) ** 2 / pooled
    return table, float(np.mean(list(table.values())))
