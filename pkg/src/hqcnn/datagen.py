"""Synthetic paired-variable heatmaps labeled by dependence direction.

Each sample is an 8x8 two-dimensional histogram of 500 (x, y) draws,
rescaled to [0, 1].  Label +1 means y follows a random monotone-increasing
map of x plus tight conditional noise, -1 swaps the roles of x and y, and
0 draws the pair independently.  Axis 0 of the grid bins x, axis 1 bins y,
so the two directed classes are exact transposes of each other under a
shared random stream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GRID = 8
N_POINTS = 500
NOISE = 0.05
LABELS = (-1, 0, 1)

FILE_MAGIC = "hqcnn-heatmaps"
FILE_VERSION = "v1"


class DataFormatError(ValueError):
    """Raised for unreadable or inconsistent dataset files."""


def label_to_index(label: int) -> int:
    """Bijection {-1, 0, +1} -> {0, 1, 2}."""
    try:
        return LABELS.index(label)
    except ValueError:
        raise ValueError(f"label must be one of {LABELS}, got {label}") from None


def index_to_label(index: int) -> int:
    if not 0 <= index < len(LABELS):
        raise ValueError(f"class index must be in [0, {len(LABELS)}), got {index}")
    return LABELS[index]


@dataclass
class Heatmap:
    grid: np.ndarray  # (8, 8), values in [0, 1]
    label: int


@dataclass
class Dataset:
    heatmaps: list[Heatmap]
    train_idx: list[int]
    val_idx: list[int]
    seed: int

    def labels(self) -> np.ndarray:
        return np.array([h.label for h in self.heatmaps], dtype=int)

    def arrays(self, which: str = "train") -> tuple[np.ndarray, np.ndarray]:
        """(inputs [N, 1, 8, 8], class indices [N]) for one split."""
        idx = {"train": self.train_idx, "val": self.val_idx}[which]
        x = np.stack([self.heatmaps[i].grid for i in idx])[:, None, :, :]
        y = np.array([label_to_index(self.heatmaps[i].label) for i in idx], dtype=int)
        return x, y


def normalize01(grid: np.ndarray) -> np.ndarray:
    """(v - min) / (max - min); an all-equal grid maps to all zeros."""
    grid = np.asarray(grid, dtype=float)
    if not np.isfinite(grid).all():
        raise ValueError("grid contains non-finite values")
    lo, hi = grid.min(), grid.max()
    if hi == lo:
        return np.zeros_like(grid)
    return (grid - lo) / (hi - lo)


def random_monotone_map(rng: np.random.Generator):
    """Piecewise-linear increasing map on [0, 1] through 4 random knots."""
    inner = np.sort(rng.uniform(0.05, 0.95, size=2))
    xs = np.array([0.0, inner[0], inner[1], 1.0])
    ys = np.sort(rng.uniform(0.0, 1.0, size=4))
    span = ys[-1] - ys[0]
    ys = (ys - ys[0]) / span if span > 0 else np.linspace(0.0, 1.0, 4)
    return lambda t: np.interp(t, xs, ys)


def draw_pairs(
    label: int,
    rng: np.random.Generator,
    n_points: int = N_POINTS,
    noise: float = NOISE,
    monotone_map=None,
) -> tuple[np.ndarray, np.ndarray]:
    """Raw (x, y) point pairs for one sample, before binning."""
    if label not in LABELS:
        raise ValueError(f"label must be one of {LABELS}, got {label}")
    if label == 0:
        return rng.random(n_points), rng.random(n_points)
    f = monotone_map if monotone_map is not None else random_monotone_map(rng)
    driver = rng.random(n_points)
    response = np.clip(f(driver) + rng.normal(0.0, noise, size=n_points), 0.0, 1.0)
    if label == 1:
        return driver, response
    return response, driver


def generate_sample(
    label: int,
    rng: np.random.Generator,
    n_points: int = N_POINTS,
    noise: float = NOISE,
    monotone_map=None,
) -> Heatmap:
    x, y = draw_pairs(label, rng, n_points=n_points, noise=noise, monotone_map=monotone_map)
    counts, _, _ = np.histogram2d(x, y, bins=GRID, range=[[0.0, 1.0], [0.0, 1.0]])
    return Heatmap(grid=normalize01(counts), label=label)


def stratified_split(
    labels: np.ndarray | list, val_fraction: float = 0.2
) -> tuple[list[int], list[int]]:
    """Per-class positional split: the tail of each class block validates.

    Positional within the (already seed-generated) class order, so a
    dataset file reloads to the identical split without persisting a seed.
    """
    labels = np.asarray(labels)
    train_idx: list[int] = []
    val_idx: list[int] = []
    for label in LABELS:
        members = np.flatnonzero(labels == label)
        if members.size == 0:
            continue
        n_val = max(1, round(members.size * val_fraction))
        train_idx.extend(int(i) for i in members[: members.size - n_val])
        val_idx.extend(int(i) for i in members[members.size - n_val :])
    return sorted(train_idx), sorted(val_idx)


def make_dataset(n_per_class: int, seed: int = 0) -> Dataset:
    """3 * n_per_class samples, class-blocked, with an 80/20 split.

    Each sample draws from its own seed-derived substream, so generation
    is deterministic and order-independent.
    """
    if n_per_class < 5:
        raise ValueError(f"n_per_class must be >= 5, got {n_per_class}")
    heatmaps: list[Heatmap] = []
    for class_index, label in enumerate(LABELS):
        for i in range(n_per_class):
            rng = np.random.default_rng((seed, class_index, i))
            heatmaps.append(generate_sample(label, rng))
    train_idx, val_idx = stratified_split([h.label for h in heatmaps])
    return Dataset(heatmaps=heatmaps, train_idx=train_idx, val_idx=val_idx, seed=seed)


def shuffled_label_control(dataset: Dataset, seed: int) -> Dataset:
    """Copy of the dataset with labels permuted: the chance-level control."""
    rng = np.random.default_rng((seed, 0xC0))
    labels = dataset.labels()
    perm = rng.permutation(len(labels))
    heatmaps = [
        Heatmap(grid=h.grid.copy(), label=int(labels[perm[i]]))
        for i, h in enumerate(dataset.heatmaps)
    ]
    return Dataset(
        heatmaps=heatmaps,
        train_idx=list(dataset.train_idx),
        val_idx=list(dataset.val_idx),
        seed=dataset.seed,
    )


def save(dataset: Dataset, path) -> None:
    """One text record per sample: 64 cell values then the integer label."""
    lines = [f"{FILE_MAGIC} {FILE_VERSION} n={len(dataset.heatmaps)}"]
    for h in dataset.heatmaps:
        cells = " ".join(repr(float(v)) for v in h.grid.ravel())
        lines.append(f"{cells} {h.label}")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load(path) -> Dataset:
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise DataFormatError(f"{path}: empty file")
    header = lines[0].split()
    if len(header) != 3 or header[0] != FILE_MAGIC or header[1] != FILE_VERSION:
        raise DataFormatError(f"{path}: line 1: bad header {lines[0]!r}")
    if not header[2].startswith("n="):
        raise DataFormatError(f"{path}: line 1: missing n= count")
    try:
        count = int(header[2][2:])
    except ValueError:
        raise DataFormatError(f"{path}: line 1: bad count {header[2]!r}") from None
    records = [ln for ln in lines[1:] if ln.strip()]
    if len(records) != count:
        raise DataFormatError(
            f"{path}: header says n={count} but found {len(records)} records"
        )
    heatmaps: list[Heatmap] = []
    for lineno, line in enumerate(records, start=2):
        fields = line.split()
        if len(fields) != GRID * GRID + 1:
            raise DataFormatError(
                f"{path}: line {lineno}: expected {GRID * GRID} values + label, "
                f"got {len(fields)} fields"
            )
        try:
            values = np.array([float(v) for v in fields[:-1]]).reshape(GRID, GRID)
            label = int(fields[-1])
        except ValueError as exc:
            raise DataFormatError(f"{path}: line {lineno}: {exc}") from None
        if label not in LABELS:
            raise DataFormatError(f"{path}: line {lineno}: bad label {label}")
        heatmaps.append(Heatmap(grid=values, label=label))
    train_idx, val_idx = stratified_split([h.label for h in heatmaps])
    return Dataset(heatmaps=heatmaps, train_idx=train_idx, val_idx=val_idx, seed=0)
