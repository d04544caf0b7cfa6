"""The hybrid model: conv stack -> linear reduce -> quantum layer -> head.

Inputs are [B, 1, 8, 8] grids normalized to [0, 1].  Three conv blocks
(conv 3x3 pad 1, relu, 2x2 max pool, dropout 0.5) widen channels
1 -> 16 -> 32 -> 64 while pooling 8x8 down to 1x1; the flattened 64-vector
is reduced to one feature per qubit, encoded and evolved by the quantum
layer, and the expectation vector feeds a linear classifier head.

The quantum layer processes samples one at a time (the statevector has no
batch dimension); the classical stages are batched numpy.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from . import nn
from .encodings import FeatureMapSpec, build_feature_map, build_two_local, compose
from .qnn import QnnLayer, observable_qubits, qnn_forward, qnn_grad
from .simulator import run

NUM_CLASSES = 3
CONV_CHANNELS = (16, 32, 64)
DROPOUT_P = 0.5
INPUT_TOLERANCE = 1e-9

CAPTURE_STAGES = ("classical", "feature_map", "qnn")

CHECKPOINT_MAGIC = "hqcnn-checkpoint"
CHECKPOINT_VERSION = "v1"


class HqcnnModel:
    """Hybrid classifier with seeded, reproducible initialization."""

    def __init__(
        self,
        feature_map: FeatureMapSpec,
        n_qubits: int = 4,
        ansatz_reps: int = 1,
        observables: str = "per_qubit_z",
        num_classes: int = NUM_CLASSES,
        seed: int = 0,
    ):
        self.feature_map_spec = feature_map
        self.n_qubits = n_qubits
        self.ansatz_reps = ansatz_reps
        self.observables_mode = observables
        self.num_classes = num_classes
        self.fm_circuit = build_feature_map(feature_map, n_qubits)
        circuit = compose(self.fm_circuit, build_two_local(n_qubits, ansatz_reps))

        rng = np.random.default_rng(seed)
        self.conv_w: list[nn.Tensor] = []
        self.conv_b: list[nn.Tensor] = []
        in_ch = 1
        for out_ch in CONV_CHANNELS:
            fan_in = in_ch * 9
            self.conv_w.append(nn.Tensor(nn.uniform_init(rng, (out_ch, in_ch, 3, 3), fan_in)))
            self.conv_b.append(nn.Tensor(nn.uniform_init(rng, (out_ch,), fan_in)))
            in_ch = out_ch
        flat_dim = CONV_CHANNELS[-1]
        self.reduce_w = nn.Tensor(nn.uniform_init(rng, (n_qubits, flat_dim), flat_dim))
        self.reduce_b = nn.Tensor(nn.uniform_init(rng, (n_qubits,), flat_dim))
        q_weights = rng.uniform(-np.pi, np.pi, size=circuit.weight_slots)
        self.qnn = QnnLayer(circuit, observable_qubits(observables, n_qubits), q_weights)
        self.q_weights = nn.Tensor(self.qnn.weights)
        self.qnn.weights = self.q_weights.values  # shared buffer
        n_out = self.qnn.n_outputs
        self.head_w = nn.Tensor(nn.uniform_init(rng, (num_classes, n_out), n_out))
        self.head_b = nn.Tensor(nn.uniform_init(rng, (num_classes,), n_out))

    def parameters(self) -> list[nn.Tensor]:
        return (
            [t for pair in zip(self.conv_w, self.conv_b) for t in pair]
            + [self.reduce_w, self.reduce_b, self.q_weights, self.head_w, self.head_b]
        )

    def parameter_names(self) -> list[str]:
        names = []
        for i in range(len(self.conv_w)):
            names += [f"conv{i + 1}_w", f"conv{i + 1}_b"]
        return names + ["reduce_w", "reduce_b", "q_weights", "head_w", "head_b"]

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def _validate_input(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim != 4 or x.shape[1:] != (1, 8, 8):
            raise ValueError(f"expected input [B, 1, 8, 8], got {x.shape}")
        if x.min() < -INPUT_TOLERANCE or x.max() > 1.0 + INPUT_TOLERANCE:
            raise ValueError("inputs must be normalized to [0, 1]")
        return x

    def _forward_pass(self, x, training, rng, want_cache):
        cache = {"x": x} if want_cache else None
        h = x
        for i in range(len(self.conv_w)):
            pre = nn.conv2d(h, self.conv_w[i].values, self.conv_b[i].values)
            act = nn.relu(pre)
            pooled, arg = nn.maxpool2(act)
            dropped, mask = nn.dropout(pooled, DROPOUT_P, training, rng)
            if want_cache:
                cache[f"conv{i}_in"] = h
                cache[f"conv{i}_pre"] = pre
                cache[f"conv{i}_arg"] = arg
                cache[f"conv{i}_act_shape"] = act.shape
                cache[f"conv{i}_mask"] = mask
            h = dropped
        flat = nn.flatten(h)
        reduced = nn.linear(flat, self.reduce_w.values, self.reduce_b.values)
        q_out = np.stack([qnn_forward(self.qnn, reduced[b]) for b in range(len(reduced))])
        logits = nn.linear(q_out, self.head_w.values, self.head_b.values)
        if want_cache:
            cache["flat"] = flat
            cache["reduced"] = reduced
            cache["q_out"] = q_out
        return logits, cache

    def forward(
        self,
        x: np.ndarray,
        training: bool = False,
        rng: np.random.Generator | None = None,
        capture: set[str] | None = None,
    ):
        """Logits [B, num_classes]; optionally also stage embeddings.

        Capturable stages: ``classical`` (the reduced per-qubit feature
        vector), ``feature_map`` (basis probabilities of the encoding-only
        state, 2**n reals), and ``qnn`` (the expectation vector).
        """
        x = self._validate_input(x)
        logits, cache = self._forward_pass(x, training, rng, capture is not None)
        if capture is None:
            return logits
        unknown = set(capture) - set(CAPTURE_STAGES)
        if unknown:
            raise ValueError(f"unknown capture stages {sorted(unknown)}")
        captured: dict[str, np.ndarray] = {}
        if "classical" in capture:
            captured["classical"] = cache["reduced"]
        if "feature_map" in capture:
            captured["feature_map"] = np.stack(
                [
                    run(self.fm_circuit, row, ()).probabilities()
                    for row in cache["reduced"]
                ]
            )
        if "qnn" in capture:
            captured["qnn"] = cache["q_out"]
        return logits, captured

    def loss_and_grads(
        self,
        x: np.ndarray,
        class_index: np.ndarray,
        training: bool = True,
        rng: np.random.Generator | None = None,
    ) -> tuple[float, np.ndarray]:
        """Cross-entropy loss; accumulates parameter gradients in place."""
        x = self._validate_input(x)
        logits, cache = self._forward_pass(x, training, rng, want_cache=True)
        loss, dlogits = nn.softmax_cross_entropy(logits, class_index)

        d_q_out, dw, db = nn.linear_backward(dlogits, cache["q_out"], self.head_w.values)
        self.head_w.grad += dw
        self.head_b.grad += db

        reduced = cache["reduced"]
        d_reduced = np.zeros_like(reduced)
        for b in range(len(reduced)):
            jac_w, jac_f = qnn_grad(self.qnn, reduced[b])
            self.q_weights.grad += jac_w.T @ d_q_out[b]
            d_reduced[b] = jac_f.T @ d_q_out[b]

        d_flat, dw, db = nn.linear_backward(d_reduced, cache["flat"], self.reduce_w.values)
        self.reduce_w.grad += dw
        self.reduce_b.grad += db

        dh = d_flat.reshape(len(x), CONV_CHANNELS[-1], 1, 1)
        for i in reversed(range(len(self.conv_w))):
            dh = nn.dropout_backward(dh, cache[f"conv{i}_mask"])
            dh = nn.maxpool2_backward(dh, cache[f"conv{i}_arg"], cache[f"conv{i}_act_shape"])
            dh = nn.relu_backward(dh, cache[f"conv{i}_pre"])
            dh, dw, db = nn.conv2d_backward(dh, cache[f"conv{i}_in"], self.conv_w[i].values)
            self.conv_w[i].grad += dw
            self.conv_b[i].grad += db
        return loss, logits


@dataclass
class RunLog:
    """Per-epoch accuracy/loss series plus the config echo and seed."""

    train_acc: list[float] = field(default_factory=list)
    val_acc: list[float] = field(default_factory=list)
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    config: dict = field(default_factory=dict)
    seed: int = 0

    def append(self, ta: float, va: float, tl: float, vl: float) -> None:
        self.train_acc.append(ta)
        self.val_acc.append(va)
        self.train_loss.append(tl)
        self.val_loss.append(vl)

    def __len__(self) -> int:
        return len(self.train_acc)

    def to_csv(self, path) -> None:
        lines = ["epoch,train_acc,val_acc,train_loss,val_loss"]
        for e in range(len(self)):
            lines.append(
                f"{e + 1},{self.train_acc[e]:.6f},{self.val_acc[e]:.6f},"
                f"{self.train_loss[e]:.6f},{self.val_loss[e]:.6f}"
            )
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path) -> "RunLog":
        with open(path, "r", encoding="ascii") as fh:
            lines = fh.read().splitlines()
        if not lines or lines[0] != "epoch,train_acc,val_acc,train_loss,val_loss":
            raise ValueError(f"{path}: not a training log")
        log = cls()
        for line in lines[1:]:
            if not line.strip():
                continue
            _, ta, va, tl, vl = line.split(",")
            log.append(float(ta), float(va), float(tl), float(vl))
        return log


def batch_metrics(model: HqcnnModel, x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """(accuracy, mean loss) with dropout off."""
    if len(x) == 0:
        raise ValueError("empty sample set")
    logits = model.forward(x, training=False)
    loss, _ = nn.softmax_cross_entropy(logits, y)
    acc = float((logits.argmax(axis=1) == y).mean())
    return acc, loss


def evaluate(model: HqcnnModel, x: np.ndarray, y: np.ndarray) -> float:
    """Fraction of argmax(logits) == label, dropout off."""
    return batch_metrics(model, x, y)[0]


def train(
    model: HqcnnModel,
    dataset,
    epochs: int = 500,
    batch_size: int = 64,
    lr: float = 0.01,
    momentum: float = 0.9,
    weight_decay: float = 1e-4,
    seed: int = 0,
) -> RunLog:
    """Mini-batch SGD training; deterministic for a fixed seed.

    Dropout is on for optimization and off for the per-epoch evaluation
    passes that fill the run log.
    """
    train_x, train_y = dataset.arrays("train")
    val_x, val_y = dataset.arrays("val")
    if len(train_x) == 0 or len(val_x) == 0:
        raise ValueError("dataset must have nonempty train and validation splits")
    if batch_size > len(train_x):
        raise ValueError(
            f"batch size {batch_size} exceeds training set of {len(train_x)}"
        )
    rng = np.random.default_rng(seed)
    opt = nn.SgdNesterov(lr=lr, momentum=momentum, weight_decay=weight_decay)
    log = RunLog(seed=seed)
    params = model.parameters()
    for _ in range(epochs):
        order = rng.permutation(len(train_x))
        for start in range(0, len(order), batch_size):
            idx = order[start : start + batch_size]
            model.zero_grad()
            model.loss_and_grads(train_x[idx], train_y[idx], training=True, rng=rng)
            nn.sgd_nesterov_step(params, opt)
        ta, tl = batch_metrics(model, train_x, train_y)
        va, vl = batch_metrics(model, val_x, val_y)
        log.append(ta, va, tl, vl)
    return log


def save_checkpoint(model: HqcnnModel, path) -> None:
    """Plain-text shape manifest, then little-endian float64 data."""
    names = model.parameter_names()
    params = model.parameters()
    manifest = [f"{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}"]
    manifest += [
        f"{name} {'x'.join(str(d) for d in p.shape)}" for name, p in zip(names, params)
    ]
    manifest.append("---")
    with open(path, "wb") as fh:
        fh.write(("\n".join(manifest) + "\n").encode("ascii"))
        for p in params:
            fh.write(struct.pack(f"<{p.values.size}d", *p.values.ravel()))


def load_checkpoint(model: HqcnnModel, path) -> None:
    with open(path, "rb") as fh:
        blob = fh.read()
    sep = blob.find(b"---\n")
    if sep < 0 or not blob.startswith(f"{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}".encode()):
        raise ValueError(f"{path}: not a checkpoint file")
    lines = blob[:sep].decode("ascii").splitlines()[1:]
    data = blob[sep + 4 :]
    names = model.parameter_names()
    params = model.parameters()
    if len(lines) != len(params):
        raise ValueError(f"{path}: manifest lists {len(lines)} tensors, model has {len(params)}")
    offset = 0
    for line, name, p in zip(lines, names, params):
        got_name, _, got_shape = line.partition(" ")
        shape = tuple(int(d) for d in got_shape.split("x"))
        if got_name != name or shape != p.shape:
            raise ValueError(
                f"{path}: manifest entry {line!r} does not match {name} {p.shape}"
            )
        count = int(np.prod(shape))
        values = struct.unpack_from(f"<{count}d", data, offset)
        offset += count * 8
        p.values[...] = np.array(values).reshape(shape)
    if offset != len(data):
        raise ValueError(f"{path}: trailing bytes after tensor data")
