"""Minimal dense tensors and the layer kernels used by the hybrid model.

Forward/backward pairs are explicit functions over numpy arrays; the model
wires them together and owns the parameter tensors.  Convolution follows
the cross-correlation index form y(i,j) = sum_mn x(i+m, j+n) w(m,n) with
zero padding 1 and stride 1 (no kernel flip), which keeps spatial size.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class Tensor:
    """A parameter: dense values plus a same-shaped gradient buffer."""

    __slots__ = ("values", "grad")

    def __init__(self, values: np.ndarray):
        self.values = np.asarray(values, dtype=float)
        self.grad = np.zeros_like(self.values)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    def zero_grad(self) -> None:
        self.grad[...] = 0.0


def uniform_init(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    """Uniform +-sqrt(1/fan_in), the seeded default for conv/linear weights."""
    bound = np.sqrt(1.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)


def conv2d(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """3x3 cross-correlation with zero padding 1, summed over input channels.

    x: [B, C_in, H, W], w: [C_out, C_in, 3, 3], b: [C_out] -> [B, C_out, H, W].
    """
    if w.shape[2:] != (3, 3):
        raise ValueError(f"kernel must be 3x3, got {w.shape[2:]}")
    if x.ndim != 4 or x.shape[1] != w.shape[1]:
        raise ValueError(f"input {x.shape} incompatible with weights {w.shape}")
    xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
    windows = sliding_window_view(xp, (3, 3), axis=(2, 3))  # [B,C,H,W,3,3]
    return np.einsum("bchwmn,ocmn->bohw", windows, w) + b[None, :, None, None]


def conv2d_backward(
    dy: np.ndarray, x: np.ndarray, w: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients (dx, dw, db) of conv2d given upstream dy [B, C_out, H, W]."""
    h, wid = x.shape[2], x.shape[3]
    xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
    windows = sliding_window_view(xp, (3, 3), axis=(2, 3))
    dw = np.einsum("bchwmn,bohw->ocmn", windows, dy)
    db = dy.sum(axis=(0, 2, 3))
    dxp = np.zeros_like(xp)
    for m in range(3):
        for n in range(3):
            dxp[:, :, m : m + h, n : n + wid] += np.einsum(
                "bohw,oc->bchw", dy, w[:, :, m, n]
            )
    return dxp[:, :, 1 : h + 1, 1 : wid + 1], dw, db


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_backward(dy: np.ndarray, x: np.ndarray) -> np.ndarray:
    return dy * (x > 0.0)


def maxpool2(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """2x2 max pooling, stride 2.  Returns (pooled, argmax) for backward.

    Spatial dims must be even.  Ties go to the first occurrence, keeping
    the backward pass deterministic.
    """
    b, c, h, w = x.shape
    if h % 2 or w % 2:
        raise ValueError(f"maxpool2 requires even spatial dims, got {h}x{w}")
    tiles = x.reshape(b, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5)
    flat = tiles.reshape(b, c, h // 2, w // 2, 4)
    arg = flat.argmax(axis=-1)
    pooled = np.take_along_axis(flat, arg[..., None], axis=-1)[..., 0]
    return pooled, arg


def maxpool2_backward(dy: np.ndarray, arg: np.ndarray, in_shape) -> np.ndarray:
    b, c, h, w = in_shape
    flat = np.zeros((b, c, h // 2, w // 2, 4))
    np.put_along_axis(flat, arg[..., None], dy[..., None], axis=-1)
    tiles = flat.reshape(b, c, h // 2, w // 2, 2, 2).transpose(0, 1, 2, 4, 3, 5)
    return tiles.reshape(b, c, h, w)


def dropout(
    x: np.ndarray, p: float, training: bool, rng: np.random.Generator | None
) -> tuple[np.ndarray, np.ndarray | None]:
    """Inverted dropout: keep with prob 1-p and scale by 1/(1-p) in training.

    Evaluation mode is the identity.  Returns (output, mask) where the mask
    is reused by the backward pass.
    """
    if not training:
        return x, None
    if rng is None:
        raise ValueError("training-mode dropout needs an rng")
    mask = (rng.random(x.shape) >= p) / (1.0 - p)
    return x * mask, mask


def dropout_backward(dy: np.ndarray, mask: np.ndarray | None) -> np.ndarray:
    return dy if mask is None else dy * mask


def linear(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """x [B, in] @ w.T [in, out] + b."""
    return x @ w.T + b


def linear_backward(
    dy: np.ndarray, x: np.ndarray, w: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return dy @ w, dy.T @ x, dy.sum(axis=0)


def flatten(x: np.ndarray) -> np.ndarray:
    return x.reshape(x.shape[0], -1)


def softmax_cross_entropy(
    logits: np.ndarray, class_index: np.ndarray | list
) -> tuple[float, np.ndarray]:
    """Mean negative log softmax over the batch, with its logits gradient."""
    class_index = np.asarray(class_index, dtype=int)
    b, k = logits.shape
    if class_index.shape != (b,):
        raise ValueError("one class index per batch row required")
    if class_index.min() < 0 or class_index.max() >= k:
        raise ValueError(f"class index out of range for {k} classes")
    shifted = logits - logits.max(axis=1, keepdims=True)
    logz = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    logp = shifted - logz
    loss = float(-logp[np.arange(b), class_index].mean())
    dlogits = np.exp(logp)
    dlogits[np.arange(b), class_index] -= 1.0
    return loss, dlogits / b


@dataclass
class SgdNesterov:
    """SGD with Nesterov momentum and decoupled-from-nothing weight decay.

    Update per parameter: g = grad + weight_decay * p; v = momentum * v + g;
    p -= lr * (g + momentum * v).
    """

    lr: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 1e-4
    nesterov: bool = True
    buffers: dict[int, np.ndarray] = field(default_factory=dict)

    def step(self, params: list[Tensor]) -> None:
        for p in params:
            g = p.grad + self.weight_decay * p.values
            v = self.buffers.get(id(p))
            if v is None:
                v = np.zeros_like(p.values)
                self.buffers[id(p)] = v
            v *= self.momentum
            v += g
            if self.nesterov:
                p.values -= self.lr * (g + self.momentum * v)
            else:
                p.values -= self.lr * v


def sgd_nesterov_step(params: list[Tensor], state: SgdNesterov) -> None:
    """Apply one optimizer step, reading gradients from the tensors."""
    state.step(params)
