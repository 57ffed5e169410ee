"""Real-valued network blocks: 1-D conv, ReLU, max pooling, dense, softmax loss, Adam.

Layers cache what their backward pass needs during ``forward`` and expose
gradients via ``grad_<param>`` attributes; ``trainable()`` names the
parameter attributes so a training loop can update them generically.
Inputs are (batch, channels, length) for conv/pool and (batch, features)
for dense layers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cvconv import resolve_padding, sliding_windows
from .errors import InvalidInputError, TrainingError


def init_xavier(shape, fan_in: int, fan_out: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform Xavier/Glorot draw on +-sqrt(6/(fan_in+fan_out))."""
    if fan_in <= 0 or fan_out <= 0:
        raise InvalidInputError(f"fans must be positive, got {fan_in}, {fan_out}")
    if int(np.prod(shape)) == 0:
        raise InvalidInputError(f"zero-sized tensor request: {shape}")
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, shape)


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def for_params(cls, params: np.ndarray) -> "AdamState":
        return cls(m=np.zeros(params.shape, params.dtype), v=np.zeros(params.shape, params.dtype))


def adam_step(
    params: np.ndarray,
    grads: np.ndarray,
    state: AdamState,
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> np.ndarray:
    """Bias-corrected Adam update; returns new params, advances state in place."""
    grads = np.asarray(grads)
    if grads.shape != params.shape or state.m.shape != params.shape:
        raise InvalidInputError("gradient/state shape does not match parameters")
    if not np.all(np.isfinite(grads)):
        raise TrainingError("non-finite gradient; optimizer diverged")
    state.t += 1
    state.m *= beta1
    state.m += (1.0 - beta1) * grads
    state.v *= beta2
    state.v += (1.0 - beta2) * grads**2
    m_hat = state.m / (1.0 - beta1**state.t)
    v_hat = state.v / (1.0 - beta2**state.t)
    return params - lr * m_hat / (np.sqrt(v_hat) + eps)


def softmax_cross_entropy(logits: np.ndarray, labels):
    """Stabilized softmax + cross-entropy.

    Single sample: 1-D logits and an int label give (loss, p - onehot).
    Batch: (B, K) logits and length-B labels give the mean loss and the
    mean-loss gradient (p - onehot)/B.
    """
    logits = np.asarray(logits, dtype=np.float64)
    single = logits.ndim == 1
    z = logits[None] if single else logits
    y = np.atleast_1d(np.asarray(labels, dtype=np.intp))
    if np.any(y < 0) or np.any(y >= z.shape[1]):
        raise InvalidInputError("label outside class range")
    shifted = z - z.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    p = exp / exp.sum(axis=1, keepdims=True)
    rows = np.arange(z.shape[0])
    losses = -(shifted[rows, y] - np.log(exp.sum(axis=1)))
    grad = p.copy()
    grad[rows, y] -= 1.0
    if single:
        return float(losses[0]), grad[0]
    return float(losses.mean()), grad / z.shape[0]


def pool_output_length(length: int, size: int, stride: int) -> int:
    return (length - size) // stride + 1


class Conv1d:
    """Sliding dot-product convolution with bias, exact gradients."""

    def __init__(self, weights: np.ndarray, bias: np.ndarray, stride: int = 1, padding="same"):
        self.weights = np.asarray(weights, dtype=np.float64)  # (out_ch, in_ch, width)
        self.bias = np.asarray(bias, dtype=np.float64)
        if self.weights.ndim != 3 or self.bias.shape != (self.weights.shape[0],):
            raise InvalidInputError("conv weights must be (out_ch, in_ch, width) with per-channel bias")
        self.stride = stride
        self.padding = padding
        self.grad_weights = np.zeros_like(self.weights)
        self.grad_bias = np.zeros_like(self.bias)
        self._cols = None
        self._in_len = None

    @classmethod
    def build(cls, in_channels: int, out_channels: int, width: int, rng, stride=1, padding="same"):
        fan_in = in_channels * width
        weights = init_xavier((out_channels, in_channels, width), fan_in, out_channels, rng)
        return cls(weights, np.zeros(out_channels), stride, padding)

    def trainable(self):
        return ["weights", "bias"]

    def param_count(self) -> int:
        return self.weights.size + self.bias.size

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.ndim != 3 or x.shape[1] != self.weights.shape[1]:
            raise InvalidInputError(
                f"expected (batch, {self.weights.shape[1]}, length) input, got {x.shape}"
            )
        self._in_len = x.shape[2]
        self._cols = sliding_windows(x, self.weights.shape[2], self.stride, self.padding)
        out = self._cols @ self.weights.reshape(self.weights.shape[0], -1).T + self.bias
        return np.ascontiguousarray(out.transpose(0, 2, 1))

    def backward(self, dout: np.ndarray) -> np.ndarray:
        batch, out_ch, n_win = dout.shape
        g = dout.transpose(0, 2, 1).reshape(-1, out_ch)
        cols = self._cols.reshape(-1, self._cols.shape[-1])
        self.grad_weights = (g.T @ cols).reshape(self.weights.shape)
        self.grad_bias = g.sum(axis=0)

        in_ch, width = self.weights.shape[1], self.weights.shape[2]
        dcols = (g @ self.weights.reshape(out_ch, -1)).reshape(batch, n_win, in_ch, width)
        dcols = dcols.transpose(0, 2, 1, 3)  # (batch, in_ch, n_win, width)
        left, right = resolve_padding(width, self.padding)
        dx_padded = np.zeros((batch, in_ch, self._in_len + left + right), dtype=dcols.dtype)
        if self.stride == 1:
            for w in range(width):
                dx_padded[:, :, w : w + n_win] += dcols[:, :, :, w]
        else:
            offsets = np.arange(n_win) * self.stride
            for w in range(width):  # offsets are distinct for fixed w, so += is safe
                dx_padded[:, :, offsets + w] += dcols[:, :, :, w]
        return dx_padded[:, :, left : left + self._in_len]


class Dense:
    """Affine map y = x @ W.T + b on (batch, features)."""

    def __init__(self, weights: np.ndarray, bias: np.ndarray):
        self.weights = np.asarray(weights, dtype=np.float64)  # (out, in)
        self.bias = np.asarray(bias, dtype=np.float64)
        if self.weights.ndim != 2 or self.bias.shape != (self.weights.shape[0],):
            raise InvalidInputError("dense weights must be (out, in) with matching bias")
        self.grad_weights = np.zeros_like(self.weights)
        self.grad_bias = np.zeros_like(self.bias)
        self._x = None

    @classmethod
    def build(cls, in_features: int, out_features: int, rng):
        weights = init_xavier((out_features, in_features), in_features, out_features, rng)
        return cls(weights, np.zeros(out_features))

    def trainable(self):
        return ["weights", "bias"]

    def param_count(self) -> int:
        return self.weights.size + self.bias.size

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.ndim != 2 or x.shape[1] != self.weights.shape[1]:
            raise InvalidInputError(
                f"expected (batch, {self.weights.shape[1]}) input, got {x.shape}"
            )
        self._x = x
        return x @ self.weights.T + self.bias

    def backward(self, dout: np.ndarray) -> np.ndarray:
        self.grad_weights = dout.T @ self._x
        self.grad_bias = dout.sum(axis=0)
        return dout @ self.weights


class ReLU:
    def __init__(self):
        self._mask = None

    def trainable(self):
        return []

    def param_count(self) -> int:
        return 0

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._mask = x > 0
        return np.where(self._mask, x, 0.0)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        return np.where(self._mask, dout, 0.0)


class MaxPool1d:
    """Windowed maximum; ties resolve to the first index, and the backward
    pass routes each gradient to that argmax position only."""

    def __init__(self, size: int, stride: int | None = None):
        if size < 1:
            raise InvalidInputError(f"pool size must be >= 1, got {size}")
        self.size = size
        self.stride = stride if stride is not None else size
        self._argmax = None
        self._in_shape = None

    def trainable(self):
        return []

    def param_count(self) -> int:
        return 0

    def forward(self, x: np.ndarray) -> np.ndarray:
        n_win = pool_output_length(x.shape[2], self.size, self.stride)
        if n_win < 1:
            raise InvalidInputError("input shorter than one pool window")
        if self.stride == self.size:  # non-overlapping: reshape view, no copy
            windows = x[:, :, : n_win * self.size].reshape(*x.shape[:2], n_win, self.size)
        else:
            idx = np.arange(n_win)[:, None] * self.stride + np.arange(self.size)[None, :]
            windows = x[:, :, idx]  # (batch, ch, n_win, size)
        self._argmax = windows.argmax(axis=3)
        self._in_shape = x.shape
        return windows.max(axis=3)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        batch, ch, n_win = dout.shape
        dx = np.zeros(self._in_shape, dtype=dout.dtype)
        pos = np.arange(n_win) * self.stride + self._argmax  # (batch, ch, n_win)
        b_idx = np.arange(batch)[:, None, None]
        c_idx = np.arange(ch)[None, :, None]
        np.add.at(dx, (b_idx, c_idx, pos), dout)
        return dx


class Flatten:
    def __init__(self):
        self._shape = None

    def trainable(self):
        return []

    def param_count(self) -> int:
        return 0

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        return dout.reshape(self._shape)
