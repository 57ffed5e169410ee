"""Complex-valued 1-D convolution with modulus activation.

The layer computes U_i = Z_i^T k + b per window (a plain bilinear product,
not a Hermitian inner product) and activates with Y = |U|, which maps the
complex feature stream to real values in one step. |U| is not analytic, so
parameter gradients are taken with respect to the conjugated parameters:

    dL/dk* = 1/2 * sum_i dL/dY_i * (U_i / Y_i) * conj(Z_i)
    dL/db* = 1/2 * sum_i dL/dY_i * (U_i / Y_i)

The U_i/Y_i factor comes from d|u|/du* = u / (2|u|); dropping it fails
finite-difference checks. A real perturbation h of re(k) changes the loss
by 2*re(dL/dk*)*h, and of im(k) by 2*im(dL/dk*)*h.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, TrainingError

# keeps |U| differentiable at exactly zero during the backward pass
MODULUS_GUARD = 1e-12


def resolve_padding(width: int, padding) -> tuple[int, int]:
    """(left, right) zero padding; "same" preserves length at stride 1."""
    if padding == "same":
        left = (width - 1) // 2
        return left, width - 1 - left
    pad = int(padding)
    if pad < 0:
        raise InvalidInputError(f"padding must be >= 0, got {padding}")
    return pad, pad


def sliding_windows(x: np.ndarray, width: int, stride: int, padding) -> np.ndarray:
    """Window a (batch, channels, length) array into (batch, n_windows, channels*width)."""
    left, right = resolve_padding(width, padding)
    if left or right:
        pad_spec = [(0, 0)] * (x.ndim - 1) + [(left, right)]
        x = np.pad(x, pad_spec)
    if x.shape[-1] < width:
        raise InvalidInputError(f"input length {x.shape[-1]} shorter than kernel width {width}")
    views = np.lib.stride_tricks.sliding_window_view(x, width, axis=-1)
    views = views[..., ::stride, :]  # (batch, channels, n_windows, width)
    return views.transpose(0, 2, 1, 3).reshape(x.shape[0], views.shape[2], -1)


@dataclass
class ComplexConvLayer:
    """Complex kernels (out_channels, in_channels, width) and biases (out_channels,)."""

    kernels: np.ndarray
    biases: np.ndarray
    stride: int = 1
    padding: str | int = "same"

    def __post_init__(self):
        self.kernels = np.asarray(self.kernels)
        self.biases = np.asarray(self.biases)
        if self.kernels.dtype.kind != "c":
            self.kernels = self.kernels.astype(np.complex128)
        if self.biases.dtype.kind != "c":
            self.biases = self.biases.astype(np.complex128)
        if self.kernels.ndim != 3:
            raise InvalidInputError("kernels must have shape (out_channels, in_channels, width)")
        if self.biases.shape != (self.kernels.shape[0],):
            raise InvalidInputError("biases must have one entry per output channel")
        if self.kernels.shape[2] < 1:
            raise InvalidInputError("kernel width must be >= 1")
        if self.stride < 1:
            raise InvalidInputError("stride must be >= 1")

    @property
    def out_channels(self) -> int:
        return self.kernels.shape[0]

    @property
    def in_channels(self) -> int:
        return self.kernels.shape[1]

    @property
    def width(self) -> int:
        return self.kernels.shape[2]


def modulus(u: np.ndarray) -> np.ndarray:
    """Elementwise sqrt(re^2 + im^2 + guard^2); the guard keeps the backward
    pass away from the non-differentiable point at exactly zero."""
    return np.sqrt(u.real * u.real + u.imag * u.imag + MODULUS_GUARD * MODULUS_GUARD)


def _as_batched(z: np.ndarray) -> tuple[np.ndarray, bool]:
    z = np.asarray(z)
    if z.dtype.kind != "c":
        z = z.astype(np.complex128)
    if z.ndim == 2:
        return z[None], False
    if z.ndim == 3:
        return z, True
    raise InvalidInputError("input must be (channels, length) or (batch, channels, length)")


def complex_conv_forward(z: np.ndarray, layer: ComplexConvLayer, cols: np.ndarray | None = None):
    """Slide the complex kernels over z; return pre-activation U and Y = |U|.

    ``cols`` may pass in the windowed input from a previous call on the same z.
    """
    zb, batched = _as_batched(z)
    if zb.shape[1] != layer.in_channels:
        raise InvalidInputError(
            f"input has {zb.shape[1]} channels, layer expects {layer.in_channels}"
        )
    if cols is None:
        cols = sliding_windows(zb, layer.width, layer.stride, layer.padding)
    kernel_mat = layer.kernels.reshape(layer.out_channels, -1)
    u = cols @ kernel_mat.T + layer.biases  # (batch, n_windows, out_channels)
    u = np.ascontiguousarray(u.transpose(0, 2, 1))
    y = modulus(u)
    if not batched:
        return u[0], y[0]
    return u, y


def complex_conv_backward(
    z: np.ndarray,
    layer: ComplexConvLayer,
    u: np.ndarray,
    y: np.ndarray,
    dl_dy: np.ndarray,
    cols: np.ndarray | None = None,
):
    """Gradients of the loss w.r.t. the conjugated kernels and biases.

    ``u``/``y`` must come from the matching forward call; ``dl_dy`` is the
    real upstream gradient with y's shape. ``cols`` may pass the windowed
    input through from the forward pass.
    """
    zb, batched = _as_batched(z)
    if not batched:
        u, y, dl_dy = u[None], y[None], np.asarray(dl_dy)[None]
    if u.shape != y.shape or np.shape(dl_dy) != y.shape:
        raise InvalidInputError("u, y, and dl_dy must share one shape from the forward pass")
    if cols is None:
        cols = sliding_windows(zb, layer.width, layer.stride, layer.padding)
    g = (np.asarray(dl_dy) * (u / y)).transpose(0, 2, 1)  # (batch, n_windows, out_channels)
    flat_g = g.reshape(-1, layer.out_channels)
    flat_cols = cols.reshape(-1, cols.shape[-1])
    dk_conj = 0.5 * (flat_g.T @ np.conj(flat_cols))
    db_conj = 0.5 * flat_g.sum(axis=0)
    return dk_conj.reshape(layer.kernels.shape), db_conj


@dataclass
class ComplexAdamState:
    """First moment is complex; second moment tracks E[|g|^2] per parameter."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def for_params(cls, params: np.ndarray) -> "ComplexAdamState":
        complex_dtype = params.dtype if np.iscomplexobj(params) else np.complex128
        return cls(
            m=np.zeros(params.shape, dtype=complex_dtype),
            v=np.zeros(params.shape, dtype=np.zeros(1, complex_dtype).real.dtype),
        )


def complex_adam_step(
    params: np.ndarray,
    grad_conj: np.ndarray,
    state: ComplexAdamState,
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> np.ndarray:
    """One Adam update along -dL/dW*; returns new params, advances state in place."""
    grad_conj = np.asarray(grad_conj)
    if grad_conj.shape != params.shape or state.m.shape != params.shape:
        raise InvalidInputError("gradient/state shape does not match parameters")
    if not np.all(np.isfinite(grad_conj)):
        raise TrainingError("non-finite complex gradient; optimizer diverged")
    state.t += 1
    state.m *= beta1
    state.m += (1.0 - beta1) * grad_conj
    state.v *= beta2
    state.v += (1.0 - beta2) * (grad_conj.real**2 + grad_conj.imag**2)
    m_hat = state.m / (1.0 - beta1**state.t)
    v_hat = state.v / (1.0 - beta2**state.t)
    return params - lr * m_hat / (np.sqrt(v_hat) + eps)


def rayleigh_sigma(in_channels: int, width: int) -> float:
    """Variance-scaled default modulus scale, 1/sqrt(2*fan_in)."""
    return 1.0 / np.sqrt(2.0 * in_channels * width)


def init_complex(shape, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Rayleigh(sigma) modulus with uniform phase on [-pi, pi]."""
    if sigma <= 0:
        raise InvalidInputError(f"sigma must be positive, got {sigma}")
    r = rng.rayleigh(sigma, shape)
    theta = rng.uniform(-np.pi, np.pi, shape)
    return r * np.exp(1j * theta)
