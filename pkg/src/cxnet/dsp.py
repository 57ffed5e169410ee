"""Fourier transforms, spectrum utilities, filtering, and differencing.

Frequency bins are indexed 0..n-1 internally (bin 0 = DC); textbook 1-based
transform conventions map onto this by shifting both indices down by one.
The forward transform is unscaled, the inverse carries the 1/n factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, SymmetryError

FULL = "full"
HALF = "half"


def _validate_real_1d(samples: np.ndarray, what: str) -> np.ndarray:
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidInputError(f"{what} must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{what} contains non-finite values")
    return arr


@dataclass(frozen=True)
class Signal:
    """Real-valued time-domain sequence with its sampling rate in Hz."""

    samples: np.ndarray
    fs: float

    def __post_init__(self):
        arr = _validate_real_1d(self.samples, "signal")
        if not self.fs > 0:
            raise InvalidInputError(f"sampling rate must be positive, got {self.fs}")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.fs


@dataclass(frozen=True)
class Spectrum:
    """Complex frequency-domain sequence tied to an original signal length.

    ``kind`` is "full" (n bins) or "half" (first n//2+1 bins of a real
    signal's transform; the rest is redundant by conjugate symmetry).
    """

    bins: np.ndarray
    n: int
    fs: float
    kind: str = FULL

    def __post_init__(self):
        arr = np.asarray(self.bins, dtype=np.complex128)
        if arr.ndim != 1 or arr.size == 0:
            raise InvalidInputError("spectrum bins must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("spectrum contains non-finite values")
        if self.kind not in (FULL, HALF):
            raise InvalidInputError(f"unknown spectrum kind {self.kind!r}")
        expected = self.n if self.kind == FULL else self.n // 2 + 1
        if arr.size != expected:
            raise InvalidInputError(
                f"{self.kind} spectrum of n={self.n} needs {expected} bins, got {arr.size}"
            )
        if not self.fs > 0:
            raise InvalidInputError(f"sampling rate must be positive, got {self.fs}")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "bins", arr)

    def __len__(self) -> int:
        return self.bins.size

    @property
    def frequencies(self) -> np.ndarray:
        """Bin center frequencies in Hz."""
        return np.arange(len(self)) * (self.fs / self.n)


# ---------------------------------------------------------------------------
# Core transform kernels (operate on the last axis, any leading batch shape)
# ---------------------------------------------------------------------------


def _bit_reverse_indices(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.intp)
    for _ in range(bits):
        rev = (rev << 1) | (idx & 1)
        idx >>= 1
    return rev


def _fft_pow2(x: np.ndarray) -> np.ndarray:
    """Iterative radix-2 decimation-in-time transform; len must be 2**k."""
    n = x.shape[-1]
    a = np.asarray(x, dtype=np.complex128)[..., _bit_reverse_indices(n)].copy()
    size = 2
    while size <= n:
        half = size // 2
        twiddle = np.exp(-2j * np.pi * np.arange(half) / size)
        blocks = a.reshape(a.shape[:-1] + (n // size, size))
        even = blocks[..., :half].copy()
        odd = blocks[..., half:] * twiddle
        blocks[..., :half] = even + odd
        blocks[..., half:] = even - odd
        size *= 2
    return a


def _fft_bluestein(x: np.ndarray) -> np.ndarray:
    """Chirp-z fallback for arbitrary lengths via one power-of-two convolution."""
    n = x.shape[-1]
    m = 1 << (2 * n - 1).bit_length()
    j = np.arange(n)
    # j*j mod 2n keeps the chirp angle exact for large j
    angles = np.pi * ((j * j) % (2 * n)) / n
    chirp = np.exp(-1j * angles)

    a = np.zeros(x.shape[:-1] + (m,), dtype=np.complex128)
    a[..., :n] = np.asarray(x, dtype=np.complex128) * chirp
    b = np.zeros(m, dtype=np.complex128)
    b[:n] = np.conj(chirp)
    b[m - n + 1:] = np.conj(chirp[1:])[::-1]

    conv = _ifft_raw(_fft_raw(a) * _fft_raw(b))
    return conv[..., :n] * chirp


def _fft_raw(x: np.ndarray) -> np.ndarray:
    """Unscaled forward transform on the last axis, any length."""
    n = x.shape[-1]
    if n == 1:
        return np.asarray(x, dtype=np.complex128).copy()
    if n & (n - 1) == 0:
        return _fft_pow2(x)
    return _fft_bluestein(x)


def _ifft_raw(x: np.ndarray) -> np.ndarray:
    """Inverse transform (1/n-scaled) on the last axis, any length."""
    n = x.shape[-1]
    return np.conj(_fft_raw(np.conj(x))) / n


def _dft_direct(x: np.ndarray) -> np.ndarray:
    """O(n^2) direct-sum transform; the correctness oracle for the fast path."""
    n = x.shape[-1]
    k = np.arange(n)
    omega = np.exp(-2j * np.pi * np.outer(k, k) / n)
    return np.asarray(x, dtype=np.complex128) @ omega.T


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------


def dft(signal: Signal) -> Spectrum:
    """Full complex spectrum of a real signal (unscaled forward transform)."""
    return Spectrum(_fft_raw(signal.samples), n=len(signal), fs=signal.fs, kind=FULL)


def idft(spectrum: Spectrum, return_residue: bool = False):
    """Inverse transform of a full spectrum back to a real signal.

    The result of the inverse transform is complex in general; for
    conjugate-symmetric input the imaginary part is numerical residue, which
    is dropped. Pass ``return_residue=True`` to also get its magnitude.
    Raises ``SymmetryError`` when the residue is too large to be round-off,
    i.e. the input was not the spectrum of a real signal.
    """
    if spectrum.kind != FULL:
        raise InvalidInputError("idft needs a full spectrum; expand a half spectrum first")
    z = _ifft_raw(spectrum.bins)
    residue = float(np.max(np.abs(z.imag)))
    scale = max(1.0, float(np.max(np.abs(z.real))))
    if residue > 1e-9 * scale:
        raise SymmetryError(
            f"imaginary residue {residue:.3e} exceeds tolerance; "
            "input spectrum is not conjugate-symmetric"
        )
    signal = Signal(z.real, fs=spectrum.fs)
    if return_residue:
        return signal, residue
    return signal


def _symmetry_defect(bins: np.ndarray) -> float:
    if bins.size < 2:
        return 0.0
    return float(np.max(np.abs(bins[1:] - np.conj(bins[1:][::-1]))))


def half_spectrum(spectrum: Spectrum) -> Spectrum:
    """Keep the non-redundant first n//2+1 bins of a real signal's spectrum."""
    if spectrum.kind != FULL:
        raise InvalidInputError("half_spectrum expects a full spectrum")
    bins = spectrum.bins
    tol = 1e-9 * max(1.0, float(np.max(np.abs(bins))))
    defect = _symmetry_defect(bins)
    if defect > tol:
        raise SymmetryError(
            f"spectrum is not conjugate-symmetric (defect {defect:.3e} > {tol:.3e})"
        )
    m = spectrum.n // 2 + 1
    return Spectrum(bins[:m], n=spectrum.n, fs=spectrum.fs, kind=HALF)


def expand_half(spectrum: Spectrum) -> Spectrum:
    """Rebuild the full conjugate-symmetric spectrum from its first half.

    Conjugate symmetry forces the DC bin (and, for even n, the Nyquist bin)
    to be real; any imaginary part supplied there is dropped.
    """
    if spectrum.kind != HALF:
        raise InvalidInputError("expand_half expects a half spectrum")
    n = spectrum.n
    half = spectrum.bins
    full = np.zeros(n, dtype=np.complex128)
    full[: half.size] = half
    full[0] = half[0].real
    if n % 2 == 0:
        full[n // 2] = half[n // 2].real
        tail = np.conj(half[1 : n // 2])[::-1]
    else:
        tail = np.conj(half[1:])[::-1]
    full[half.size :] = tail
    return Spectrum(full, n=n, fs=spectrum.fs, kind=FULL)


# ---------------------------------------------------------------------------
# Butterworth low-pass (bilinear transform, cascaded biquads)
# ---------------------------------------------------------------------------


def butterworth_sos(cutoff_hz: float, fs: float, order: int) -> np.ndarray:
    """Design second-order sections for an even-order Butterworth low-pass.

    Analog prototype poles are scaled by the pre-warped cutoff
    tan(pi*fc/fs) and mapped with the bilinear transform, so the -3 dB
    point lands exactly on ``cutoff_hz``. Rows are (b0, b1, b2, a1, a2)
    with a0 normalized to 1.
    """
    if order < 2 or order % 2 != 0:
        raise InvalidInputError(f"order must be even and >= 2, got {order}")
    if not 0 < cutoff_hz < fs / 2:
        raise InvalidInputError(
            f"cutoff {cutoff_hz} Hz must lie strictly between 0 and Nyquist ({fs / 2} Hz)"
        )
    warped = math.tan(math.pi * cutoff_hz / fs)
    sections = []
    for k in range(order // 2):
        theta = math.pi / 2 + math.pi * (2 * k + 1) / (2 * order)
        re_pole = warped * math.cos(theta)
        mag2 = warped * warped
        a0 = 1.0 - 2.0 * re_pole + mag2
        a1 = 2.0 * (mag2 - 1.0)
        a2 = 1.0 + 2.0 * re_pole + mag2
        g = mag2 / a0
        sections.append((g, 2.0 * g, g, a1 / a0, a2 / a0))
    return np.asarray(sections, dtype=np.float64)


def sos_gain(sos: np.ndarray, freq_hz: float, fs: float) -> float:
    """Magnitude of the cascaded transfer function at one frequency."""
    z = np.exp(-2j * np.pi * freq_hz / fs)
    h = 1.0 + 0j
    for b0, b1, b2, a1, a2 in sos:
        h *= (b0 + b1 * z + b2 * z * z) / (1.0 + a1 * z + a2 * z * z)
    return float(np.abs(h))


def _sosfilt(sos: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Zero-state direct-form-II-transposed filtering of (..., L) arrays."""
    x = np.asarray(x, dtype=np.float64)
    y = x.copy()
    for b0, b1, b2, a1, a2 in sos:
        s1 = np.zeros(x.shape[:-1])
        s2 = np.zeros(x.shape[:-1])
        out = np.empty_like(y)
        for i in range(y.shape[-1]):
            xi = y[..., i]
            yi = b0 * xi + s1
            s1 = b1 * xi - a1 * yi + s2
            s2 = b2 * xi - a2 * yi
            out[..., i] = yi
        y = out
    return y


def butterworth_lowpass(signal: Signal, cutoff_hz: float, order: int = 6) -> Signal:
    """Single-pass zero-state Butterworth low-pass filtering."""
    sos = butterworth_sos(cutoff_hz, signal.fs, order)
    return Signal(_sosfilt(sos, signal.samples), fs=signal.fs)


# ---------------------------------------------------------------------------
# Differencing and analytic rotation
# ---------------------------------------------------------------------------


def difference(signal: Signal, order: int) -> Signal:
    """First or second finite difference; the length shrinks by ``order``."""
    if order not in (1, 2):
        raise InvalidInputError(f"difference order must be 1 or 2, got {order}")
    if len(signal) <= order:
        raise InvalidInputError(
            f"signal of length {len(signal)} too short for order-{order} difference"
        )
    return Signal(np.diff(signal.samples, n=order), fs=signal.fs)


def _analytic(samples: np.ndarray) -> np.ndarray:
    """Analytic form: negative-frequency bins zeroed, positive ones doubled."""
    n = samples.size
    spec = _fft_raw(samples)
    weights = np.zeros(n)
    weights[0] = 1.0
    if n % 2 == 0:
        weights[n // 2] = 1.0
        weights[1 : n // 2] = 2.0
    else:
        weights[1 : (n + 1) // 2] = 2.0
    return _ifft_raw(spec * weights)


def analytic_rotate(signal: Signal, angle: float) -> Signal:
    """Rotate the signal's analytic form about the time axis and re-project.

    angle=0 reproduces the input; angle=pi negates it; pi/2 swaps a cosine
    into a negative sine (the quadrature component).
    """
    rotated = _analytic(signal.samples) * np.exp(1j * angle)
    return Signal(rotated.real, fs=signal.fs)
