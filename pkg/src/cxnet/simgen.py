"""Simulated signal generators: autoregressive spectrum synthesis and two
event-related-potential style corpora (additive peak vs. phase resetting).

All generators are pure functions of (config, rng) and produce fixed-length
real signals: 300 samples in both families (1.5 s at 200 Hz for the
autoregressive set, 2 s at 150 Hz for the ERP-style sets).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import LabeledDataset
from .dsp import HALF, Signal, Spectrum, expand_half, idft
from .errors import InvalidInputError

SIM1_OFFSETS = (0.0, 0.5, 1.0, -0.5, -1.0)  # class order of the 5-way task


@dataclass(frozen=True)
class Ar1Config:
    """First-order autoregressive phase model with wrap-around."""

    beta0: float  # constant drive; acts as an overall phase offset
    beta1: float  # autoregressive coefficient
    noise_var: float
    length: int
    fs: float = 200.0

    def __post_init__(self):
        if self.noise_var <= 0:
            raise InvalidInputError(f"noise_var must be positive, got {self.noise_var}")
        if self.length < 1:
            raise InvalidInputError(f"length must be positive, got {self.length}")


@dataclass(frozen=True)
class ErpConfig:
    """Settings shared by the ERP-style binary tasks."""

    theory: str  # "classical" | "phase_reset"
    location: str  # "fixed" | "random"
    fs: float = 150.0
    duration: float = 2.0
    peak_freq: float = 5.0
    band: tuple[float, float] = (4.0, 16.0)
    snr_weight: float = 1.0

    def __post_init__(self):
        if self.theory not in ("classical", "phase_reset"):
            raise InvalidInputError(f"unknown theory {self.theory!r}")
        if self.location not in ("fixed", "random"):
            raise InvalidInputError(f"unknown location mode {self.location!r}")
        if not self.snr_weight > 0:
            raise InvalidInputError("snr_weight must be positive")
        n = self.fs * self.duration
        if abs(n - round(n)) > 1e-9:
            raise InvalidInputError("duration*fs must be an integer sample count")

    @property
    def n_samples(self) -> int:
        return int(round(self.fs * self.duration))


def simulate_phase_ar1(cfg: Ar1Config, rng: np.random.Generator) -> np.ndarray:
    """Wrapped AR(1) phase track in (-pi, pi].

    Each step applies the symmetric remainder by pi (sign-preserving, like
    a truncated-quotient remainder), so values stay inside one phase period.
    """
    eps = rng.normal(0.0, math.sqrt(cfg.noise_var), cfg.length)
    theta = np.empty(cfg.length)
    prev = rng.uniform(-np.pi, np.pi)
    for t in range(cfg.length):
        prev = math.fmod(cfg.beta0 + cfg.beta1 * prev + eps[t], math.pi)
        theta[t] = prev
    return theta


def simulate_amplitude_ar1(
    length: int,
    rng: np.random.Generator,
    beta1: float = 0.5,
    noise_var: float = 0.5,
    clip: bool = True,
) -> np.ndarray:
    """Plain AR(1) magnitude track started at zero.

    Amplitudes must be non-negative, so negative excursions are clipped to 0
    by default; ``clip=False`` exposes the raw process (stationary variance
    noise_var / (1 - beta1^2)).
    """
    if length < 1:
        raise InvalidInputError(f"length must be positive, got {length}")
    eps = rng.normal(0.0, math.sqrt(noise_var), length)
    x = np.empty(length)
    prev = 0.0
    for t in range(length):
        prev = beta1 * prev + eps[t]
        x[t] = prev
    return np.maximum(x, 0.0) if clip else x


def chi2_pdf(x, df: int):
    """Chi-square probability density, elementwise for x >= 0.

    At x=0 the x->0+ limit is used where finite; for df=1 (unbounded there)
    the value 0 is substituted so shaping weights stay finite.
    """
    x = np.asarray(x, dtype=np.float64)
    half_df = df / 2.0
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = (
        np.power(x[pos], half_df - 1.0)
        * np.exp(-x[pos] / 2.0)
        / (2.0**half_df * math.gamma(half_df))
    )
    if df == 2:
        out[x == 0] = 0.5
    return out


def chi2_shape(
    amplitude: np.ndarray,
    df: int = 4,
    fs: float = 200.0,
    n: int | None = None,
    mode_hz: float = 15.0,
) -> np.ndarray:
    """Shape a half-spectrum amplitude with a chi-square density envelope.

    The frequency axis is rescaled so the density's bulk sits below ~70 Hz
    (mode near ``mode_hz`` for df > 2). Weights are peak-normalized so the
    shaping never changes the overall amplitude scale.
    """
    if df < 1:
        raise InvalidInputError(f"df must be >= 1, got {df}")
    amplitude = np.asarray(amplitude, dtype=np.float64)
    if n is None:
        n = 2 * (amplitude.size - 1)
    freqs = np.arange(amplitude.size) * (fs / n)
    scale = mode_hz / (df - 2) if df > 2 else mode_hz
    weights = chi2_pdf(freqs / scale, df)
    peak = weights.max()
    if peak > 0:
        weights = weights / peak
    return amplitude * weights


def synthesize(amplitude: np.ndarray, phase: np.ndarray, n: int, fs: float) -> Signal:
    """Time-domain signal whose half spectrum is amplitude * exp(i*phase).

    Conjugate symmetry of a real signal forces the DC bin (and Nyquist bin
    for even n) to be real, so only the cosine projection of those two bins
    survives; interior bins reproduce amplitude and phase exactly.
    """
    amplitude = np.asarray(amplitude, dtype=np.float64)
    phase = np.asarray(phase, dtype=np.float64)
    expected = n // 2 + 1
    if amplitude.shape != (expected,) or phase.shape != (expected,):
        raise InvalidInputError(
            f"amplitude/phase must both have length {expected} for n={n}"
        )
    bins = amplitude * np.exp(1j * phase)
    return idft(expand_half(Spectrum(bins, n=n, fs=fs, kind=HALF)))


def gen_sim1_dataset(
    beta1: float,
    noise_var: float,
    per_class: int,
    rng: np.random.Generator,
    length: int = 300,
    fs: float = 200.0,
    df: int = 4,
) -> LabeledDataset:
    """Five-class corpus whose classes differ only by the phase offset.

    Phases follow the wrapped AR(1) with offsets 0, +0.5, +1, -0.5, -1 (class
    labels in that order); amplitudes come from an independent AR(1) draw
    shaped by the chi-square envelope; the signal is the inverse transform.
    """
    if not (0 < beta1 < 1 and 0 < noise_var < 1):
        raise InvalidInputError("beta1 and noise_var must lie in (0, 1)")
    if per_class < 1:
        raise InvalidInputError("per_class must be >= 1")
    half_len = length // 2 + 1
    signals, labels = [], []
    for label, offset in enumerate(SIM1_OFFSETS):
        cfg = Ar1Config(offset, beta1, noise_var, half_len, fs)
        for _ in range(per_class):
            phase = simulate_phase_ar1(cfg, rng)
            amplitude = chi2_shape(simulate_amplitude_ar1(half_len, rng), df, fs, n=length)
            signals.append(synthesize(amplitude, phase, length, fs))
            labels.append(label)
    names = [f"offset={v:g}" for v in SIM1_OFFSETS]
    return LabeledDataset(signals, np.array(labels), names)


# ---------------------------------------------------------------------------
# EEG-like background noise and the two ERP-style corpora
# ---------------------------------------------------------------------------


NOISE_KNEE_HZ = 6.0
ALPHA_BUMP_DB = 12.0


def eeg_noise_template(n: int, fs: float) -> np.ndarray:
    """Amplitude template over half-spectrum bins: 1/f-type falloff flattened
    below a 6 Hz knee, with a prominent 8-12 Hz alpha-band bump; DC removed.

    Recorded scalp background flattens toward low frequencies instead of
    diverging (a pure 1/f would pack nearly all power into the first bins),
    and resting-state traces are dominated by ongoing alpha trains, so the
    bump is well above the neighboring floor.
    """
    freqs = np.arange(n // 2 + 1) * (fs / n)
    amp = 1.0 / np.sqrt(freqs**2 + NOISE_KNEE_HZ**2)
    amp[freqs == 0] = 0.0
    amp[(freqs >= 8.0) & (freqs <= 12.0)] *= 10 ** (ALPHA_BUMP_DB / 20)
    return amp


def _template_expected_variance(template: np.ndarray, n: int) -> float:
    """Mean time-domain variance of template-shaped complex-Gaussian noise.

    By Parseval, var = (1/n^2) * sum over the full spectrum of |X_k|^2;
    interior half bins appear twice with E|X|^2 = 2*A^2, the Nyquist bin
    (forced real) contributes A^2 once, DC is zero.
    """
    interior = template[1 : (n + 1) // 2]
    total = 4.0 * float(np.sum(interior**2))
    if n % 2 == 0:
        total += float(template[n // 2] ** 2)
    return total / n**2


def _shaped_noise(n: int, fs: float, rng: np.random.Generator) -> Signal:
    """Template-shaped noise draw with natural sample-to-sample variance.

    The scale is the fixed ensemble constant (expected variance 1), so the
    realized variance fluctuates the way recorded background activity would.
    The ERP-style corpora use this form: rescaling every draw to exactly
    unit variance would turn total energy into a degenerate class separator.
    """
    if n < 2:
        raise InvalidInputError(f"need at least 2 samples, got {n}")
    template = eeg_noise_template(n, fs)
    m = template.size
    bins = template * (rng.standard_normal(m) + 1j * rng.standard_normal(m))
    sig = idft(expand_half(Spectrum(bins, n=n, fs=fs, kind=HALF)))
    return Signal(sig.samples / math.sqrt(_template_expected_variance(template, n)), fs)


def eeg_noise(n: int, fs: float, rng: np.random.Generator) -> Signal:
    """Unit-variance noise whose spectrum follows the fixed EEG-like template.

    Complex Gaussian half-spectrum bins are shaped by the template and
    inverted to the time domain; the template is a documented synthetic
    stand-in for recorded-EEG background spectra. The output is normalized
    to exactly unit variance.
    """
    sig = _shaped_noise(n, fs, rng)
    return Signal(sig.samples / math.sqrt(float(np.mean(sig.samples**2))), fs)


def _gaussian_peak(t: np.ndarray, center: float, freq: float, sigma: float) -> np.ndarray:
    return np.cos(2 * np.pi * freq * (t - center)) * np.exp(-((t - center) ** 2) / (2 * sigma**2))


def gen_classical(
    location: str,
    count_pos: int,
    count_neg: int,
    snr_weight: float,
    rng: np.random.Generator,
    fs: float = 150.0,
    duration: float = 2.0,
    peak_freq: float = 5.0,
    envelope_sigma: float = 0.1,
) -> LabeledDataset:
    """Additive-peak corpus: class 0 is pure background noise, class 1 adds a
    Gaussian-windowed peak (weighted by ``snr_weight``) at a fixed or
    per-sample-uniform center.

    Every sample is mean-removed, as a recording pipeline's baseline removal
    would do; without it the peak's tiny deterministic DC component against
    the noise's exactly-zero DC would be an artificial class giveaway.
    """
    cfg = ErpConfig("classical", location, fs, duration, peak_freq, snr_weight=snr_weight)
    if count_pos < 1 or count_neg < 1:
        raise InvalidInputError("need at least one sample per class")
    n = cfg.n_samples
    t = np.arange(n) / fs
    signals, labels = [], []
    for _ in range(count_neg):
        signals.append(_shaped_noise(n, fs, rng))
        labels.append(0)
    for _ in range(count_pos):
        noise = _shaped_noise(n, fs, rng)
        center = duration / 2 if location == "fixed" else rng.uniform(0.0, duration)
        peak = _gaussian_peak(t, center, peak_freq, envelope_sigma)
        wave = noise.samples + snr_weight * peak
        signals.append(Signal(wave - wave.mean(), fs))
        labels.append(1)
    return LabeledDataset(signals, np.array(labels), ["noise", "peak+noise"])


def _four_sinusoids(
    t: np.ndarray,
    freqs: np.ndarray,
    phases: np.ndarray,
    reset_at: float | None,
    reset_phases: np.ndarray | None,
) -> np.ndarray:
    wave = np.zeros_like(t)
    for j in range(freqs.size):
        phase = np.full_like(t, phases[j])
        if reset_at is not None:
            phase[t >= reset_at] = reset_phases[j]
        wave += np.sin(2 * np.pi * freqs[j] * t + phase)
    return wave


def gen_phase_reset(
    location: str,
    count_pos: int,
    count_neg: int,
    snr_weight: float,
    rng: np.random.Generator,
    fs: float = 150.0,
    duration: float = 2.0,
    band: tuple[float, float] = (4.0, 16.0),
    n_sinusoids: int = 4,
) -> LabeledDataset:
    """Phase-reset corpus: every sample sums four random-frequency sinusoids;
    class 1 re-draws all initial phases at one reset time (center, or one
    shared uniform draw per sample). Background noise scaled by 1/snr_weight
    is added to every sample; pass snr_weight=inf for clean signals."""
    cfg = ErpConfig("phase_reset", location, fs, duration, band=band, snr_weight=1.0)
    if count_pos < 1 or count_neg < 1:
        raise InvalidInputError("need at least one sample per class")
    n = cfg.n_samples
    t = np.arange(n) / fs
    noisy = np.isfinite(snr_weight)

    def one(with_reset: bool) -> Signal:
        freqs = rng.uniform(band[0], band[1], n_sinusoids)
        phases = rng.uniform(-np.pi, np.pi, n_sinusoids)
        reset_at = None
        reset_phases = None
        if with_reset:
            reset_at = duration / 2 if location == "fixed" else rng.uniform(0.0, duration)
            reset_phases = rng.uniform(-np.pi, np.pi, n_sinusoids)
        wave = _four_sinusoids(t, freqs, phases, reset_at, reset_phases)
        if noisy:
            wave = wave + _shaped_noise(n, fs, rng).samples / snr_weight
        return Signal(wave - wave.mean(), fs)  # baseline removal, as in gen_classical

    signals = [one(False) for _ in range(count_neg)] + [one(True) for _ in range(count_pos)]
    labels = np.array([0] * count_neg + [1] * count_pos)
    return LabeledDataset(signals, labels, ["no_reset", "reset"])
