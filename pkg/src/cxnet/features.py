"""Classical feature baseline: seven entropy/energy features computed on the
low-pass-filtered signal and its first and second differences, plus a linear
max-margin classifier (stochastic primal subgradient) with a one-vs-one code
matrix for multi-class tasks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .dsp import Signal, butterworth_lowpass, difference
from .errors import InvalidInputError

FEATURE_NAMES = ("shannon", "renyi", "log_energy", "apen", "sampen", "fuzzy", "exp_energy")
FULL_MASK = (1 << len(FEATURE_NAMES)) - 1  # 127


@dataclass(frozen=True)
class FeatureConfig:
    renyi_alpha: float = 0.5
    apen_m: int = 2
    apen_tau: int = 1
    apen_r: float = 0.2  # times the series standard deviation
    sampen_m: int = 2
    sampen_tau: int = 1
    sampen_r: float = 0.2
    fuzzy_m: int = 3
    fuzzy_tau: int = 3
    fuzzy_r: float = 0.15
    histogram_bins: int = 64
    lowpass_hz: float = 60.0
    lowpass_order: int = 6

    def __post_init__(self):
        if min(self.apen_m, self.sampen_m, self.fuzzy_m) < 1:
            raise InvalidInputError("embedding dimensions must be >= 1")
        if min(self.apen_r, self.sampen_r, self.fuzzy_r, self.renyi_alpha) <= 0:
            raise InvalidInputError("feature parameters must be positive")
        if self.histogram_bins < 1:
            raise InvalidInputError("histogram_bins must be >= 1")


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    names: tuple[str, ...]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.size != len(self.names):
            raise InvalidInputError("values and names must align")
        object.__setattr__(self, "values", values)


# ---------------------------------------------------------------------------
# Histogram entropies
# ---------------------------------------------------------------------------


def _histogram_probs(x: np.ndarray, bins: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        raise InvalidInputError("empty input")
    if x.max() == x.min():
        return np.array([1.0])  # all mass in a single bin
    counts, _ = np.histogram(x, bins=bins, range=(x.min(), x.max()))
    return counts[counts > 0] / x.size


def shannon_entropy(x, bins: int = 64) -> float:
    p = _histogram_probs(x, bins)
    return float(-np.sum(p * np.log(p)))


def renyi_entropy(x, alpha: float = 0.5, bins: int = 64) -> float:
    if alpha <= 0 or alpha == 1.0:
        raise InvalidInputError("renyi order must be positive and != 1")
    p = _histogram_probs(x, bins)
    return float(np.log(np.sum(p**alpha)) / (1.0 - alpha))


def log_energy_entropy(x) -> float:
    x = np.asarray(x, dtype=np.float64)
    return float(np.sum(np.log(x**2 + 1e-12)))


# ---------------------------------------------------------------------------
# Template-matching entropies (Chebyshev distance)
# ---------------------------------------------------------------------------


def _embed(x: np.ndarray, m: int, tau: int) -> np.ndarray:
    n_templates = x.size - (m - 1) * tau
    idx = np.arange(n_templates)[:, None] + np.arange(m)[None, :] * tau
    return x[idx]


def _chebyshev_matrix(templates: np.ndarray) -> np.ndarray:
    return np.max(np.abs(templates[:, None, :] - templates[None, :, :]), axis=2)


def _check_length(x: np.ndarray, m: int, tau: int):
    if x.size <= (m + 1) * tau:
        raise InvalidInputError(
            f"series of length {x.size} too short for m={m}, tau={tau}"
        )


def approximate_entropy(x, m: int = 2, tau: int = 1, r: float | None = None) -> float:
    """Template-regularity statistic with self-matches included.

    ``r`` is the absolute tolerance; default 0.2 times the sample std.
    """
    x = np.asarray(x, dtype=np.float64)
    _check_length(x, m, tau)
    if r is None:
        r = 0.2 * np.std(x, ddof=1)
    phis = []
    for length in (m, m + 1):
        dist = _chebyshev_matrix(_embed(x, length, tau))
        frac = np.mean(dist <= r, axis=1)  # self-match keeps frac >= 1/N
        phis.append(np.mean(np.log(frac)))
    return float(phis[0] - phis[1])


def sample_entropy(x, m: int = 2, tau: int = 1, r: float | None = None) -> float:
    """-log(A/B) over matching template pairs, self-matches excluded.

    Returns +inf when no (m+1)-length pair matches (flagged sentinel).
    """
    x = np.asarray(x, dtype=np.float64)
    _check_length(x, m, tau)
    if r is None:
        r = 0.2 * np.std(x, ddof=1)
    n_templates = x.size - m * tau  # same template count at both lengths
    counts = []
    for length in (m, m + 1):
        dist = _chebyshev_matrix(_embed(x, length, tau)[:n_templates])
        matches = np.sum(dist <= r) - n_templates  # drop the diagonal
        counts.append(matches)
    b_count, a_count = counts
    if a_count == 0 or b_count == 0:
        return float("inf")
    return float(-np.log(a_count / b_count))


def fuzzy_entropy(x, m: int = 3, tau: int = 3, r: float | None = None) -> float:
    """Mean-centered templates with exponential membership exp(-(d/r)^2)."""
    x = np.asarray(x, dtype=np.float64)
    _check_length(x, m, tau)
    if r is None:
        r = 0.15 * np.std(x, ddof=1)
    phis = []
    for length in (m, m + 1):
        templates = _embed(x, length, tau)
        templates = templates - templates.mean(axis=1, keepdims=True)
        dist = _chebyshev_matrix(templates)
        if r > 0:
            sim = np.exp(-((dist / r) ** 2))
        else:
            sim = (dist == 0).astype(np.float64)  # zero-spread series: exact matches only
        n = sim.shape[0]
        pair_mean = (sim.sum() - n) / (n * (n - 1))  # exclude self-pairs
        phis.append(pair_mean)
    if phis[0] <= 0 or phis[1] <= 0:
        return float("inf")
    return float(np.log(phis[0]) - np.log(phis[1]))


def exponential_energy(x) -> float:
    """Mean of exp(x_i^2 / sd^2); a documented stand-in normalization.

    A zero-spread signal substitutes sd = 1, so a zero signal scores exactly 1.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        raise InvalidInputError("empty input")
    sd = np.std(x, ddof=1) if x.size > 1 else 0.0
    if not sd > 0:
        sd = 1.0
    return float(np.mean(np.exp((x / sd) ** 2)))


# ---------------------------------------------------------------------------
# Feature extraction over filtered signal + differences
# ---------------------------------------------------------------------------


def _feature_value(name: str, x: np.ndarray, cfg: FeatureConfig) -> float:
    if name == "shannon":
        return shannon_entropy(x, cfg.histogram_bins)
    if name == "renyi":
        return renyi_entropy(x, cfg.renyi_alpha, cfg.histogram_bins)
    if name == "log_energy":
        return log_energy_entropy(x)
    if name == "apen":
        return approximate_entropy(x, cfg.apen_m, cfg.apen_tau, cfg.apen_r * np.std(x, ddof=1))
    if name == "sampen":
        return sample_entropy(x, cfg.sampen_m, cfg.sampen_tau, cfg.sampen_r * np.std(x, ddof=1))
    if name == "fuzzy":
        return fuzzy_entropy(x, cfg.fuzzy_m, cfg.fuzzy_tau, cfg.fuzzy_r * np.std(x, ddof=1))
    return exponential_energy(x)


def mask_features(mask: int) -> list[str]:
    if not 0 < mask <= FULL_MASK:
        raise InvalidInputError(f"mask must be in 1..{FULL_MASK}, got {mask}")
    return [name for bit, name in enumerate(FEATURE_NAMES) if mask >> bit & 1]


def extract_features(signal: Signal, mask: int, cfg: FeatureConfig | None = None) -> FeatureVector:
    """Selected features of the 60 Hz-low-passed signal and its first and
    second differences: 3 values per selected feature, feature-major order."""
    cfg = cfg or FeatureConfig()
    filtered = butterworth_lowpass(signal, cfg.lowpass_hz, cfg.lowpass_order)
    series = (
        ("f", filtered.samples),
        ("d1", difference(filtered, 1).samples),
        ("d2", difference(filtered, 2).samples),
    )
    values, names = [], []
    for name in mask_features(mask):
        for tag, x in series:
            values.append(_feature_value(name, x, cfg))
            names.append(f"{name}[{tag}]")
    return FeatureVector(np.array(values), tuple(names))


# ---------------------------------------------------------------------------
# Linear max-margin classifier (stochastic primal subgradient) + one-vs-one
# ---------------------------------------------------------------------------


@dataclass
class LinearSVM:
    weights: np.ndarray
    bias: float

    def decision(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x) @ self.weights + self.bias


def svm_train(
    x: np.ndarray,
    y: np.ndarray,
    lam: float = 1e-3,
    epochs: int = 40,
    rng: np.random.Generator | None = None,
) -> LinearSVM:
    """Primal hinge-loss minimization with the 1/(lam*t) step schedule.

    The bias rides along as an augmented always-one feature (so it is weakly
    regularized); labels must be -1/+1 with both classes present.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != y.size:
        raise InvalidInputError("features must be (n_samples, n_dims) matching labels")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise InvalidInputError("labels must be -1/+1")
    if np.unique(y).size < 2:
        raise InvalidInputError("need samples from both classes")
    rng = rng or np.random.default_rng(0)
    aug = np.concatenate([x, np.ones((x.shape[0], 1))], axis=1)
    w = np.zeros(aug.shape[1])
    t = 0
    for _ in range(epochs):
        for i in rng.permutation(aug.shape[0]):
            t += 1
            eta = 1.0 / (lam * t)
            w *= 1.0 - eta * lam
            if y[i] * (aug[i] @ w) < 1.0:
                w += eta * y[i] * aug[i]
    return LinearSVM(weights=w[:-1], bias=float(w[-1]))


def svm_predict(model: LinearSVM, x: np.ndarray) -> np.ndarray:
    """Labels in -1/+1; the boundary itself maps to +1."""
    return np.where(model.decision(x) >= 0, 1.0, -1.0)


@dataclass
class OvoEcocModel:
    """K(K-1)/2 pairwise learners decoded against a one-vs-one code matrix."""

    learners: list[LinearSVM]
    codebook: np.ndarray  # (n_classes, n_learners) in {-1, 0, +1}

    @property
    def n_classes(self) -> int:
        return self.codebook.shape[0]


def ecoc_ovo(
    x: np.ndarray,
    y: np.ndarray,
    lam: float = 1e-3,
    epochs: int = 40,
    rng: np.random.Generator | None = None,
) -> OvoEcocModel:
    """Train one binary learner per class pair (first class of the pair = +1)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.intp)
    classes = np.unique(y)
    n_classes = int(classes.max()) + 1
    if n_classes < 3:
        raise InvalidInputError("one-vs-one coding needs at least 3 classes")
    if classes.size != n_classes or classes.min() != 0:
        raise InvalidInputError("every class 0..K-1 must be present")
    rng = rng or np.random.default_rng(0)
    pairs = list(combinations(range(n_classes), 2))
    codebook = np.zeros((n_classes, len(pairs)), dtype=np.int8)
    learners = []
    for col, (a, b) in enumerate(pairs):
        keep = (y == a) | (y == b)
        signs = np.where(y[keep] == a, 1.0, -1.0)
        learners.append(svm_train(x[keep], signs, lam, epochs, rng))
        codebook[a, col] = 1
        codebook[b, col] = -1
    return OvoEcocModel(learners, codebook)


def ecoc_predict(model: OvoEcocModel, x: np.ndarray) -> np.ndarray:
    """Minimal Hamming-style loss over the codebook; ties pick the lowest class."""
    x = np.asarray(x, dtype=np.float64)
    signs = np.stack([svm_predict(learner, x) for learner in model.learners], axis=1)
    active = np.abs(model.codebook)  # (K, L)
    losses = (active[None] * (1.0 - signs[:, None, :] * model.codebook[None])).sum(axis=2) / 2
    return np.argmin(losses, axis=1)
