"""Entropy feature values/properties and the linear classifier baseline."""

import math

import numpy as np
import pytest

from cxnet import dsp
from cxnet.errors import InvalidInputError
from cxnet.features import (
    FEATURE_NAMES,
    FeatureConfig,
    approximate_entropy,
    ecoc_ovo,
    ecoc_predict,
    exponential_energy,
    extract_features,
    fuzzy_entropy,
    log_energy_entropy,
    renyi_entropy,
    sample_entropy,
    shannon_entropy,
    svm_predict,
    svm_train,
)


class TestHistogramEntropies:
    def test_single_bin_mass_gives_zero_shannon(self):
        assert shannon_entropy(np.full(100, 3.7)) == 0.0

    def test_uniform_histogram_hits_log_bins_for_both_entropies(self):
        values = np.tile(np.arange(64.0), 5)  # exactly one value per bin
        assert shannon_entropy(values, bins=64) == pytest.approx(np.log(64), rel=1e-12)
        for alpha in (0.5, 2.0):
            assert renyi_entropy(values, alpha, bins=64) == pytest.approx(np.log(64), rel=1e-12)

    def test_renyi_approaches_shannon_as_alpha_to_one(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal(5000)
        shannon = shannon_entropy(x)
        near_one = renyi_entropy(x, alpha=0.999)
        assert near_one == pytest.approx(shannon, rel=0.01)

    def test_renyi_ordering_around_shannon(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal(2000)
        assert renyi_entropy(x, 0.5) >= shannon_entropy(x) >= renyi_entropy(x, 2.0)

    def test_shannon_bounded_by_log_bins(self):
        rng = np.random.default_rng(2)
        for _ in range(5):
            x = rng.standard_normal(500)
            assert shannon_entropy(x, bins=64) <= np.log(64) + 1e-12

    def test_log_energy_value(self):
        x = np.array([1.0, 2.0])
        expected = math.log(1.0 + 1e-12) + math.log(4.0 + 1e-12)
        assert log_energy_entropy(x) == pytest.approx(expected)


def naive_apen(x, m, r):
    """Loop-based oracle, self-matches included, tau=1."""
    def phi(length):
        templates = [x[i : i + length] for i in range(len(x) - length + 1)]
        logs = []
        for a in templates:
            count = sum(np.max(np.abs(a - b)) <= r for b in templates)
            logs.append(np.log(count / len(templates)))
        return np.mean(logs)

    return phi(m) - phi(m + 1)


def naive_sampen(x, m, r):
    """Loop-based oracle, self-matches excluded, tau=1."""
    n_templates = len(x) - m
    counts = []
    for length in (m, m + 1):
        templates = [x[i : i + length] for i in range(n_templates)]
        matches = sum(
            np.max(np.abs(templates[i] - templates[j])) <= r
            for i in range(n_templates)
            for j in range(n_templates)
            if i != j
        )
        counts.append(matches)
    return -np.log(counts[1] / counts[0])


class TestTemplateEntropies:
    def test_constant_signal_scores_zero(self):
        x = np.full(60, 2.5)
        assert approximate_entropy(x, 2, 1) == 0.0
        assert sample_entropy(x, 2, 1) == 0.0
        assert fuzzy_entropy(x, 3, 3) == 0.0

    def test_strict_alternation_is_perfectly_regular(self):
        x = np.tile([1.0, -1.0], 40)
        r = 0.2 * np.std(x, ddof=1)
        assert sample_entropy(x, 2, 1, r) == 0.0

    def test_noise_less_regular_than_sine(self):
        rng = np.random.default_rng(3)
        n = 1000
        noise = rng.standard_normal(n)
        sine = np.sqrt(2.0) * np.sin(2 * np.pi * 5 * np.arange(n) / 100.0)
        assert abs(np.var(sine) - np.var(noise)) < 0.2
        assert sample_entropy(noise, 2, 1) > sample_entropy(sine, 2, 1)

    def test_apen_matches_naive_oracle(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal(80)
        r = 0.2 * np.std(x, ddof=1)
        assert approximate_entropy(x, 2, 1, r) == pytest.approx(naive_apen(x, 2, r), rel=1e-12)

    def test_sampen_matches_naive_oracle(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal(200)  # long enough that (m+1)-matches exist
        r = 0.2 * np.std(x, ddof=1)
        value = sample_entropy(x, 2, 1, r)
        assert np.isfinite(value)
        assert value == pytest.approx(naive_sampen(x, 2, r), rel=1e-12)

    def test_sampen_infinite_sentinel_when_no_matches(self):
        x = np.array([0.0, 100.0, -3.0, 57.0, 5.0, -90.0, 22.0, -60.0])
        assert sample_entropy(x, 2, 1, r=1e-9) == float("inf")

    def test_fuzzy_nonnegative_over_random_sweep(self):
        rng = np.random.default_rng(6)
        for _ in range(100):
            x = rng.standard_normal(int(rng.integers(30, 120)))
            assert fuzzy_entropy(x, 3, 3) >= 0.0

    def test_fuzzy_offset_invariance_exact(self):
        rng = np.random.default_rng(7)
        x = rng.integers(-10, 10, 60) / 8.0  # dyadic values keep float ops exact
        assert fuzzy_entropy(x, 3, 3) == fuzzy_entropy(x + 3.0, 3, 3)

    def test_too_short_input_rejected(self):
        with pytest.raises(InvalidInputError):
            approximate_entropy(np.ones(3), 2, 1, 0.1)
        with pytest.raises(InvalidInputError):
            fuzzy_entropy(np.ones(12), 3, 3, 0.1)


class TestExponentialEnergy:
    def test_zero_signal_scores_one(self):
        assert exponential_energy(np.zeros(50)) == pytest.approx(1.0)

    def test_unit_constant_scores_e(self):
        assert exponential_energy(np.ones(50)) == pytest.approx(math.e)

    def test_matches_direct_elementwise_evaluation(self):
        rng = np.random.default_rng(8)
        x = rng.standard_normal(200)
        sd = np.std(x, ddof=1)
        expected = sum(math.exp((v / sd) ** 2) for v in x) / x.size
        assert exponential_energy(x) == pytest.approx(expected, rel=1e-12)


class TestExtractFeatures:
    def make_signal(self, seed=9):
        rng = np.random.default_rng(seed)
        return dsp.Signal(rng.standard_normal(300), fs=150.0)

    def test_single_feature_gives_three_values(self):
        vec = extract_features(self.make_signal(), mask=0b0000001)
        assert len(vec.values) == 3
        assert vec.names == ("shannon[f]", "shannon[d1]", "shannon[d2]")

    def test_all_features_give_21_values(self):
        vec = extract_features(self.make_signal(), mask=0b1111111)
        assert len(vec.values) == 21

    def test_length_is_three_per_selected_feature_for_all_masks(self):
        sig = self.make_signal(10)
        for mask in (1, 2, 3, 0b101, 0b1010101, 127):
            vec = extract_features(sig, mask)
            assert len(vec.values) == 3 * bin(mask).count("1")

    def test_deterministic_across_calls(self):
        sig = self.make_signal(11)
        a = extract_features(sig, 127)
        b = extract_features(sig, 127)
        np.testing.assert_array_equal(a.values, b.values)

    def test_zero_mask_rejected(self):
        with pytest.raises(InvalidInputError):
            extract_features(self.make_signal(), 0)


def blobs(centers, per_class, rng, spread=0.4):
    x, y = [], []
    for label, center in enumerate(centers):
        x.append(np.asarray(center) + spread * rng.standard_normal((per_class, len(center))))
        y.append(np.full(per_class, label))
    return np.concatenate(x), np.concatenate(y)


class TestSvm:
    def test_separable_blobs_reach_perfect_training_accuracy(self):
        rng = np.random.default_rng(12)
        x, y = blobs([(-2.0, -2.0), (2.0, 2.0)], 40, rng)
        signs = np.where(y == 1, 1.0, -1.0)
        model = svm_train(x, signs, lam=1e-2, epochs=60, rng=np.random.default_rng(0))
        assert np.all(svm_predict(model, x) == signs)

    def test_duplicating_samples_keeps_decision_boundary(self):
        rng = np.random.default_rng(13)
        x, y = blobs([(-2.0, 0.0), (2.0, 0.0)], 50, rng)
        signs = np.where(y == 1, 1.0, -1.0)
        held_x, held_y = blobs([(-2.0, 0.0), (2.0, 0.0)], 30, np.random.default_rng(14))
        held_signs = np.where(held_y == 1, 1.0, -1.0)
        m1 = svm_train(x, signs, lam=1e-2, epochs=80, rng=np.random.default_rng(1))
        m2 = svm_train(
            np.tile(x, (2, 1)), np.tile(signs, 2), lam=1e-2, epochs=80, rng=np.random.default_rng(1)
        )
        confident = np.abs(m1.decision(held_x)) > 1e-3
        assert np.all(svm_predict(m1, held_x)[confident] == svm_predict(m2, held_x)[confident])
        assert np.mean(svm_predict(m1, held_x) == held_signs) == 1.0

    def test_single_class_rejected(self):
        with pytest.raises(InvalidInputError):
            svm_train(np.zeros((4, 2)), np.ones(4))


class TestEcoc:
    def test_three_classes_use_three_learners(self):
        rng = np.random.default_rng(15)
        x, y = blobs([(-3, 0), (3, 0), (0, 3)], 20, rng)
        model = ecoc_ovo(x, y, lam=1e-2, epochs=40, rng=np.random.default_rng(2))
        assert len(model.learners) == 3
        assert model.codebook.shape == (3, 3)

    def test_three_blobs_reach_perfect_training_accuracy(self):
        rng = np.random.default_rng(16)
        x, y = blobs([(-3, 0), (3, 0), (0, 3)], 30, rng)
        model = ecoc_ovo(x, y, lam=1e-2, epochs=60, rng=np.random.default_rng(3))
        assert np.mean(ecoc_predict(model, x) == y) == 1.0

    def test_label_permutation_permutes_predictions(self):
        rng = np.random.default_rng(17)
        x, y = blobs([(-3, -1), (3, 0), (0, 3)], 30, rng)
        perm = np.array([2, 0, 1])
        m_orig = ecoc_ovo(x, y, lam=1e-2, epochs=60, rng=np.random.default_rng(4))
        m_perm = ecoc_ovo(x, perm[y], lam=1e-2, epochs=60, rng=np.random.default_rng(4))
        np.testing.assert_array_equal(ecoc_predict(m_perm, x), perm[ecoc_predict(m_orig, x)])

    def test_missing_class_rejected(self):
        x = np.zeros((6, 2))
        with pytest.raises(InvalidInputError):
            ecoc_ovo(x, np.array([0, 0, 1, 1, 3, 3]))

    def test_two_classes_rejected(self):
        rng = np.random.default_rng(18)
        x, y = blobs([(-1, 0), (1, 0)], 5, rng)
        with pytest.raises(InvalidInputError):
            ecoc_ovo(x, y)
