"""Real layer blocks: values, parameter counts, and finite-difference gradients."""

import numpy as np
import pytest

from cxnet import realnet
from cxnet.errors import InvalidInputError, TrainingError
from cxnet.realnet import (
    AdamState,
    Conv1d,
    Dense,
    Flatten,
    MaxPool1d,
    ReLU,
    adam_step,
    init_xavier,
    pool_output_length,
    softmax_cross_entropy,
)


def numeric_grad(loss_of, arr, h=1e-5):
    grad = np.zeros_like(arr)
    flat, gflat = arr.ravel(), grad.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        up = loss_of()
        flat[i] = orig - h
        down = loss_of()
        flat[i] = orig
        gflat[i] = (up - down) / (2 * h)
    return grad


class TestConv1d:
    def test_identity_kernel_passes_interior(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((1, 1, 20))
        conv = Conv1d(np.array([[[0.0, 1.0, 0.0]]]), np.zeros(1), padding=0)
        out = conv.forward(x)
        np.testing.assert_allclose(out[0, 0], x[0, 0, 1:-1])

    def test_parameter_count_matches_8_to_16_width_5(self):
        conv = Conv1d.build(8, 16, 5, np.random.default_rng(1))
        assert conv.param_count() == 8 * 16 * 5 + 16 == 656

    def test_backward_matches_finite_differences(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((2, 3, 11))
        conv = Conv1d.build(3, 4, 3, rng)
        weights = rng.standard_normal((2, 4, 11))

        def loss():
            return float((weights * conv.forward(x)).sum())

        loss()
        conv.backward(weights)
        fd_w = numeric_grad(loss, conv.weights)
        fd_b = numeric_grad(loss, conv.bias)
        fd_x = numeric_grad(loss, x)
        np.testing.assert_allclose(conv.grad_weights, fd_w, rtol=1e-6, atol=1e-9)
        np.testing.assert_allclose(conv.grad_bias, fd_b, rtol=1e-6, atol=1e-9)
        dx = conv.backward(weights)
        np.testing.assert_allclose(dx, fd_x, rtol=1e-6, atol=1e-9)

    def test_channel_mismatch_rejected(self):
        conv = Conv1d.build(2, 3, 3, np.random.default_rng(3))
        with pytest.raises(InvalidInputError):
            conv.forward(np.zeros((1, 5, 10)))


class TestReLUAndPool:
    def test_relu_values(self):
        out = ReLU().forward(np.array([[-1.0, 2.0]]))
        np.testing.assert_array_equal(out, [[0.0, 2.0]])

    def test_maxpool_values_and_table_length(self):
        pool = MaxPool1d(3, 3)
        out = pool.forward(np.array([[[1.0, 3.0, 2.0]]]))
        np.testing.assert_array_equal(out, [[[3.0]]])
        assert pool_output_length(128, 3, 3) == 42

    def test_pool_backward_routes_to_argmax_only(self):
        pool = MaxPool1d(3, 3)
        pool.forward(np.array([[[1.0, 3.0, 2.0, 0.0, -1.0, 5.0]]]))
        dx = pool.backward(np.array([[[1.0, 1.0]]]))
        np.testing.assert_array_equal(dx, [[[0.0, 1.0, 0.0, 0.0, 0.0, 1.0]]])

    def test_pool_tie_breaks_to_first_index(self):
        pool = MaxPool1d(2, 2)
        pool.forward(np.array([[[7.0, 7.0]]]))
        dx = pool.backward(np.array([[[1.0]]]))
        np.testing.assert_array_equal(dx, [[[1.0, 0.0]]])

    def test_overlapping_pool_backward_matches_finite_differences(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((2, 2, 12))
        pool = MaxPool1d(3, 2)
        weights = rng.standard_normal((2, 2, pool_output_length(12, 3, 2)))

        def loss():
            return float((weights * pool.forward(x)).sum())

        loss()
        dx = pool.backward(weights)
        np.testing.assert_allclose(dx, numeric_grad(loss, x), rtol=1e-5, atol=1e-9)


class TestDense:
    def test_identity_map(self):
        dense = Dense(np.eye(4), np.zeros(4))
        x = np.arange(8.0).reshape(2, 4)
        np.testing.assert_array_equal(dense.forward(x), x)

    def test_parameter_count_256_to_32(self):
        dense = Dense.build(256, 32, np.random.default_rng(5))
        assert dense.param_count() == 256 * 32 + 32 == 8224

    def test_backward_matches_finite_differences(self):
        rng = np.random.default_rng(6)
        x = rng.standard_normal((3, 5))
        dense = Dense.build(5, 4, rng)
        weights = rng.standard_normal((3, 4))

        def loss():
            return float((weights * dense.forward(x)).sum())

        loss()
        dx = dense.backward(weights)
        np.testing.assert_allclose(dense.grad_weights, numeric_grad(loss, dense.weights), rtol=1e-6, atol=1e-9)
        np.testing.assert_allclose(dense.grad_bias, numeric_grad(loss, dense.bias), rtol=1e-6, atol=1e-9)
        np.testing.assert_allclose(dx, numeric_grad(loss, x), rtol=1e-6, atol=1e-9)

    def test_shape_mismatch_rejected(self):
        dense = Dense.build(5, 4, np.random.default_rng(7))
        with pytest.raises(InvalidInputError):
            dense.forward(np.zeros((2, 9)))


class TestSoftmaxCrossEntropy:
    def test_uniform_logits(self):
        loss, grad = softmax_cross_entropy(np.zeros(3), 0)
        assert loss == pytest.approx(np.log(3))
        np.testing.assert_allclose(grad, [1 / 3 - 1, 1 / 3, 1 / 3], atol=1e-12)

    def test_extreme_logits_stable(self):
        loss, grad = softmax_cross_entropy(np.array([1000.0, 0.0]), 0)
        assert loss == pytest.approx(0.0, abs=1e-12)
        assert np.all(np.isfinite(grad))

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(8)
        logits = rng.standard_normal(5)
        _, grad = softmax_cross_entropy(logits, 2)
        fd = numeric_grad(lambda: softmax_cross_entropy(logits, 2)[0], logits)
        np.testing.assert_allclose(grad, fd, rtol=1e-6, atol=1e-9)

    def test_probabilities_sum_to_one_and_loss_nonnegative(self):
        rng = np.random.default_rng(9)
        logits = rng.standard_normal((6, 4)) * 10
        loss, grad = softmax_cross_entropy(logits, np.zeros(6, dtype=int))
        p = grad * 6
        p[:, 0] += 1.0
        np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)
        assert loss >= 0

    def test_label_out_of_range_rejected(self):
        with pytest.raises(InvalidInputError):
            softmax_cross_entropy(np.zeros(3), 3)


class TestAdam:
    def test_zero_gradient_keeps_params(self):
        params = np.array([1.0, -2.0])
        state = AdamState.for_params(params)
        new = adam_step(params, np.zeros(2), state)
        np.testing.assert_array_equal(new, params)
        assert state.t == 1

    def test_quadratic_converges(self):
        # Adam travels ~lr per step, so lr=1e-2 gives the 2000-step budget
        # enough range to cover the farthest start and settle
        for w0 in (-1.0, 0.5, 4.0):
            w = np.array([w0])
            state = AdamState.for_params(w)
            for _ in range(2000):
                w = adam_step(w, 2 * (w - 3.0), state, lr=1e-2)
            assert abs(w[0] - 3.0) < 1e-4

    def test_constant_gradient_step_magnitude_approaches_lr(self):
        g = np.array([0.37])
        w = np.array([0.0])
        state = AdamState.for_params(w)
        for _ in range(400):
            w_prev, w = w, adam_step(w, g, state, lr=1e-3)
        assert abs(w[0] - w_prev[0]) == pytest.approx(1e-3, rel=1e-3)

    def test_nonfinite_gradient_rejected(self):
        w = np.zeros(1)
        with pytest.raises(TrainingError):
            adam_step(w, np.array([np.inf]), AdamState.for_params(w))


class TestXavier:
    def test_seeded_determinism(self):
        a = init_xavier((3, 4), 3, 4, np.random.default_rng(10))
        b = init_xavier((3, 4), 3, 4, np.random.default_rng(10))
        np.testing.assert_array_equal(a, b)

    def test_bounds_and_variance(self):
        draws = init_xavier((100_000,), 3, 3, np.random.default_rng(11))
        assert draws.min() >= -1.0 and draws.max() <= 1.0
        assert np.var(draws) == pytest.approx(1 / 3, rel=0.05)

    def test_zero_sized_request_rejected(self):
        with pytest.raises(InvalidInputError):
            init_xavier((0, 4), 3, 3, np.random.default_rng(12))


class TestCompositeGradient:
    def test_conv_relu_pool_dense_chain_matches_finite_differences(self):
        rng = np.random.default_rng(13)
        x = rng.standard_normal((2, 2, 12))
        conv = Conv1d.build(2, 3, 3, rng)
        relu = ReLU()
        pool = MaxPool1d(3, 3)
        flat = Flatten()
        dense = Dense.build(3 * pool_output_length(12, 3, 3), 2, rng)
        labels = np.array([0, 1])

        def forward():
            return dense.forward(flat.forward(pool.forward(relu.forward(conv.forward(x)))))

        loss, dlogits = softmax_cross_entropy(forward(), labels)
        dx = conv.backward(relu.backward(pool.backward(flat.backward(dense.backward(dlogits)))))

        def loss_only():
            return softmax_cross_entropy(forward(), labels)[0]

        for arr, grad in [
            (conv.weights, conv.grad_weights),
            (conv.bias, conv.grad_bias),
            (dense.weights, dense.grad_weights),
            (dense.bias, dense.grad_bias),
            (x, dx),
        ]:
            np.testing.assert_allclose(grad, numeric_grad(loss_only, arr), rtol=1e-5, atol=1e-8)
