"""Tests for feed-forward layers, activations and their gradients."""

import numpy as np
import pytest

from teflow.errors import ConfigError
from teflow.net.layers import (
    Conv1D,
    Dense,
    Dropout,
    Flatten,
    MaxPool1D,
    glorot_uniform,
    relu,
    sigmoid,
)

import oracles


def build(layer, in_shape, seed=1):
    out_shape = layer.build(in_shape)
    params = layer.init_params(np.random.default_rng(seed))
    return params, out_shape


def gradcheck(layer, params, x, seed=0, training=False, rng_factory=None):
    """Max relative error between backprop and central differences,
    jointly over the layer's parameters and its input."""
    rng = np.random.default_rng(seed)
    make_rng = rng_factory if rng_factory is not None else lambda: None
    out, cache = layer.forward(params, x, training=training,
                               rng=make_rng())
    w = rng.standard_normal(out.shape)
    grads, dx = layer.backward(params, cache, w)

    def loss():
        o, _ = layer.forward(params, x, training=training, rng=make_rng())
        return float(np.sum(o * w))

    numeric = oracles.finite_difference_grads(loss, [params, {"x": x}])
    return oracles.max_relative_error([grads, {"x": dx}], numeric)


# ---------------------------------------------------------------------------
# activations and initializers
# ---------------------------------------------------------------------------

class TestActivations:
    def test_sigmoid_hand_values(self):
        assert sigmoid(0.0) == 0.5
        assert sigmoid(np.array([0.0, 0.0]))[1] == 0.5

    def test_sigmoid_saturates_without_overflow(self):
        with np.errstate(over="raise"):
            out = sigmoid(np.array([-1000.0, -50.0, 50.0, 1000.0]))
        assert out[0] == 0.0 and out[3] == 1.0
        assert 0.0 < out[1] < 1e-20
        assert 1.0 - out[2] < 1e-20

    def test_sigmoid_matches_textbook_form(self):
        x = np.linspace(-30, 30, 201)
        np.testing.assert_allclose(sigmoid(x), 1.0 / (1.0 + np.exp(-x)),
                                   rtol=1e-15)

    def test_sigmoid_complement_symmetry(self):
        x = np.random.default_rng(0).standard_normal(100) * 5
        np.testing.assert_allclose(sigmoid(-x), 1.0 - sigmoid(x),
                                   atol=1e-15)

    def test_relu_hand_values(self):
        assert relu(-3.0) == 0.0
        assert relu(2.5) == 2.5
        np.testing.assert_array_equal(relu(np.array([-1.0, 0.0, 4.0])),
                                      [0.0, 0.0, 4.0])

    def test_glorot_bounds_and_determinism(self):
        limit = np.sqrt(6.0 / (20 + 30))
        draws = glorot_uniform(np.random.default_rng(3), (500,), 20, 30)
        assert np.max(np.abs(draws)) <= limit
        # Spread should roughly fill the interval, not collapse.
        assert np.max(draws) > 0.8 * limit and np.min(draws) < -0.8 * limit
        again = glorot_uniform(np.random.default_rng(3), (500,), 20, 30)
        np.testing.assert_array_equal(draws, again)


# ---------------------------------------------------------------------------
# dense
# ---------------------------------------------------------------------------

class TestDense:
    def test_forward_is_affine_plus_activation(self):
        layer = Dense(3, "linear")
        params, out_shape = build(layer, (4,))
        assert out_shape == (3,)
        x = np.random.default_rng(0).standard_normal((5, 4))
        out, _ = layer.forward(params, x)
        np.testing.assert_allclose(out, x @ params["W"].T + params["b"],
                                   rtol=1e-15)

    def test_bias_starts_at_zero(self):
        layer = Dense(3, "relu")
        params, _ = build(layer, (4,))
        np.testing.assert_array_equal(params["b"], np.zeros(3))

    @pytest.mark.parametrize("activation", ["linear", "relu", "sigmoid"])
    def test_gradcheck(self, activation):
        layer = Dense(3, activation)
        params, _ = build(layer, (4,), seed=2)
        x = np.random.default_rng(3).standard_normal((6, 4))
        assert gradcheck(layer, params, x) < 1e-4

    def test_validation(self):
        with pytest.raises(ConfigError):
            Dense(0, "linear")
        with pytest.raises(ConfigError):
            Dense(3, "tanh")
        with pytest.raises(ConfigError):
            Dense(3, "linear").build((7, 2))


# ---------------------------------------------------------------------------
# conv1d
# ---------------------------------------------------------------------------

class TestConv1D:
    def test_output_shape_and_hand_convolution(self):
        layer = Conv1D(1, 2)
        layer.build((4, 1))
        params = {"kernel": np.array([[[1.0], [-1.0]]]),
                  "b": np.array([0.0])}
        x = np.array([[[1.0], [3.0], [2.0], [5.0]]])
        out, _ = layer.forward(params, x)
        # Window [t, t+1] with kernel (1, -1) then ReLU.
        np.testing.assert_array_equal(out[0, :, 0],
                                      relu(np.array([-2.0, 1.0, -3.0])))

    def test_build_shapes(self):
        layer = Conv1D(5, 3)
        assert layer.build((10, 2)) == (8, 5)
        params = layer.init_params(np.random.default_rng(0))
        assert params["kernel"].shape == (5, 3, 2)
        assert params["b"].shape == (5,)

    def test_gradcheck(self):
        layer = Conv1D(3, 3)
        params, _ = build(layer, (7, 2), seed=4)
        x = np.random.default_rng(5).standard_normal((4, 7, 2))
        assert gradcheck(layer, params, x) < 1e-4

    def test_validation(self):
        with pytest.raises(ConfigError):
            Conv1D(0, 3)
        with pytest.raises(ConfigError):
            Conv1D(3, 0)
        with pytest.raises(ConfigError):
            Conv1D(2, 5).build((4, 1))
        with pytest.raises(ConfigError):
            Conv1D(2, 2).build((4,))


# ---------------------------------------------------------------------------
# maxpool
# ---------------------------------------------------------------------------

class TestMaxPool1D:
    def test_hand_example(self):
        layer = MaxPool1D(2)
        assert layer.build((4, 1)) == (2, 1)
        x = np.array([[[1.0], [3.0], [2.0], [5.0]]])
        out, _ = layer.forward({}, x)
        np.testing.assert_array_equal(out[0, :, 0], [3.0, 5.0])

    def test_partial_tail_window_dropped(self):
        layer = MaxPool1D(2)
        assert layer.build((5, 1)) == (2, 1)
        x = np.array([[[1.0], [3.0], [2.0], [5.0], [9.0]]])
        out, _ = layer.forward({}, x)
        np.testing.assert_array_equal(out[0, :, 0], [3.0, 5.0])

    def test_channels_pool_independently(self):
        layer = MaxPool1D(3)
        layer.build((3, 2))
        x = np.array([[[1.0, 9.0], [5.0, 2.0], [3.0, 4.0]]])
        out, _ = layer.forward({}, x)
        np.testing.assert_array_equal(out[0, 0], [5.0, 9.0])

    def test_gradient_routes_to_the_winner_only(self):
        layer = MaxPool1D(2)
        layer.build((4, 1))
        x = np.array([[[1.0], [3.0], [2.0], [5.0]]])
        _, cache = layer.forward({}, x)
        _, dx = layer.backward({}, cache, np.array([[[10.0], [20.0]]]))
        np.testing.assert_array_equal(dx[0, :, 0], [0.0, 10.0, 0.0, 20.0])

    def test_gradcheck(self):
        layer = MaxPool1D(2)
        layer.build((6, 3))
        x = np.random.default_rng(6).standard_normal((4, 6, 3))
        assert gradcheck(layer, {}, x) < 1e-4

    def test_validation(self):
        with pytest.raises(ConfigError):
            MaxPool1D(0)
        with pytest.raises(ConfigError):
            MaxPool1D(4).build((3, 1))


# ---------------------------------------------------------------------------
# flatten
# ---------------------------------------------------------------------------

class TestFlatten:
    def test_row_major_order(self):
        layer = Flatten()
        assert layer.build((2, 3)) == (6,)
        x = np.arange(12.0).reshape(2, 2, 3)
        out, _ = layer.forward({}, x)
        np.testing.assert_array_equal(out, x.reshape(2, 6))

    def test_backward_restores_shape(self):
        layer = Flatten()
        layer.build((2, 3))
        x = np.random.default_rng(7).standard_normal((4, 2, 3))
        _, cache = layer.forward({}, x)
        g = np.random.default_rng(8).standard_normal((4, 6))
        _, dx = layer.backward({}, cache, g)
        np.testing.assert_array_equal(dx, g.reshape(4, 2, 3))

    def test_gradcheck(self):
        layer = Flatten()
        layer.build((3, 2))
        x = np.random.default_rng(9).standard_normal((5, 3, 2))
        assert gradcheck(layer, {}, x) < 1e-4


# ---------------------------------------------------------------------------
# dropout
# ---------------------------------------------------------------------------

class TestDropout:
    def test_evaluation_is_the_identity(self):
        layer = Dropout(0.5)
        layer.build((10,))
        x = np.random.default_rng(10).standard_normal((4, 10))
        out, cache = layer.forward({}, x)
        assert out is x and cache is None
        _, dx = layer.backward({}, cache, x)
        assert dx is x

    def test_training_zeroes_and_rescales(self):
        layer = Dropout(0.3)
        layer.build((100,))
        x = np.ones((100, 100))
        out, _ = layer.forward({}, x, training=True,
                               rng=np.random.default_rng(11))
        flat = out.ravel()
        dropped = np.mean(flat == 0.0)
        assert abs(dropped - 0.3) < 0.02
        survivors = flat[flat != 0.0]
        np.testing.assert_allclose(survivors, 1.0 / 0.7, rtol=1e-15)
        # Inverted scaling keeps the expected activation unchanged
        # (sampling noise over 1e4 draws is about 0.0066, so 0.02 = 3σ).
        assert abs(np.mean(flat) - 1.0) < 0.02

    def test_gradcheck_with_frozen_mask(self):
        layer = Dropout(0.4)
        layer.build((6,))
        x = np.random.default_rng(12).standard_normal((5, 6))
        err = gradcheck(layer, {}, x, training=True,
                        rng_factory=lambda: np.random.default_rng(13))
        assert err < 1e-4

    def test_training_needs_rng(self):
        layer = Dropout(0.5)
        layer.build((4,))
        with pytest.raises(ConfigError):
            layer.forward({}, np.ones((2, 4)), training=True)

    def test_rate_validation(self):
        for rate in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(ConfigError):
                Dropout(rate)
