"""Tests for the AMSGrad optimizer."""

import numpy as np
import pytest

from teflow.errors import ConfigError
from teflow.net.optim import AmsGrad, AmsGradState, adam_amsgrad_step

import oracles


def scalar_params(value=0.0):
    return [{"w": np.array([value])}]


class TestSingleSteps:
    def test_first_step_magnitude(self):
        # After one step the bias corrections cancel the decay factors
        # exactly, so the move is lr * g / (|g| + eps).
        params = scalar_params(0.0)
        state = AmsGradState(params)
        adam_amsgrad_step(params, [{"w": np.array([1.0])}], state)
        expected = -0.001 / (1.0 + 1e-8)
        assert params[0]["w"][0] == pytest.approx(expected, abs=1e-12)

    def test_first_step_direction_only_depends_on_sign(self):
        for g in (0.5, 3.0, 1e-3):
            params = scalar_params(0.0)
            state = AmsGradState(params)
            adam_amsgrad_step(params, [{"w": np.array([g])}], state)
            assert params[0]["w"][0] == pytest.approx(
                -0.001 * g / (g + 1e-8), abs=1e-15)

    def test_zero_gradients_never_move_parameters(self):
        params = scalar_params(1.5)
        state = AmsGradState(params)
        for _ in range(25):
            adam_amsgrad_step(params, [{"w": np.array([0.0])}], state)
        assert params[0]["w"][0] == 1.5
        assert state.step_count == 25

    def test_matches_scalar_reference(self):
        rng = np.random.default_rng(0)
        grads = rng.standard_normal(200) * np.exp(rng.standard_normal(200))
        params = scalar_params(0.7)
        state = AmsGradState(params)
        trajectory = []
        for g in grads:
            adam_amsgrad_step(params, [{"w": np.array([g])}], state,
                              lr=0.01, beta1=0.9, beta2=0.999, eps=1e-8)
            trajectory.append(params[0]["w"][0])
        expected = oracles.amsgrad_scalar_steps(0.7, grads, lr=0.01,
                                                beta1=0.9, beta2=0.999,
                                                eps=1e-8)
        np.testing.assert_allclose(trajectory, expected, rtol=0,
                                   atol=1e-15)

    def test_nondefault_hyperparameters_propagate(self):
        # With beta1 = 0 the first moment is the raw gradient.
        params = scalar_params(0.0)
        state = AmsGradState(params)
        adam_amsgrad_step(params, [{"w": np.array([2.0])}], state,
                          lr=0.1, beta1=0.0, beta2=0.5, eps=0.0)
        # m_hat = 2, v_hat = 4, step = 0.1 * 2 / 2.
        assert params[0]["w"][0] == pytest.approx(-0.1, abs=1e-15)


class TestMaxSecondMoment:
    def test_vhat_is_monotone_over_random_steps(self):
        rng = np.random.default_rng(1)
        params = scalar_params(0.0)
        state = AmsGradState(params)
        previous = 0.0
        for _ in range(1000):
            g = rng.standard_normal() * 10.0 ** rng.integers(-3, 3)
            adam_amsgrad_step(params, [{"w": np.array([g])}], state)
            current = state.v_max[0]["w"][0]
            assert current >= previous
            previous = current

    def test_vmax_freezes_the_denominator_after_a_spike(self):
        # One huge gradient, then tiny ones: plain Adam's v decays back
        # but AMSGrad keeps dividing by the spike's corrected moment.
        params = scalar_params(0.0)
        state = AmsGradState(params)
        adam_amsgrad_step(params, [{"w": np.array([100.0])}], state)
        spike = state.v_max[0]["w"][0]
        for _ in range(50):
            adam_amsgrad_step(params, [{"w": np.array([1e-6])}], state)
        assert state.v_max[0]["w"][0] == spike


class TestStateAndWrapper:
    def test_state_mirrors_parameter_structure(self):
        params = [{"W": np.zeros((3, 2)), "b": np.zeros(3)},
                  {"kernel": np.zeros((2, 2, 2))}]
        state = AmsGradState(params)
        for tree in (state.m, state.v, state.v_max):
            assert [sorted(layer) for layer in tree] == [["W", "b"],
                                                         ["kernel"]]
            assert tree[0]["W"].shape == (3, 2)
            assert tree[1]["kernel"].shape == (2, 2, 2)
        assert state.step_count == 0

    def test_multi_layer_updates_are_independent(self):
        params = [{"a": np.array([0.0])}, {"b": np.array([0.0])}]
        state = AmsGradState(params)
        grads = [{"a": np.array([1.0])}, {"b": np.array([0.0])}]
        adam_amsgrad_step(params, grads, state)
        assert params[0]["a"][0] != 0.0
        assert params[1]["b"][0] == 0.0

    def test_wrapper_carries_hyperparameters(self):
        params = scalar_params(0.0)
        opt = AmsGrad(params, lr=0.01)
        opt.step(params, [{"w": np.array([1.0])}])
        assert params[0]["w"][0] == pytest.approx(-0.01 / (1.0 + 1e-8),
                                                  abs=1e-12)
        assert opt.state.step_count == 1

    def test_wrapper_validation(self):
        params = scalar_params(0.0)
        with pytest.raises(ConfigError):
            AmsGrad(params, lr=0.0)
        with pytest.raises(ConfigError):
            AmsGrad(params, beta1=1.0)
        with pytest.raises(ConfigError):
            AmsGrad(params, beta2=-0.1)

    def test_updates_are_in_place(self):
        params = scalar_params(0.0)
        tensor = params[0]["w"]
        opt = AmsGrad(params)
        opt.step(params, [{"w": np.array([1.0])}])
        assert params[0]["w"] is tensor
