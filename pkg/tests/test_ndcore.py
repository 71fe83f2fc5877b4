"""
Tests for the numeric core: tensors, layers, LSTM, attention, optimizers
and the finite-difference oracle.
"""

import pytest
import sys
import os

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from ams.exceptions import DimensionError, NumericError
from ams.models.tensor import Parameter, as_tensor
from ams.services.attention import AttentionUnit, attention_backward, attention_forward
from ams.services.gradcheck_suite import run_checks
from ams.services.gradcheck import (
    finite_difference_grad, finite_difference_vector, max_relative_error, relative_error,
)
from ams.services.layers import (
    LinearLayer, activation, activation_backward, affine, linear_backward, linear_forward,
    softmax,
)
from ams.services.lstm import LstmCell, lstm_backward, lstm_forward
from ams.services.optimizers import AdamState, Optimizer, adam_step, sgd_step


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


class TestTensor:
    """Tests for tensor construction and parameters."""

    def test_as_tensor_reshapes(self):
        t = as_tensor([1, 2, 3, 4], shape=(2, 2))
        assert t.shape == (2, 2)
        assert t.dtype == np.float64

    def test_as_tensor_length_mismatch(self):
        with pytest.raises(DimensionError):
            as_tensor([1, 2, 3], shape=(2, 2))

    def test_as_tensor_rejects_nan_when_checked(self):
        with pytest.raises(NumericError):
            as_tensor([1.0, float('nan')])
        assert np.isnan(as_tensor([float('nan')], checked=False)[0])

    def test_parameter_accumulates_and_resets(self):
        p = Parameter("p", np.zeros(3))
        p.accumulate(np.ones(3))
        p.accumulate(np.ones(3))
        assert np.array_equal(p.grad, [2.0, 2.0, 2.0])
        p.zero_grad()
        assert not p.grad.any()

    def test_parameter_shape_mismatch(self):
        p = Parameter("p", np.zeros(3))
        with pytest.raises(DimensionError):
            p.accumulate(np.ones(2))


class TestLinear:
    """Tests for the affine map and dense layer."""

    def test_identity_weights(self):
        y = affine(np.eye(2), np.zeros(2), np.array([3.0, 4.0]))
        assert np.array_equal(y, [3.0, 4.0])

    def test_zero_weights_give_bias(self):
        y = affine(np.zeros((2, 5)), np.array([1.0, 1.0]), np.arange(5.0))
        assert np.array_equal(y, [1.0, 1.0])

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            affine(np.eye(2), np.zeros(2), np.ones(3))

    def test_backward_matches_finite_differences(self, rng):
        layer = LinearLayer(2, 3, rng)
        layer.bias.value[...] = rng.normal(size=3)
        x = rng.normal(size=2)
        r = rng.normal(size=3)
        linear_backward(layer, r, linear_forward(layer, x)[1])
        analytic = [p.grad.copy() for p in layer.parameters()]
        numeric = finite_difference_grad(
            lambda: float(r @ linear_forward(layer, x)[0]), layer.parameters())
        assert max_relative_error(analytic, numeric) < 1e-5


class TestActivations:
    """Tests for activations and softmax."""

    def test_tanh_at_zero(self):
        x = np.zeros(1)
        y = activation(x, 'tanh')
        assert y[0] == 0.0
        assert activation_backward(np.ones(1), x, y, 'tanh')[0] == 1.0

    def test_sigmoid_at_zero(self):
        x = np.zeros(1)
        y = activation(x, 'sigmoid')
        assert y[0] == 0.5
        assert activation_backward(np.ones(1), x, y, 'sigmoid')[0] == 0.25

    def test_sigmoid_is_stable_for_large_inputs(self):
        y = activation(np.array([-1000.0, 1000.0]), 'sigmoid')
        assert np.all(np.isfinite(y))
        assert y[0] == pytest.approx(0.0) and y[1] == pytest.approx(1.0)

    @pytest.mark.parametrize("kind", ['tanh', 'sigmoid'])
    def test_backward_matches_finite_differences(self, rng, kind):
        x = rng.normal(size=5)
        y = activation(x, kind)
        analytic = activation_backward(np.ones(5), x, y, kind)
        numeric = finite_difference_vector(lambda v: float(np.sum(activation(v, kind))), x)
        assert max_relative_error([analytic], [numeric]) < 1e-6

    def test_softmax_uniform(self):
        assert np.allclose(softmax(np.zeros(3)), [1 / 3] * 3)

    def test_softmax_shift_invariance(self):
        base = np.array([0.0, 0.5, 1.0])
        assert np.allclose(softmax(base), softmax(base + 123.0))

    def test_softmax_direct_arithmetic(self):
        e = np.exp([1.0, 2.0, 3.0])
        assert np.allclose(softmax(np.array([1.0, 2.0, 3.0])), e / e.sum())

    def test_softmax_empty(self):
        with pytest.raises(DimensionError):
            softmax(np.array([]))


class TestLstm:
    """Tests for the LSTM cell."""

    def test_zero_weights_give_zero_hidden(self):
        cell = LstmCell(3, 4)
        h0, c0 = cell.zero_state()
        _, h, _, _ = lstm_forward(cell, np.ones(3), h0, c0)
        assert not h.any()

    def test_zero_candidate_keeps_scaled_cell(self):
        cell = LstmCell(3, 4)
        c_prev = np.array([1.0, -2.0, 0.5, 3.0])
        _, _, c, cache = lstm_forward(cell, np.zeros(3), np.zeros(4), c_prev)
        assert not cache.g.any()
        assert np.allclose(c, 0.5 * c_prev)

    def test_wrong_input_length(self):
        cell = LstmCell(3, 4)
        with pytest.raises(DimensionError):
            lstm_forward(cell, np.ones(2), np.zeros(4), np.zeros(4))

    def test_backward_matches_finite_differences(self, rng):
        cell = LstmCell(3, 4, rng)
        x, h0, c0 = rng.normal(size=3), rng.normal(size=4), rng.normal(size=4)
        rh = rng.normal(size=4)
        _, _, _, cache = lstm_forward(cell, x, h0, c0)
        lstm_backward(cell, rh, None, cache)
        analytic = [p.grad.copy() for p in cell.parameters()]
        numeric = finite_difference_grad(
            lambda: float(rh @ lstm_forward(cell, x, h0, c0)[1]), cell.parameters())
        assert max_relative_error(analytic, numeric) < 1e-4


class TestAttention:
    """Tests for the attention unit."""

    def test_identical_rows_get_equal_weights(self, rng):
        unit = AttentionUnit(2, 4, rng)
        _, weights, _ = attention_forward(unit, np.tile([0.3, -1.2], (5, 1)))
        assert np.allclose(weights, 0.2)

    def test_single_row(self, rng):
        unit = AttentionUnit(2, 4, rng)
        context, weights, _ = attention_forward(unit, np.array([[0.7, 0.1]]))
        assert weights[0] == 1.0
        assert np.array_equal(context, [0.7, 0.1])

    def test_empty_features(self, rng):
        with pytest.raises(DimensionError):
            attention_forward(AttentionUnit(2, 4, rng), np.zeros((0, 2)))

    def test_weights_form_a_simplex(self, rng):
        unit = AttentionUnit(2, 4, rng)
        _, weights, _ = attention_forward(unit, rng.normal(size=(6, 2)))
        assert abs(weights.sum() - 1.0) < 1e-12
        assert np.all(weights >= 0)

    def test_backward_matches_finite_differences(self, rng):
        unit = AttentionUnit(2, 4, rng)
        features = rng.normal(size=(3, 2))
        r = rng.normal(size=6)
        _, _, cache = attention_forward(unit, features)
        attention_backward(unit, r, cache)
        analytic = [p.grad.copy() for p in unit.parameters()]
        numeric = finite_difference_grad(
            lambda: float(r @ attention_forward(unit, features)[0]), unit.parameters())
        assert max_relative_error(analytic, numeric) < 1e-4


class TestOptimizers:
    """Tests for SGD and Adam."""

    def test_sgd_one_step(self):
        p = Parameter("p", np.array([1.0]))
        p.grad[...] = 2.0
        sgd_step([p], 0.5)
        assert p.value[0] == 0.0
        assert p.grad[0] == 0.0

    def test_zero_gradient_leaves_value(self):
        p = Parameter("p", np.array([1.5, -2.0]))
        Optimizer('adam').step([p], 0.1)
        assert np.array_equal(p.value, [1.5, -2.0])

    def test_adam_first_step_by_hand(self):
        p = Parameter("p", np.array([1.0]))
        p.grad[...] = 2.0
        state = AdamState()
        adam_step(state, [p], 0.1)
        # bias-corrected moments are g and g**2 after one step
        assert p.value[0] == pytest.approx(1.0 - 0.1 * 2.0 / (2.0 + 1e-8), abs=1e-12)

    def test_adam_maximize_ascends(self):
        p = Parameter("p", np.array([0.0]))
        p.grad[...] = 1.0
        Optimizer('adam', maximize=True).step([p], 0.1)
        assert p.value[0] > 0.0

    def test_non_finite_gradient_raises(self):
        p = Parameter("p", np.array([1.0]))
        p.grad[...] = np.inf
        with pytest.raises(NumericError):
            sgd_step([p], 0.1)

    def test_identical_steps_are_bit_identical(self):
        values = []
        for _ in range(2):
            p = Parameter("p", np.array([0.3, -0.7]))
            opt = Optimizer('adam')
            for g in ([0.1, 0.2], [-0.3, 0.05]):
                p.grad[...] = g
                opt.step([p], 0.01)
            values.append(p.value.tobytes())
        assert values[0] == values[1]


class TestGradcheck:
    """Tests for the finite-difference oracle."""

    def test_square(self):
        p = Parameter("p", np.array([3.0]))
        est = finite_difference_grad(lambda: float(p.value[0] ** 2), [p])
        assert est[0][0] == pytest.approx(6.0, abs=1e-8)
        assert p.value[0] == 3.0

    def test_constant(self):
        p = Parameter("p", np.array([1.0, 2.0]))
        est = finite_difference_grad(lambda: 4.0, [p])
        assert not est[0].any()

    def test_relative_error_floor(self):
        assert relative_error(np.array([0.0]), np.array([1e-9]))[0] == pytest.approx(1e-3)

    @pytest.mark.slow
    def test_full_report_over_many_draws(self):
        results = run_checks(seed=0, trials=100)
        assert [r.component for r in results if not r.passed] == []
