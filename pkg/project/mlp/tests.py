import numpy as np
from django.test import SimpleTestCase

from markov.exceptions import InvalidParameterError, ShapeMismatchError
from mlp.mlp_engine import (
    HEADS, LOG_2, MlpParams, inverse_head, mlp_forward, mlp_grad, mlp_init, one_hot_features
)


def zero_params(layer_sizes, output_head):
    params = mlp_init(layer_sizes, output_head)
    return MlpParams(
        params.layer_sizes, [np.zeros_like(w) for w in params.weights], params.biases, output_head
    )


def straight_line_forward(params, x):
    hidden = np.asarray(x, dtype=float)
    for index in range(len(params.weights) - 1):
        hidden = np.tanh(hidden.dot(params.weights[index]) + params.biases[index])
    logit = hidden.dot(params.weights[-1])[0] + params.biases[-1][0]
    return float(HEADS[params.output_head][0](np.array([logit]))[0])


def finite_difference_errors(params, x, upstream, h=1e-5):
    """ Max relative error of mlp_grad against central differences over every parameter. """
    analytic = mlp_grad(params, x, upstream)
    worst = 0.0
    for array, grad in zip(params.arrays(), analytic.arrays()):
        for index in np.ndindex(array.shape):
            original = array[index]
            array[index] = original + h
            plus = np.sum(upstream * mlp_forward(params, x))
            array[index] = original - h
            minus = np.sum(upstream * mlp_forward(params, x))
            array[index] = original
            numeric = (plus - minus) / (2 * h)
            scale = max(abs(numeric), abs(grad[index]), 1e-3)
            worst = max(worst, abs(numeric - grad[index]) / scale)
    return worst


class MlpForwardTest(SimpleTestCase):
    def test_zero_params_square_head(self):
        self.assertEqual(mlp_forward(zero_params((3, 4, 1), 'square'), np.ones(3)), 0.0)

    def test_zero_params_softplus_head(self):
        self.assertAlmostEqual(mlp_forward(zero_params((3, 4, 1), 'softplus'), np.ones(3)), LOG_2, places=12)

    def test_matches_straight_line_recomputation(self):
        rng = np.random.default_rng(0)
        for head in ('identity', 'square', 'softplus', 'exp'):
            params = mlp_init((5, 7, 6, 1), head, seed=int(rng.integers(1000)))
            x = rng.normal(size=5)
            self.assertAlmostEqual(mlp_forward(params, x), straight_line_forward(params, x), delta=1e-12)

    def test_batch_rows_match_single_evaluations(self):
        params = mlp_init((4, 8, 1), 'softplus', seed=2)
        x = np.random.default_rng(2).normal(size=(6, 4))
        batched = mlp_forward(params, x)
        np.testing.assert_allclose(batched, [mlp_forward(params, row) for row in x], rtol=0, atol=1e-14)

    def test_positive_heads(self):
        rng = np.random.default_rng(3)
        x = rng.normal(scale=3.0, size=(1000, 4))
        for head in ('square', 'softplus', 'exp'):
            outputs = mlp_forward(mlp_init((4, 16, 1), head, seed=4), x)
            if head == 'square':
                self.assertTrue((outputs >= 0).all())
            else:
                self.assertTrue((outputs > 0).all())

    def test_bounded_head_stays_below_log_two(self):
        x = np.random.default_rng(5).normal(scale=5.0, size=(500, 3))
        outputs = mlp_forward(mlp_init((3, 8, 1), 'log2_minus_softplus', seed=6), x)
        self.assertTrue((outputs < LOG_2).all())

    def test_inverse_head(self):
        for head in ('identity', 'square', 'softplus', 'exp', 'log2_minus_softplus'):
            target = np.array([0.3])
            self.assertAlmostEqual(HEADS[head][0](inverse_head(head, target))[0], 0.3, places=12)

    def test_wrong_input_width(self):
        with self.assertRaises(ShapeMismatchError):
            mlp_forward(mlp_init((3, 4, 1)), np.ones(2))


class MlpGradTest(SimpleTestCase):
    def test_finite_differences_on_random_params(self):
        rng = np.random.default_rng(10)
        heads = ('identity', 'square', 'softplus', 'exp')
        for trial in range(50):
            params = mlp_init((4, 5, 3, 1), heads[trial % 4], seed=trial)
            x = rng.normal(size=4)
            self.assertLess(finite_difference_errors(params, x, float(rng.normal())), 1e-4)

    def test_finite_differences_on_a_batch(self):
        rng = np.random.default_rng(11)
        params = mlp_init((3, 6, 1), 'softplus', seed=11)
        x = rng.normal(size=(5, 3))
        self.assertLess(finite_difference_errors(params, x, rng.normal(size=5)), 1e-4)

    def test_zero_upstream(self):
        grads = mlp_grad(mlp_init((3, 4, 1), 'exp', seed=1), np.ones(3), 0.0)
        for array in grads.arrays():
            self.assertFalse(array.any())

    def test_linear_layer_identity_head(self):
        params = mlp_init((3, 1), 'identity', seed=7)
        x = np.array([0.5, -1.0, 2.0])
        grads = mlp_grad(params, x, 1.5)
        np.testing.assert_allclose(grads.weights[0][:, 0], 1.5 * x)
        np.testing.assert_allclose(grads.biases[0], [1.5])


class MlpInitTest(SimpleTestCase):
    def test_same_seed_same_params(self):
        first, second = mlp_init((6, 64, 64, 1), 'square', seed=9), mlp_init((6, 64, 64, 1), 'square', seed=9)
        for a, b in zip(first.arrays(), second.arrays()):
            np.testing.assert_array_equal(a, b)

    def test_biases_start_at_zero(self):
        for bias in mlp_init((6, 64, 64, 1), seed=1).biases:
            self.assertFalse(bias.any())

    def test_weights_within_fan_limit(self):
        params = mlp_init((6, 64, 64, 1), seed=2)
        for weight, (n_in, n_out) in zip(params.weights, zip(params.layer_sizes[:-1], params.layer_sizes[1:])):
            self.assertLessEqual(np.abs(weight).max(), np.sqrt(6.0 / (n_in + n_out)))

    def test_parameter_count(self):
        self.assertEqual(mlp_init((6, 64, 64, 1)).parameter_count, 7 * 64 + 65 * 64 + 65)

    def test_invalid_sizes(self):
        for sizes in ((3,), (3, 4, 2), (3, 0, 1)):
            with self.assertRaises(InvalidParameterError):
                mlp_init(sizes)


class OneHotFeaturesTest(SimpleTestCase):
    def test_state_and_action_blocks(self):
        features = one_hot_features([0, 2], [1, 0], 3, 2)
        np.testing.assert_array_equal(features, [[1, 0, 0, 0, 1], [0, 0, 1, 1, 0]])
