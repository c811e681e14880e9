"""
A small feed-forward network with hand-coded reverse-mode gradients.

Layers are affine maps followed by tanh, the last affine map produces one scalar per
input row which goes through an output head. Inputs may be a single feature vector
or a matrix with one row per sample; gradients are summed over rows.
"""
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from markov.exceptions import InvalidParameterError, ShapeMismatchError

LOG_2 = np.log(2.0)


def softplus(z):
    return np.logaddexp(0.0, z)


# name -> (head, derivative of the head w.r.t. its input)
HEADS = {
    'identity': (lambda z: z, lambda z: np.ones_like(z)),
    'square': (lambda z: z * z, lambda z: 2.0 * z),
    'softplus': (softplus, expit),
    'exp': (np.exp, np.exp),
    # Bounded above by log 2, the output activation for Jensen-Shannon duals.
    'log2_minus_softplus': (lambda z: LOG_2 - softplus(-z), lambda z: expit(-z)),
}

POSITIVE_HEADS = ('square', 'softplus', 'exp')


def head_functions(name):
    try:
        return HEADS[name]
    except KeyError:
        raise InvalidParameterError('Unknown output head {!r}; choose one of {}.'.format(name, sorted(HEADS)))


def inverse_head(name, value):
    """ Pre-activation giving ``value`` through head ``name``. """
    if name == 'identity':
        return value
    if name == 'square':
        return np.sqrt(value)
    if name == 'softplus':
        return np.log(np.expm1(value))
    if name == 'exp':
        return np.log(value)
    if name == 'log2_minus_softplus':
        return -np.log(np.expm1(LOG_2 - value))
    raise InvalidParameterError('Unknown output head {!r}.'.format(name))


@dataclass(eq=False)
class MlpParams:
    layer_sizes: tuple
    weights: list
    biases: list
    output_head: str = 'identity'

    def __post_init__(self):
        self.layer_sizes = tuple(int(size) for size in self.layer_sizes)
        head_functions(self.output_head)
        if len(self.weights) != len(self.layer_sizes) - 1 or len(self.biases) != len(self.weights):
            raise ShapeMismatchError('Expected {} layers of weights and biases.'.format(len(self.layer_sizes) - 1))
        for index, (n_in, n_out) in enumerate(zip(self.layer_sizes[:-1], self.layer_sizes[1:])):
            if np.shape(self.weights[index]) != (n_in, n_out) or np.shape(self.biases[index]) != (n_out,):
                raise ShapeMismatchError('Layer {} must map {} inputs to {} outputs.'.format(index, n_in, n_out))

    @property
    def parameter_count(self):
        return sum((n_in + 1) * n_out for n_in, n_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:]))

    def arrays(self):
        """ Weights and biases interleaved, layer by layer. """
        return [array for pair in zip(self.weights, self.biases) for array in pair]

    def copy(self):
        return MlpParams(
            self.layer_sizes,
            [np.array(w, dtype=float) for w in self.weights],
            [np.array(b, dtype=float) for b in self.biases],
            self.output_head,
        )

    def zeros_like(self):
        return MlpParams(
            self.layer_sizes,
            [np.zeros_like(w, dtype=float) for w in self.weights],
            [np.zeros_like(b, dtype=float) for b in self.biases],
            self.output_head,
        )


def mlp_init(layer_sizes, output_head='identity', seed=0):
    """ Uniform fan-based initialisation, weights in +-sqrt(6 / (n_in + n_out)), zero biases. """
    layer_sizes = tuple(layer_sizes)
    if len(layer_sizes) < 2 or layer_sizes[-1] != 1 or min(layer_sizes) < 1:
        raise InvalidParameterError('layer_sizes must be (input, hidden..., 1), got {}.'.format(layer_sizes))
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for n_in, n_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        limit = np.sqrt(6.0 / (n_in + n_out))
        weights.append(rng.uniform(-limit, limit, size=(n_in, n_out)))
        biases.append(np.zeros(n_out))
    return MlpParams(layer_sizes, weights, biases, output_head)


def as_batch(params, x):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    batch = x[None, :] if single else x
    if batch.ndim != 2 or batch.shape[1] != params.layer_sizes[0]:
        raise ShapeMismatchError('Expected inputs with {} features, got shape {}.'.format(
            params.layer_sizes[0], x.shape
        ))
    return batch, single


def forward_pass(params, batch):
    """ Returns the layer inputs kept for the backward pass and the pre-head outputs. """
    activations = [batch]
    hidden = batch
    for weight, bias in zip(params.weights[:-1], params.biases[:-1]):
        hidden = np.tanh(hidden @ weight + bias)
        activations.append(hidden)
    logits = (hidden @ params.weights[-1] + params.biases[-1])[:, 0]
    return activations, logits


def mlp_forward(params, x):
    """ Evaluates the network on one feature vector (returns a float) or a matrix of rows. """
    batch, single = as_batch(params, x)
    _, logits = forward_pass(params, batch)
    head, _ = head_functions(params.output_head)
    outputs = head(logits)
    return float(outputs[0]) if single else outputs


def mlp_grad(params, x, upstream):
    """ Gradient of sum_i upstream_i * mlp_forward(params, x_i) w.r.t. every weight and bias.

    Args:
        params: The network parameters.
        x: One feature vector or a matrix with one row per sample.
        upstream: A scalar, or one coefficient per row.

    Returns: An MlpParams holding the gradients.
    """
    batch, _ = as_batch(params, x)
    upstream = np.broadcast_to(np.asarray(upstream, dtype=float), (batch.shape[0],))
    activations, logits = forward_pass(params, batch)
    _, head_deriv = head_functions(params.output_head)

    grads = params.zeros_like()
    delta = (upstream * head_deriv(logits))[:, None]
    for layer in reversed(range(len(params.weights))):
        grads.weights[layer] = activations[layer].T @ delta
        grads.biases[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ params.weights[layer].T) * (1.0 - activations[layer] ** 2)
    return grads


def one_hot_features(states, actions, n_states, n_actions):
    """ One-hot state concatenated with one-hot action, one row per pair. """
    states = np.asarray(states, dtype=np.int64)
    features = np.zeros((states.shape[0], n_states + n_actions))
    rows = np.arange(states.shape[0])
    features[rows, states] = 1.0
    features[rows, n_states + np.asarray(actions, dtype=np.int64)] = 1.0
    return features
