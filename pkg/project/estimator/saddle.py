"""
Saddle-point parameters (tau, f, u) and the training configuration.

tau and f are functions of a flattened state-action pair index. Both parameterisations
below expose the same interface: ``evaluate(indices)`` returns one value per index and
``gradient(indices, upstream)`` returns the gradient of sum_i upstream_i * value_i as a
list of arrays aligned with ``arrays()``.
"""
from dataclasses import dataclass, field, replace

import numpy as np
from django.conf import settings

from divergences.divergence_engine import FDivergence, get_divergence
from markov.exceptions import InvalidParameterError
from mlp.mlp_engine import POSITIVE_HEADS, head_functions, inverse_head, mlp_forward, mlp_grad, mlp_init

OPTIMIZERS = ('sgd', 'adaptive')
NORMALIZATIONS = ('penalty', 'self', 'none')
PARAMETERIZATIONS = ('tabular', 'network')
SELF_NORMALIZERS = ('batch', 'data')


@dataclass(frozen=True)
class GenDiceConfig:
    lam: float
    gamma: float
    divergence: FDivergence
    lr_tau: float
    lr_f: float
    lr_u: float
    batch_size: int
    steps: int
    positive_head: str = 'square'
    seed: int = 0
    optimizer: str = 'sgd'
    adaptive_decay: float = 0.9
    adaptive_epsilon: float = 1e-8
    full_batch: bool = False
    normalization: str = 'penalty'
    self_normalizer: str = 'batch'
    parameterization: str = 'tabular'
    hidden_sizes: tuple = (64, 64)
    divergence_bound: float = 1e8
    tail_average: float = 0.0

    def __post_init__(self):
        if isinstance(self.divergence, str):
            object.__setattr__(self, 'divergence', get_divergence(self.divergence))
        object.__setattr__(self, 'hidden_sizes', tuple(int(size) for size in self.hidden_sizes))
        if self.lam < 0 or (self.normalization == 'penalty' and self.lam <= 0):
            raise InvalidParameterError('lambda must be positive with the penalty, got {}.'.format(self.lam))
        if not 0.0 < self.gamma <= 1.0:
            raise InvalidParameterError('gamma must lie in (0, 1], got {}.'.format(self.gamma))
        if min(self.lr_tau, self.lr_f, self.lr_u) <= 0:
            raise InvalidParameterError('Learning rates must be positive.')
        if self.batch_size < 1 or self.steps < 0:
            raise InvalidParameterError('batch_size must be >= 1 and steps >= 0.')
        if not 0.0 <= self.tail_average < 1.0:
            raise InvalidParameterError('tail_average must lie in [0, 1), got {}.'.format(self.tail_average))
        if self.positive_head not in POSITIVE_HEADS:
            raise InvalidParameterError('positive_head must be one of {}, got {!r}.'.format(
                POSITIVE_HEADS, self.positive_head
            ))
        for name, value, choices in (('optimizer', self.optimizer, OPTIMIZERS),
                                     ('normalization', self.normalization, NORMALIZATIONS),
                                     ('self_normalizer', self.self_normalizer, SELF_NORMALIZERS),
                                     ('parameterization', self.parameterization, PARAMETERIZATIONS)):
            if value not in choices:
                raise InvalidParameterError('{} must be one of {}, got {!r}.'.format(name, choices, value))

    @classmethod
    def from_settings(cls, **overrides):
        """ Builds a config from settings.GENDICE_DEFAULTS with keyword overrides. """
        values = dict(settings.GENDICE_DEFAULTS)
        values.update(overrides)
        return cls(**values)

    @property
    def penalty(self):
        """ The lambda actually applied to the normalisation term. """
        return self.lam if self.normalization == 'penalty' else 0.0

    def with_changes(self, **changes):
        return replace(self, **changes)


class TabularFunction:
    """ One free pre-activation per pair, passed through an output head. """

    def __init__(self, logits, head='identity'):
        self.logits = np.array(logits, dtype=float)
        self.head = head
        self.head_fn, self.head_deriv = head_functions(head)

    @classmethod
    def constant(cls, n_pairs, value, head='identity'):
        return cls(np.full(n_pairs, inverse_head(head, float(value))), head)

    def evaluate(self, indices):
        return self.head_fn(self.logits[indices])

    def gradient(self, indices, upstream):
        grad = np.zeros_like(self.logits)
        np.add.at(grad, indices, upstream * self.head_deriv(self.logits[indices]))
        return [grad]

    def arrays(self):
        return [self.logits]

    def copy(self):
        return TabularFunction(self.logits, self.head)


class NetworkFunction:
    """ An MLP over one-hot state and one-hot action features. """

    def __init__(self, params, n_states, n_actions):
        self.params = params
        self.n_states = n_states
        self.n_actions = n_actions

    def features(self, indices):
        indices = np.asarray(indices, dtype=np.int64)
        features = np.zeros((indices.shape[0], self.n_states + self.n_actions))
        rows = np.arange(indices.shape[0])
        features[rows, indices // self.n_actions] = 1.0
        features[rows, self.n_states + indices % self.n_actions] = 1.0
        return features

    def evaluate(self, indices):
        return mlp_forward(self.params, self.features(indices))

    def gradient(self, indices, upstream):
        return mlp_grad(self.params, self.features(indices), upstream).arrays()

    def arrays(self):
        return self.params.arrays()

    def copy(self):
        return NetworkFunction(self.params.copy(), self.n_states, self.n_actions)


@dataclass
class SaddleParams:
    tau: object
    f: object
    u: float = 0.0
    meta: dict = field(default_factory=dict)

    def copy(self):
        return SaddleParams(self.tau.copy(), self.f.copy(), float(self.u), dict(self.meta))

    def tau_table(self, n_pairs):
        return np.asarray(self.tau.evaluate(np.arange(n_pairs)), dtype=float)

    def f_table(self, n_pairs):
        return np.asarray(self.f.evaluate(np.arange(n_pairs)), dtype=float)


def initial_saddle(cfg, n_states, n_actions):
    """ tau = 1, f = 0, u = 0 for tables; seeded fan-based initialisation for networks. """
    n_pairs = n_states * n_actions
    dual_head = cfg.divergence.dual_head
    if cfg.parameterization == 'tabular':
        tau = TabularFunction.constant(n_pairs, 1.0, cfg.positive_head)
        f = TabularFunction.constant(n_pairs, 0.0, dual_head)
    else:
        sizes = (n_states + n_actions,) + cfg.hidden_sizes + (1,)
        tau = NetworkFunction(mlp_init(sizes, cfg.positive_head, seed=cfg.seed), n_states, n_actions)
        f = NetworkFunction(mlp_init(sizes, dual_head, seed=cfg.seed + 1), n_states, n_actions)
    return SaddleParams(tau, f, 0.0)
