"""
Stochastic primal-dual training of the GenDICE saddle point.

Each step samples a batch, then descends tau and ascends f and u simultaneously. With a
positive ``tail_average`` the returned saddle is the running mean of the iterates over
that final share of the steps.
"""
import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from estimator.exceptions import NumericalDivergenceError
from estimator.objective_engine import objective_and_gradients, sample_batch
from estimator.saddle import initial_saddle
from markov.exceptions import ShapeMismatchError
from markov.structures import pair_index

logger = logging.getLogger(__name__)

DESCEND = -1.0
ASCEND = 1.0


class Optimizer:
    """ Plain SGD, or per-parameter squared-gradient scaling without momentum. """

    def __init__(self, method='sgd', decay=0.9, epsilon=1e-8):
        self.method = method
        self.decay = decay
        self.epsilon = epsilon
        self.squares = {}

    def step(self, key, array, grad, lr, direction):
        """ Moves ``array`` in place; returns it for scalar callers. """
        if self.method == 'adaptive':
            square = self.squares.get(key)
            if square is None:
                square = self.squares[key] = np.zeros_like(grad)
            square *= self.decay
            square += (1.0 - self.decay) * grad * grad
            grad = grad / (np.sqrt(square) + self.epsilon)
        array += direction * lr * grad
        return array


def uses_data_normalizer(cfg):
    return cfg.normalization == 'self' and cfg.self_normalizer == 'data' and not cfg.full_batch


def matched_steps(cfg, n_records):
    """ Steps a data-normalised self run can take for the tau evaluations of ``cfg.steps`` batches.

    Each such step evaluates tau on the batch and on every record.
    """
    if cfg.full_batch:
        return cfg.steps
    return max(1, cfg.steps * cfg.batch_size // (cfg.batch_size + n_records))


def averaging_start(cfg):
    """ First step whose iterate enters the tail average, or None without averaging. """
    if not cfg.tail_average or not cfg.steps:
        return None
    return min(int(round(cfg.steps * (1.0 - cfg.tail_average))), cfg.steps - 1)


def accumulate(average, saddle, count):
    """ Folds ``saddle`` into the running mean ``average`` of ``count`` iterates. """
    for function, target in ((average.tau, saddle.tau), (average.f, saddle.f)):
        for mean, array in zip(function.arrays(), target.arrays()):
            mean += (array - mean) / count
    average.u += (saddle.u - average.u) / count


@dataclass
class TrainingResult:
    saddle: object
    trace: pd.DataFrame
    optimizer: str

    def tau_table(self, n_pairs):
        return self.saddle.tau_table(n_pairs)


def train(cfg, dataset, target_policy, mu0_sampler=None, initial=None):
    """ Runs ``cfg.steps`` primal-dual iterations.

    Args:
        cfg: A GenDiceConfig.
        dataset: The off-line TransitionDataset.
        target_policy: The Policy whose stationary distribution is estimated; supplies a'
            at next states and a0 at initial states.
        mu0_sampler: Optional callable (size, rng) -> initial states; defaults to drawing
            the dataset's initial states with replacement.
        initial: Optional SaddleParams to start from; it is copied, never mutated.

    Returns: A TrainingResult with the final (or tail averaged) saddle and a (step, J) trace.

    Raises:
        NumericalDivergenceError: the sampled objective became non-finite or exceeded
            ``cfg.divergence_bound``.
    """
    if target_policy.probs.shape != (dataset.n_states, dataset.n_actions):
        raise ShapeMismatchError('Policy has shape {}, dataset expects {}.'.format(
            target_policy.probs.shape, (dataset.n_states, dataset.n_actions)
        ))
    rng = np.random.default_rng(cfg.seed)
    saddle = (initial or initial_saddle(cfg, dataset.n_states, dataset.n_actions)).copy()
    saddle.meta.update(optimizer=cfg.optimizer, normalization=cfg.normalization)
    optimizer = Optimizer(cfg.optimizer, cfg.adaptive_decay, cfg.adaptive_epsilon)
    size = len(dataset) if cfg.full_batch else cfg.batch_size
    start = averaging_start(cfg)
    average, count = None, 0
    normalizer_pairs = None
    if uses_data_normalizer(cfg):
        normalizer_pairs = pair_index(dataset.states, dataset.actions, dataset.n_actions)

    values = np.empty(cfg.steps)
    for step in range(cfg.steps):
        initial_states = None if mu0_sampler is None else mu0_sampler(size, rng)
        batch = sample_batch(
            dataset, target_policy, cfg.batch_size, rng, full=cfg.full_batch, initial_states=initial_states,
            normalizer_pairs=normalizer_pairs,
        )
        value, (grad_tau, grad_u, grad_f) = objective_and_gradients(saddle, batch, cfg)
        if not np.isfinite(value) or abs(value) > cfg.divergence_bound:
            logger.warning('Aborting training at step %d, objective %r.', step, value)
            raise NumericalDivergenceError(step, value)
        values[step] = value

        for index, (array, grad) in enumerate(zip(saddle.tau.arrays(), grad_tau)):
            optimizer.step(('tau', index), array, grad, cfg.lr_tau, DESCEND)
        for index, (array, grad) in enumerate(zip(saddle.f.arrays(), grad_f)):
            optimizer.step(('f', index), array, grad, cfg.lr_f, ASCEND)
        saddle.u = float(optimizer.step('u', np.array(saddle.u), np.array(grad_u), cfg.lr_u, ASCEND))
        if start is not None and step >= start:
            count += 1
            if average is None:
                average = saddle.copy()
            else:
                accumulate(average, saddle, count)

        if step % 1000 == 0:
            logger.debug('Step %d: J = %.6f, u = %.4f.', step, value, saddle.u)

    trace = pd.DataFrame({'step': np.arange(cfg.steps), 'J': values})
    if average is not None:
        logger.debug('Returning the mean of the last %d iterates.', count)
        saddle = average
    return TrainingResult(saddle, trace, cfg.optimizer)

