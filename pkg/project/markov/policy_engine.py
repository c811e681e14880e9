"""
Policy construction: tabular Q-learning, value iteration and policy mixtures.
"""
import logging

import numpy as np
from django.conf import settings

from markov.exceptions import InvalidParameterError, ShapeMismatchError
from markov.sampling_engine import TransitionSampler
from markov.structures import Policy

logger = logging.getLogger(__name__)


def greedy_policy(q_table, softening=0.0):
    """ Greedy policy w.r.t. ``q_table`` (ties split evenly), mixed with uniform by ``softening``. """
    q_table = np.asarray(q_table, dtype=float)
    best = q_table == q_table.max(axis=1, keepdims=True)
    greedy = best / best.sum(axis=1, keepdims=True)
    n_actions = q_table.shape[1]
    return Policy((1.0 - softening) * greedy + softening / n_actions)


def mix_policies(target, base, alpha):
    """ Row-wise convex combination (1 - alpha) * target + alpha * base.

    Examples:
    >>> mixed = mix_policies(Policy([[1.0, 0.0]]), Policy([[0.0, 1.0]]), 0.33)
    >>> mixed.probs
    array([[0.67, 0.33]])
    """
    if not 0.0 <= alpha <= 1.0:
        raise InvalidParameterError('alpha must lie in [0, 1], got {}.'.format(alpha))
    if target.probs.shape != base.probs.shape:
        raise ShapeMismatchError('Cannot mix policies of shapes {} and {}.'.format(
            target.probs.shape, base.probs.shape
        ))
    return Policy((1.0 - alpha) * target.probs + alpha * base.probs)


def learning_discount(mdp):
    if mdp.gamma < 1.0:
        return mdp.gamma
    return settings.MARKOV_DEFAULTS['q_learning_discount']


def q_learning(mdp, iterations, lr=None, epsilon=None, seed=0, episode_length=None,
               epsilon_decay=None, epsilon_floor=None, softening=None):
    """ Tabular Q-learning with decaying epsilon-greedy exploration.

    One iteration is one training episode of ``episode_length`` steps starting from mu0.
    MDPs with gamma = 1 are learned with the fallback discount from settings, since the
    undiscounted continuing objective is unbounded.

    Args:
        mdp: The TabularMDP to learn in.
        iterations: Number of training episodes.
        lr: Step size of the temporal-difference update.
        epsilon: Initial exploration rate, decayed per episode.
        seed: Seed of the generator owned by this call.

    Returns: The final Q-table and the softened greedy Policy w.r.t. it.
    """
    defaults = settings.MARKOV_DEFAULTS
    lr = defaults['q_learning_lr'] if lr is None else lr
    epsilon = defaults['q_learning_epsilon'] if epsilon is None else epsilon
    episode_length = defaults['q_learning_episode_length'] if episode_length is None else episode_length
    epsilon_decay = defaults['q_learning_epsilon_decay'] if epsilon_decay is None else epsilon_decay
    epsilon_floor = defaults['q_learning_epsilon_floor'] if epsilon_floor is None else epsilon_floor
    softening = defaults['q_learning_softening'] if softening is None else softening
    if iterations < 0:
        raise InvalidParameterError('iterations must be non-negative, got {}.'.format(iterations))

    rng = np.random.default_rng(seed)
    sampler = TransitionSampler(mdp.transition)
    discount = learning_discount(mdp)
    q_table = np.zeros((mdp.n_states, mdp.n_actions))
    reward = np.asarray(mdp.reward)

    for episode in range(iterations):
        state = int(rng.choice(mdp.n_states, p=mdp.mu0.probs))
        for _ in range(episode_length):
            if rng.random() < epsilon:
                action = int(rng.integers(mdp.n_actions))
            else:
                best = np.flatnonzero(q_table[state] == q_table[state].max())
                action = int(best[rng.integers(best.size)])
            following = int(sampler.sample(np.array([state * mdp.n_actions + action]), rng)[0])
            td_target = reward[state, action] + discount * q_table[following].max()
            q_table[state, action] += lr * (td_target - q_table[state, action])
            state = following
        epsilon = max(epsilon_floor, epsilon * epsilon_decay)
        if (episode + 1) % 100 == 0:
            logger.debug('Q-learning episode %d, epsilon %.4f.', episode + 1, epsilon)

    return q_table, greedy_policy(q_table, softening)


def value_iteration(mdp, discount=None, tol=1e-10, max_iter=100000):
    """ Optimal state values and Q-table by value iteration. """
    discount = learning_discount(mdp) if discount is None else discount
    values = np.zeros(mdp.n_states)
    reward = np.asarray(mdp.reward)
    q_table = reward.copy()
    for _ in range(max_iter):
        q_table = reward + discount * (mdp.transition @ values).reshape(mdp.n_states, mdp.n_actions)
        updated = q_table.max(axis=1)
        if np.abs(updated - values).max() <= tol:
            values = updated
            break
        values = updated
    return values, q_table
