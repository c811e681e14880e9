"""
Finite Markov chains, decision processes, policies and off-line datasets.

All structures are immutable after construction: arrays are copied and flagged
read-only, so instances may be shared freely between threads and processes.
State-action pairs are flattened row-major, pair (s, a) has index s * n_actions + a.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import pandas as pd
from scipy import sparse

from markov.exceptions import InvalidDistributionError, InvalidParameterError, ShapeMismatchError

ROW_TOL = 1e-12
DISTRIBUTION_TOL = 1e-10


def frozen_array(values, dtype=float):
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


def as_transition_matrix(matrix):
    """ Normalises a transition matrix to either a dense float array or a CSR matrix. """
    if sparse.issparse(matrix):
        return sparse.csr_matrix(matrix, dtype=float)
    return frozen_array(matrix)


def check_row_stochastic(matrix, tol=ROW_TOL):
    if sparse.issparse(matrix):
        smallest = matrix.data.min() if matrix.nnz else 0.0
        sums = np.asarray(matrix.sum(axis=1)).ravel()
    else:
        smallest = matrix.min() if matrix.size else 0.0
        sums = matrix.sum(axis=1)
    if smallest < 0:
        raise InvalidDistributionError('Transition matrix has negative entries (min {}).'.format(smallest))
    worst = np.abs(sums - 1.0)
    if worst.size and worst.max() > tol:
        row = int(np.argmax(worst))
        raise InvalidDistributionError('Transition row {} sums to {!r}, not 1.'.format(row, sums[row]))


def pair_index(states, actions, n_actions):
    return np.asarray(states, dtype=np.int64) * n_actions + np.asarray(actions, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class Distribution:
    """ A probability vector over states or over flattened state-action pairs. """
    probs: np.ndarray

    def __post_init__(self):
        probs = frozen_array(self.probs)
        if probs.ndim != 1:
            raise ShapeMismatchError('A distribution must be one dimensional, got shape {}.'.format(probs.shape))
        if probs.size and probs.min() < 0:
            raise InvalidDistributionError('Distribution has negative mass {}.'.format(probs.min()))
        if abs(probs.sum() - 1.0) > DISTRIBUTION_TOL:
            raise InvalidDistributionError('Distribution sums to {!r}, not 1.'.format(probs.sum()))
        object.__setattr__(self, 'probs', probs)

    @classmethod
    def uniform(cls, size):
        return cls(np.full(size, 1.0 / size))

    @classmethod
    def point_mass(cls, size, index):
        probs = np.zeros(size)
        probs[index] = 1.0
        return cls(probs)

    @classmethod
    def from_weights(cls, weights):
        """ Renormalises non-negative weights, clipping round-off negatives. """
        weights = np.clip(np.asarray(weights, dtype=float), 0.0, None)
        total = weights.sum()
        if total <= 0:
            raise InvalidDistributionError('Cannot normalise weights with non-positive total {}.'.format(total))
        return cls(weights / total)

    def __len__(self):
        return self.probs.size


@dataclass(frozen=True, eq=False)
class MarkovChain:
    """ A row-stochastic transition matrix P[v][u] with an initial distribution and discount. """
    transition: object
    mu0: Distribution
    gamma: float = 1.0

    def __post_init__(self):
        transition = as_transition_matrix(self.transition)
        if transition.ndim != 2 or transition.shape[0] != transition.shape[1]:
            raise ShapeMismatchError('Transition matrix must be square, got shape {}.'.format(transition.shape))
        if len(self.mu0) != transition.shape[0]:
            raise ShapeMismatchError('mu0 has {} entries for a {}-state chain.'.format(
                len(self.mu0), transition.shape[0]
            ))
        if not 0.0 <= self.gamma <= 1.0:
            raise InvalidParameterError('gamma must lie in [0, 1], got {}.'.format(self.gamma))
        check_row_stochastic(transition)
        object.__setattr__(self, 'transition', transition)

    @property
    def n_states(self):
        return self.transition.shape[0]

    @property
    def is_sparse(self):
        return sparse.issparse(self.transition)

    def dense(self):
        if self.is_sparse:
            return self.transition.toarray()
        return np.array(self.transition)


@dataclass(frozen=True, eq=False)
class Policy:
    """ A table pi[s][a] of action probabilities. """
    probs: np.ndarray

    def __post_init__(self):
        probs = frozen_array(self.probs)
        if probs.ndim != 2:
            raise ShapeMismatchError('A policy table must be two dimensional, got shape {}.'.format(probs.shape))
        check_row_stochastic(probs)
        object.__setattr__(self, 'probs', probs)

    @classmethod
    def uniform(cls, n_states, n_actions):
        return cls(np.full((n_states, n_actions), 1.0 / n_actions))

    @property
    def n_states(self):
        return self.probs.shape[0]

    @property
    def n_actions(self):
        return self.probs.shape[1]

    def sample(self, states, rng):
        """ Draws one action per entry of ``states``. """
        states = np.asarray(states, dtype=np.int64)
        cumulative = np.cumsum(self.probs[states], axis=1)
        draws = rng.random(states.shape[0])
        actions = (draws[:, None] >= cumulative).sum(axis=1)
        return np.minimum(actions, self.n_actions - 1)

    def pair_distribution(self, state_distribution):
        """ Lifts a state distribution d(s) to d(s) * pi(a|s) over flattened pairs. """
        weights = np.asarray(state_distribution.probs)[:, None] * self.probs
        return Distribution.from_weights(weights.ravel())


@dataclass(frozen=True, eq=False)
class TabularMDP:
    """ A finite MDP with deterministic (mean) rewards.

    ``transition`` is stored as a CSR matrix of shape (n_states * n_actions, n_states);
    a dense tensor P[s][a][s'] is accepted and reshaped on construction.
    """
    n_states: int
    n_actions: int
    transition: object
    reward: np.ndarray
    mu0: Distribution
    gamma: float = 1.0

    def __post_init__(self):
        if self.n_states < 1 or self.n_actions < 1:
            raise InvalidParameterError('An MDP needs at least one state and one action.')
        transition = self.transition
        if not sparse.issparse(transition):
            transition = np.asarray(transition, dtype=float)
            if transition.ndim == 3:
                transition = transition.reshape(self.n_states * self.n_actions, self.n_states)
        transition = sparse.csr_matrix(transition, dtype=float)
        if transition.shape != (self.n_states * self.n_actions, self.n_states):
            raise ShapeMismatchError('Transition has shape {}, expected {}.'.format(
                transition.shape, (self.n_states * self.n_actions, self.n_states)
            ))
        check_row_stochastic(transition)

        reward = frozen_array(self.reward)
        if reward.shape != (self.n_states, self.n_actions):
            raise ShapeMismatchError('Reward table has shape {}, expected {}.'.format(
                reward.shape, (self.n_states, self.n_actions)
            ))
        if len(self.mu0) != self.n_states:
            raise ShapeMismatchError('mu0 has {} entries for {} states.'.format(len(self.mu0), self.n_states))
        if not 0.0 <= self.gamma <= 1.0:
            raise InvalidParameterError('gamma must lie in [0, 1], got {}.'.format(self.gamma))

        object.__setattr__(self, 'transition', transition)
        object.__setattr__(self, 'reward', reward)

    @property
    def n_pairs(self):
        return self.n_states * self.n_actions

    def transition_tensor(self):
        """ Dense P[s][a][s']; only sensible for small models. """
        return self.transition.toarray().reshape(self.n_states, self.n_actions, self.n_states)


@dataclass(frozen=True, eq=False)
class TransitionDataset:
    """ Off-line records (s, a, r, s') plus initial-state samples.

    ``episodes`` and ``steps`` keep the trajectory structure of sampled data; a single
    random walk uses one episode.
    """
    n_states: int
    n_actions: int
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    initial_states: np.ndarray
    episodes: np.ndarray = None
    steps: np.ndarray = None

    def __post_init__(self):
        states = frozen_array(self.states, dtype=np.int64)
        actions = frozen_array(self.actions, dtype=np.int64)
        rewards = frozen_array(self.rewards)
        next_states = frozen_array(self.next_states, dtype=np.int64)
        initial_states = frozen_array(self.initial_states, dtype=np.int64)
        size = states.shape[0]
        episodes = frozen_array(np.zeros(size) if self.episodes is None else self.episodes, dtype=np.int64)
        steps = frozen_array(np.arange(size) if self.steps is None else self.steps, dtype=np.int64)

        for name, column in (('actions', actions), ('rewards', rewards), ('next_states', next_states),
                             ('episodes', episodes), ('steps', steps)):
            if column.shape != (size,):
                raise ShapeMismatchError('Column {} has shape {}, expected ({},).'.format(name, column.shape, size))
        for name, column, bound in (('states', states, self.n_states), ('next_states', next_states, self.n_states),
                                    ('initial_states', initial_states, self.n_states),
                                    ('actions', actions, self.n_actions)):
            if column.size and (column.min() < 0 or column.max() >= bound):
                raise InvalidParameterError('Column {} has indices outside [0, {}).'.format(name, bound))

        for name, value in (('states', states), ('actions', actions), ('rewards', rewards),
                            ('next_states', next_states), ('initial_states', initial_states),
                            ('episodes', episodes), ('steps', steps)):
            object.__setattr__(self, name, value)

    def __len__(self):
        return self.states.shape[0]

    @property
    def n_pairs(self):
        return self.n_states * self.n_actions

    @cached_property
    def pair_counts(self):
        return np.bincount(pair_index(self.states, self.actions, self.n_actions), minlength=self.n_pairs)

    @cached_property
    def state_counts(self):
        return np.bincount(self.states, minlength=self.n_states)

    def empirical_distribution(self):
        """ The empirical p(s, a) over flattened pairs. """
        return Distribution(self.pair_counts / float(len(self)))

    def state_distribution(self):
        return Distribution(self.state_counts / float(len(self)))

    def initial_distribution(self):
        counts = np.bincount(self.initial_states, minlength=self.n_states)
        return Distribution(counts / float(counts.sum()))

    def to_frame(self):
        return pd.DataFrame({
            'episode': self.episodes,
            'step': self.steps,
            'state': self.states,
            'action': self.actions,
            'reward': self.rewards,
            'next_state': self.next_states,
        })

    def trajectories(self):
        """ Reshapes records into (n_trajectories, horizon) arrays of states, actions and rewards.

        Returns: A dict of 2-D arrays keyed by column name, episodes ordered by id.
        """
        frame = self.to_frame().sort_values(['episode', 'step'], kind='stable')
        lengths = frame.groupby('episode')['step'].count()
        if lengths.nunique() != 1:
            raise ShapeMismatchError('Trajectories have unequal lengths {}.'.format(sorted(lengths.unique())))
        horizon = int(lengths.iloc[0])
        return {
            column: frame[column].to_numpy().reshape(-1, horizon)
            for column in ('state', 'action', 'reward', 'next_state')
        }
