"""
Tabular model-based estimation and behavior cloning.

The transition and reward tables are estimated from the logged records, then the
target policy is evaluated exactly on the fitted model.
"""
import logging
from dataclasses import dataclass

import numpy as np
from django.conf import settings
from scipy import sparse

from markov.exceptions import InvalidParameterError
from markov.stationary_engine import induced_chain, policy_value, stationary_oracle
from markov.structures import Distribution, Policy, TabularMDP, frozen_array, pair_index

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class EmpiricalModel:
    """ Fitted P(s'|s, a) as CSR rows over flattened pairs, mean rewards and visit counts. """
    n_states: int
    n_actions: int
    counts: object
    transition: object
    reward: np.ndarray
    visits: np.ndarray
    unvisited: np.ndarray

    def transition_tensor(self):
        return self.transition.toarray().reshape(self.n_states, self.n_actions, self.n_states)

    def as_mdp(self, mu0, gamma=1.0):
        return TabularMDP(self.n_states, self.n_actions, self.transition, self.reward, mu0, gamma)


def fit_model(dataset, smoothing=None):
    """ Estimates P(s'|s, a) = (n(s, a, s') + smoothing) / (n(s, a) + smoothing * |S|).

    Pairs never visited get a uniform row and are flagged in ``unvisited``; their
    reward estimate is 0.
    """
    smoothing = settings.BASELINE_DEFAULTS['smoothing'] if smoothing is None else smoothing
    if smoothing < 0:
        raise InvalidParameterError('smoothing must be >= 0, got {}.'.format(smoothing))
    n_states, n_pairs = dataset.n_states, dataset.n_pairs
    rows = pair_index(dataset.states, dataset.actions, dataset.n_actions)
    counts = sparse.csr_matrix((np.ones(len(dataset)), (rows, dataset.next_states)), shape=(n_pairs, n_states))
    visits = np.asarray(counts.sum(axis=1)).ravel()
    unvisited = visits == 0

    if smoothing > 0:
        dense = (counts.toarray() + smoothing) / (visits[:, None] + smoothing * n_states)
        transition = sparse.csr_matrix(dense)
    else:
        inverse = np.zeros(n_pairs)
        inverse[~unvisited] = 1.0 / visits[~unvisited]
        missing = np.flatnonzero(unvisited)
        uniform = sparse.csr_matrix(
            (np.full(missing.size * n_states, 1.0 / n_states),
             (np.repeat(missing, n_states), np.tile(np.arange(n_states), missing.size))),
            shape=(n_pairs, n_states),
        )
        transition = (sparse.diags(inverse) @ counts + uniform).tocsr()
    if unvisited.any():
        logger.debug('%d of %d pairs unvisited; using uniform transitions for them.', unvisited.sum(), n_pairs)

    reward_sums = np.bincount(rows, weights=dataset.rewards, minlength=n_pairs)
    reward = np.zeros(n_pairs)
    reward[~unvisited] = reward_sums[~unvisited] / visits[~unvisited]
    shape = (n_states, dataset.n_actions)
    return EmpiricalModel(
        n_states=n_states,
        n_actions=dataset.n_actions,
        counts=counts,
        transition=transition,
        reward=frozen_array(reward.reshape(shape)),
        visits=frozen_array(visits.reshape(shape), dtype=np.int64),
        unvisited=frozen_array(unvisited.reshape(shape), dtype=bool),
    )


def model_based_value(model, policy, gamma, mu0):
    """ sum mu(s, a) R(s, a) for the stationary distribution of ``policy`` on the fitted model. """
    return policy_value(model.as_mdp(mu0, gamma), policy, gamma)


def model_based_stationary(model, policy, gamma, mu0):
    """ The state marginal of the stationary distribution on the fitted model. """
    chain = induced_chain(model.as_mdp(mu0, gamma), policy)
    mu = stationary_oracle(chain, gamma=gamma).probs
    return Distribution.from_weights(mu.reshape(model.n_states, model.n_actions).sum(axis=1))


def behavior_clone(dataset):
    """ pi_b(a|s) = n(s, a) / n(s), uniform in unvisited states. """
    counts = dataset.pair_counts.reshape(dataset.n_states, dataset.n_actions).astype(float)
    totals = counts.sum(axis=1, keepdims=True)
    probs = np.full_like(counts, 1.0 / dataset.n_actions)
    visited = totals[:, 0] > 0
    probs[visited] = counts[visited] / totals[visited]
    return Policy(probs)
