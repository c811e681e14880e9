"""
Turning an estimated ratio into policy values and stationary distributions.

``tau`` is a table indexed by flattened pair (or by state when there is one action).
"""
import numpy as np
import pandas as pd

from markov.exceptions import InvalidParameterError, ShapeMismatchError
from markov.structures import Distribution, pair_index


def record_values(tau, dataset):
    """ tau(s, a) for every record of ``dataset``. """
    tau = np.asarray(tau, dtype=float)
    if tau.shape != (dataset.n_pairs,):
        raise ShapeMismatchError('tau has shape {}, dataset has {} pairs.'.format(tau.shape, dataset.n_pairs))
    return tau[pair_index(dataset.states, dataset.actions, dataset.n_actions)]


def self_normalized(tau, dataset=None):
    """ Divides tau by its mean over the data so the ratios average to one.

    Without ``dataset`` ``tau`` holds one value per record; with it ``tau`` is a pair
    table and the mean is taken over the dataset's records.
    """
    tau = np.asarray(tau, dtype=float)
    if tau.size == 0:
        raise InvalidParameterError('Cannot normalise an empty ratio vector.')
    mean = (tau if dataset is None else record_values(tau, dataset)).mean()
    if mean <= 0:
        raise InvalidParameterError('Ratios have non-positive mean {!r}.'.format(mean))
    return tau / mean


def estimate_policy_value(tau, dataset):
    """ Mean of tau(s, a) * r over the records. """
    return float(np.mean(record_values(tau, dataset) * dataset.rewards))


def estimate_pagerank(tau, dataset):
    """ d(v) proportional to p(v) tau(v), p the empirical visit frequencies.

    Pair tables are summed over actions. Unvisited vertices get zero mass.
    """
    tau = np.asarray(tau, dtype=float)
    if tau.shape != (dataset.n_pairs,):
        raise ShapeMismatchError('tau has shape {}, dataset has {} pairs.'.format(tau.shape, dataset.n_pairs))
    weights = dataset.empirical_distribution().probs * tau
    weights = weights.reshape(dataset.n_states, dataset.n_actions).sum(axis=1)
    return Distribution.from_weights(weights)


def save_trace(trace, path):
    """ Writes a loss trace with any cell columns first, then step and J. """
    keys = [column for column in trace.columns if column not in ('step', 'J')]
    trace.to_csv(path, index=False, columns=keys + ['step', 'J'])


def tau_frame(tau, n_states, n_actions=1):
    """ One row per state (or state-action pair) with its ratio. """
    tau = np.asarray(tau, dtype=float)
    if n_actions == 1:
        return pd.DataFrame({'state': np.arange(n_states), 'tau': tau})
    return pd.DataFrame({
        'state': np.repeat(np.arange(n_states), n_actions),
        'action': np.tile(np.arange(n_actions), n_states),
        'tau': tau,
    })


def save_tau_table(tau, n_states, n_actions, path):
    tau_frame(tau, n_states, n_actions).to_csv(path, index=False)
