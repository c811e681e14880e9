"""
Trajectory sampling for tabular MDPs and chains.

Every function owns its generator: ``np.random.default_rng(seed)`` is created per
call, so equal seeds give identical datasets and parallel calls share no state.
"""
import numpy as np
from scipy import sparse

from markov.exceptions import InvalidParameterError
from markov.structures import TransitionDataset, pair_index


class TransitionSampler:
    """ Vectorised draws of next states from the rows of a row-stochastic matrix. """

    def __init__(self, transition):
        matrix = sparse.csr_matrix(transition, dtype=float)
        matrix.sort_indices()
        self.indptr = matrix.indptr
        self.indices = matrix.indices
        self.cumulative = np.cumsum(matrix.data)
        starts = self.indptr[:-1]
        ends = self.indptr[1:]
        padded = np.concatenate(([0.0], self.cumulative))
        self.row_base = padded[starts]
        self.row_total = padded[ends] - padded[starts]

    def sample(self, rows, rng):
        rows = np.asarray(rows, dtype=np.int64)
        targets = self.row_base[rows] + rng.random(rows.shape[0]) * self.row_total[rows]
        positions = np.searchsorted(self.cumulative, targets, side='right')
        positions = np.clip(positions, self.indptr[rows], self.indptr[rows + 1] - 1)
        return self.indices[positions]


def sample_initial_states(mu0, size, rng):
    return rng.choice(len(mu0), size=size, p=mu0.probs)


def sample_trajectories(mdp, policy, n_trajectories, horizon, seed):
    """ Rolls out ``n_trajectories`` fixed-horizon trajectories of ``policy`` in ``mdp``.

    Args:
        mdp: The TabularMDP to simulate.
        policy: The behavior Policy choosing actions.
        n_trajectories: Number of independent trajectories, each starting from mu0.
        horizon: Steps per trajectory (truncation, no terminal states).
        seed: Seed of the generator owned by this call.

    Returns: A TransitionDataset with n_trajectories * horizon records ordered by
        trajectory, then step.
    """
    if horizon < 1:
        raise InvalidParameterError('horizon must be at least 1, got {}.'.format(horizon))
    if n_trajectories < 1:
        raise InvalidParameterError('n_trajectories must be at least 1, got {}.'.format(n_trajectories))

    rng = np.random.default_rng(seed)
    sampler = TransitionSampler(mdp.transition)
    states = np.empty((horizon, n_trajectories), dtype=np.int64)
    actions = np.empty_like(states)
    next_states = np.empty_like(states)

    current = sample_initial_states(mdp.mu0, n_trajectories, rng)
    initial_states = current.copy()
    for step in range(horizon):
        chosen = policy.sample(current, rng)
        following = sampler.sample(pair_index(current, chosen, mdp.n_actions), rng)
        states[step], actions[step], next_states[step] = current, chosen, following
        current = following

    states, actions, next_states = states.T.ravel(), actions.T.ravel(), next_states.T.ravel()
    return TransitionDataset(
        n_states=mdp.n_states,
        n_actions=mdp.n_actions,
        states=states,
        actions=actions,
        rewards=mdp.reward[states, actions],
        next_states=next_states,
        initial_states=initial_states,
        episodes=np.repeat(np.arange(n_trajectories), horizon),
        steps=np.tile(np.arange(horizon), n_trajectories),
    )
