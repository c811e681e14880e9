"""
Exact ratio estimation for tabular problems.

The ratio solves diag(p) tau = (1 - gamma) mu0 + gamma P^T diag(p) tau, tau >= 0, with
sum p tau = 1 selecting the non-trivial solution when gamma = 1. The system is solved for
d = p * tau on the support of p only; mass the chain sends outside the support is
lost, which makes the restricted system inconsistent for finite data. The solution is
then clamped at zero and rescaled.
"""
import logging

import numpy as np
from django.conf import settings
from scipy import sparse
from scipy.sparse import linalg as sparse_linalg

from estimator.exceptions import UnsupportedStatesError
from markov.exceptions import InvalidDistributionError, ShapeMismatchError
from markov.stationary_engine import policy_expansion, stationary_oracle
from markov.structures import MarkovChain, pair_index

logger = logging.getLogger(__name__)

INVERSE_ITERATION_SHIFT = 1e-10
INVERSE_ITERATION_TOL = 1e-12
INVERSE_ITERATION_MAX_ITER = 100


def tabular_exact_solve(chain, p, gamma=None, mu0_term=None, require_support=True):
    """ Solves the stationary condition for the ratio tau = mu / p.

    Args:
        chain: A MarkovChain over states or flattened state-action pairs.
        p: The data Distribution on the same index set.
        gamma: Discount in (0, 1]; defaults to chain.gamma.
        mu0_term: Restart distribution used when gamma < 1; defaults to chain.mu0.
        require_support: Check against the stationary oracle that the target puts no mass
            outside the support of p, raising UnsupportedStatesError otherwise. Empirical
            chains built from the data itself can skip the check.

    Returns: The ratio as a float array, zero outside the support of p, with
        sum p * tau = 1.

    Examples:
    >>> chain = MarkovChain(np.full((2, 2), 0.5), Distribution.uniform(2))
    >>> tabular_exact_solve(chain, Distribution([0.25, 0.75]))
    array([2.        , 0.66666667])
    """
    gamma = chain.gamma if gamma is None else gamma
    mu0_term = chain.mu0 if mu0_term is None else mu0_term
    probs = np.asarray(getattr(p, 'probs', p), dtype=float)
    if probs.shape != (chain.n_states,):
        raise ShapeMismatchError('p has {} entries for a {}-state chain.'.format(probs.size, chain.n_states))

    tol = settings.MARKOV_DEFAULTS['support_tol']
    support = np.flatnonzero(probs > tol)
    if require_support:
        mu = stationary_oracle(chain, gamma=gamma, mu0_term=mu0_term).probs
        missing = np.flatnonzero((probs <= tol) & (mu > tol))
        if missing.size:
            raise UnsupportedStatesError(missing)

    transition = sparse.csr_matrix(chain.transition)[support][:, support]
    system = (sparse.identity(support.size, format='csc') - gamma * transition.T).tocsc()
    if gamma < 1.0:
        restart = np.asarray(mu0_term.probs, dtype=float)
        if restart[support].sum() < restart.sum() - tol:
            logger.warning('Restart distribution has mass outside the data support; it is dropped.')
        d = sparse_linalg.spsolve(system, (1.0 - gamma) * restart[support])
    else:
        d = null_vector(system, probs[support])

    d = np.clip(np.asarray(d, dtype=float).ravel(), 0.0, None)
    if d.sum() <= 0:
        raise InvalidDistributionError('Exact ratio solve returned no positive mass.')
    tau = np.zeros(chain.n_states)
    tau[support] = d / d.sum() / probs[support]
    return tau


def null_vector(system, start):
    """ Shifted inverse iteration for the eigenvector of ``system`` closest to eigenvalue 0.

    For a substochastic restriction the iteration returns the Perron vector, the closest
    non-negative fit to the stationary condition.
    """
    n = system.shape[0]
    factor = sparse_linalg.splu((system + INVERSE_ITERATION_SHIFT * sparse.identity(n, format='csc')).tocsc())
    vector = np.asarray(start, dtype=float) / np.sum(start)
    change = np.inf
    for iteration in range(1, INVERSE_ITERATION_MAX_ITER + 1):
        following = factor.solve(vector)
        following = following / following.sum()
        change = np.abs(following - vector).sum()
        vector = following
        if change <= INVERSE_ITERATION_TOL:
            logger.debug('Inverse iteration converged after %d iterations.', iteration)
            return vector
    logger.warning('Inverse iteration stopped at change %.3e above tolerance.', change)
    return vector


def empirical_chain(dataset, policy, gamma=1.0):
    """ The estimated pair chain P(s', a' | s, a) = n(s, a, s') / n(s, a) * pi(a' | s').

    Rows of unvisited pairs are self-loops; they carry no data mass. The initial
    distribution is the dataset's initial-state frequencies lifted by ``policy``.
    """
    n_pairs = dataset.n_pairs
    rows = pair_index(dataset.states, dataset.actions, dataset.n_actions)
    counts = sparse.csr_matrix(
        (np.ones(len(dataset)), (rows, dataset.next_states)), shape=(n_pairs, dataset.n_states)
    )
    visits = np.asarray(counts.sum(axis=1)).ravel()
    unvisited = np.flatnonzero(visits == 0)
    inverse = np.zeros(n_pairs)
    inverse[visits > 0] = 1.0 / visits[visits > 0]
    transition = sparse.diags(inverse) @ counts @ policy_expansion(policy)
    transition = transition + sparse.csr_matrix(
        (np.ones(unvisited.size), (unvisited, unvisited)), shape=(n_pairs, n_pairs)
    )
    mu0 = policy.pair_distribution(dataset.initial_distribution())
    return MarkovChain(transition.tocsr(), mu0, gamma)


def exact_ratio(dataset, policy, gamma=1.0):
    """ tabular_exact_solve on the empirical chain and empirical pair distribution. """
    chain = empirical_chain(dataset, policy, gamma)
    return tabular_exact_solve(chain, dataset.empirical_distribution(), gamma, chain.mu0, require_support=False)
