"""
Stationary-distribution oracles for finite chains and policy-induced chains.

For gamma = 1 the stationary distribution is the fixed point of mu = P^T mu and is
found by power iteration. For gamma < 1 it is the normalised discounted occupancy
(1 - gamma) * sum_t gamma^t d_t, i.e. the solution of (I - gamma P^T) mu = (1 - gamma) mu0.
"""
import logging

import numpy as np
from django.conf import settings
from scipy import sparse
from scipy.sparse import linalg as sparse_linalg

from markov.exceptions import InvalidParameterError, ShapeMismatchError, StationaryConvergenceError
from markov.structures import Distribution, MarkovChain

logger = logging.getLogger(__name__)


def transpose_apply(transition, vector):
    """ Computes P^T v for dense or sparse P. """
    return np.asarray(transition.T @ vector).ravel()


def stationary_oracle(chain, gamma=None, mu0_term=None, tol=None, max_iter=None):
    """ Computes the (discounted) stationary distribution of a chain.

    Args:
        chain: A MarkovChain, typically a PageRank chain or an induced state-action chain.
        gamma: Discount in [0, 1]; defaults to chain.gamma.
        mu0_term: The restart distribution used when gamma < 1; defaults to chain.mu0.
        tol: L1 tolerance on ||mu - P^T mu|| for power iteration.
        max_iter: Power-iteration budget, spent once on the plain chain and once more
            on the lazy chain (the average of consecutive iterates) for periodic chains.

    Returns: The stationary Distribution.

    Examples:
    >>> chain = MarkovChain(np.full((2, 2), 0.5), Distribution.uniform(2))
    >>> stationary_oracle(chain).probs
    array([0.5, 0.5])
    """
    defaults = settings.MARKOV_DEFAULTS
    gamma = chain.gamma if gamma is None else gamma
    mu0_term = chain.mu0 if mu0_term is None else mu0_term
    tol = defaults['power_iteration_tol'] if tol is None else tol
    max_iter = defaults['power_iteration_max_iter'] if max_iter is None else max_iter

    if tol <= 0:
        raise InvalidParameterError('tol must be positive, got {}.'.format(tol))
    if not 0.0 <= gamma <= 1.0:
        raise InvalidParameterError('gamma must lie in [0, 1], got {}.'.format(gamma))
    if len(mu0_term) != chain.n_states:
        raise ShapeMismatchError('mu0_term has {} entries for a {}-state chain.'.format(
            len(mu0_term), chain.n_states
        ))

    if gamma == 0.0:
        return mu0_term
    if gamma < 1.0:
        return discounted_occupancy(chain.transition, gamma, mu0_term.probs)
    return power_iteration(chain.transition, mu0_term.probs, tol, max_iter)


def discounted_occupancy(transition, gamma, mu0):
    n = transition.shape[0]
    rhs = (1.0 - gamma) * np.asarray(mu0, dtype=float)
    if sparse.issparse(transition):
        system = (sparse.identity(n, format='csc') - gamma * transition.T).tocsc()
        mu = sparse_linalg.spsolve(system, rhs)
    else:
        mu = np.linalg.solve(np.eye(n) - gamma * transition.T, rhs)
    return Distribution.from_weights(mu)


def power_iteration(transition, start, tol, max_iter):
    mu = np.array(start, dtype=float)
    residual = np.inf
    for iteration in range(1, max_iter + 1):
        following = transpose_apply(transition, mu)
        residual = np.abs(following - mu).sum()
        mu = following
        if residual <= tol:
            logger.debug('Power iteration converged after %d iterations (residual %.3e).', iteration, residual)
            return Distribution.from_weights(mu)

    # Periodic chains oscillate forever; averaging consecutive iterates damps the cycle
    # without moving the fixed point.
    logger.warning('Power iteration stalled at residual %.3e; falling back to averaged iterates.', residual)
    for iteration in range(1, max_iter + 1):
        following = transpose_apply(transition, mu)
        residual = np.abs(following - mu).sum()
        if residual <= tol:
            logger.debug('Averaged iteration converged after %d iterations.', iteration)
            return Distribution.from_weights(mu)
        mu = 0.5 * (mu + following)
    raise StationaryConvergenceError(residual, 2 * max_iter)


def apply_T(mu, chain, gamma, mu0_term):
    """ The mixture operator (1 - gamma) mu0 + gamma P^T mu. """
    if len(mu) != chain.n_states or len(mu0_term) != chain.n_states:
        raise ShapeMismatchError('apply_T needs vectors of length {}.'.format(chain.n_states))
    image = (1.0 - gamma) * mu0_term.probs + gamma * transpose_apply(chain.transition, mu.probs)
    return Distribution(image)


def policy_expansion(policy):
    """ Sparse E with E[s, s * A + a] = pi(a|s), of shape (S, S * A). """
    n_states, n_actions = policy.probs.shape
    rows = np.repeat(np.arange(n_states), n_actions)
    cols = np.arange(n_states * n_actions)
    return sparse.csr_matrix((policy.probs.ravel(), (rows, cols)), shape=(n_states, n_states * n_actions))


def induced_chain(mdp, policy):
    """ The state-action chain P^pi[(s,a)][(s',a')] = pi(a'|s') P(s'|s,a).

    Returns: A sparse MarkovChain over flattened pairs with mu0(s) * pi(a|s) as its
        initial distribution.
    """
    if policy.probs.shape != (mdp.n_states, mdp.n_actions):
        raise ShapeMismatchError('Policy has shape {}, MDP expects {}.'.format(
            policy.probs.shape, (mdp.n_states, mdp.n_actions)
        ))
    transition = mdp.transition @ policy_expansion(policy)
    return MarkovChain(transition, policy.pair_distribution(mdp.mu0), mdp.gamma)


def state_chain(mdp, policy):
    """ The state chain P^pi[s][s'] = sum_a pi(a|s) P(s'|s,a). """
    if policy.probs.shape != (mdp.n_states, mdp.n_actions):
        raise ShapeMismatchError('Policy has shape {}, MDP expects {}.'.format(
            policy.probs.shape, (mdp.n_states, mdp.n_actions)
        ))
    return MarkovChain(policy_expansion(policy) @ mdp.transition, mdp.mu0, mdp.gamma)


def policy_value(mdp, policy, gamma=None):
    """ Ground-truth value sum mu(s,a) R(s,a): average reward for gamma = 1, normalised
    discounted value for gamma < 1.
    """
    gamma = mdp.gamma if gamma is None else gamma
    chain = induced_chain(mdp, policy)
    mu = stationary_oracle(chain, gamma=gamma)
    return float(mu.probs @ mdp.reward.ravel())
