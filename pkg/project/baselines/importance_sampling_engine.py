"""
Step-wise (per-decision) weighted importance sampling.

For trajectories n and steps t the weight w[n, t] = prod_{i <= t} pi(a_i|s_i) / pi_b(a_i|s_i)
is self-normalised across trajectories at each t. The estimate averages the weighted
per-step rewards with step weights proportional to gamma^t over the observed horizon,
so gamma = 1 gives the average reward and gamma = 0 the first-step reward, or with the
truncated discounted weights (1 - gamma) gamma^t.
"""
import logging

import numpy as np

from baselines.exceptions import ZeroBehaviorProbabilityError
from markov.exceptions import InvalidParameterError

logger = logging.getLogger(__name__)


def step_weights(trajectories, target, behavior):
    """ Self-normalised cumulative ratios, one column per step.

    Args:
        trajectories: A dict of (n_trajectories, horizon) arrays with ``state`` and
            ``action`` keys, as returned by TransitionDataset.trajectories().
        target: The evaluated Policy.
        behavior: The (cloned) behavior Policy.

    Returns: An array of the trajectories' shape whose non-zero columns sum to 1.
    """
    states, actions = trajectories['state'], trajectories['action']
    behavior_probs = behavior.probs[states, actions]
    zero = np.argwhere(behavior_probs <= 0)
    if zero.size:
        episode, step = (int(index) for index in zero[0])
        raise ZeroBehaviorProbabilityError(episode, step, int(states[episode, step]), int(actions[episode, step]))

    weights = np.cumprod(target.probs[states, actions] / behavior_probs, axis=1)
    totals = weights.sum(axis=0)
    empty = totals <= 0
    if empty.any():
        logger.warning('All importance weights vanish at %d of %d steps.', empty.sum(), totals.size)
    normalised = np.zeros_like(weights)
    normalised[:, ~empty] = weights[:, ~empty] / totals[~empty]
    return normalised


WEIGHTINGS = ('normalized', 'discounted')


def wis_estimate(dataset, target, behavior, gamma=1.0, weighting='normalized'):
    """ Per-decision weighted importance sampling estimate from equal-length trajectories.

    ``weighting`` picks the step weights: ``normalized`` uses gamma^t / sum gamma^t over the
    observed horizon, ``discounted`` the truncated (1 - gamma) gamma^t. With gamma = 1 both
    give the average reward.
    """
    if not 0.0 <= gamma <= 1.0:
        raise InvalidParameterError('gamma must lie in [0, 1], got {}.'.format(gamma))
    if weighting not in WEIGHTINGS:
        raise InvalidParameterError('Unknown WIS weighting {!r}.'.format(weighting))
    trajectories = dataset.trajectories()
    weights = step_weights(trajectories, target, behavior)
    step_rewards = (weights * trajectories['reward']).sum(axis=0)
    discounts = gamma ** np.arange(step_rewards.size)
    if weighting == 'discounted' and gamma < 1.0:
        return float((1.0 - gamma) * np.dot(discounts, step_rewards))
    return float(np.dot(discounts, step_rewards) / discounts.sum())
