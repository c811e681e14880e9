"""
The GenDICE saddle-point objective and its unbiased minibatch gradients.

For a batch of records (s, a, s') with a' ~ pi(.|s') and initial pairs (s0, a0),

    J = (1 - gamma) mean f(s0, a0) + gamma mean tau(s, a) f(s', a')
        - mean tau(s, a) phi*(f(s, a)) + lambda (mean u tau(s, a) - u - u^2 / 2).

tau is minimised, f and u are maximised. With self-normalisation tau is divided by its
batch mean and the lambda term is dropped.
"""
from dataclasses import dataclass

import numpy as np

from divergences.divergence_engine import chi2_conjugate
from estimator.exceptions import EmptyBatchError
from markov.exceptions import ShapeMismatchError
from markov.structures import pair_index


@dataclass(frozen=True)
class Batch:
    """ Flattened pair indices for current, next and initial samples.

    ``normalizer_pairs``, when set, are the pairs whose mean tau self-normalisation divides
    by instead of the batch mean.
    """
    pairs: np.ndarray
    next_pairs: np.ndarray
    initial_pairs: np.ndarray
    normalizer_pairs: np.ndarray = None

    def __post_init__(self):
        for name in ('pairs', 'next_pairs', 'initial_pairs'):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.int64))
        if self.pairs.size == 0 or self.initial_pairs.size == 0:
            raise EmptyBatchError('A batch needs at least one record and one initial sample.')
        if self.next_pairs.shape != self.pairs.shape:
            raise ShapeMismatchError('{} records but {} next pairs.'.format(self.pairs.size, self.next_pairs.size))
        if self.normalizer_pairs is not None:
            object.__setattr__(self, 'normalizer_pairs', np.asarray(self.normalizer_pairs, dtype=np.int64))


def sample_batch(dataset, policy, batch_size, rng, full=False, initial_states=None, normalizer_pairs=None):
    """ Draws records and initial states with replacement, completing actions from ``policy``.

    With ``full`` every record and every initial state is used once, in dataset order.
    Explicit ``initial_states`` replace the draw from the dataset.
    """
    if len(dataset) == 0 or dataset.initial_states.size == 0:
        raise EmptyBatchError('Cannot sample from an empty dataset.')
    if full:
        records = np.arange(len(dataset))
        if initial_states is None:
            initial_states = dataset.initial_states
    else:
        records = rng.integers(0, len(dataset), size=batch_size)
        if initial_states is None:
            initial_states = dataset.initial_states[rng.integers(0, dataset.initial_states.size, size=batch_size)]
    n_actions = dataset.n_actions
    next_states = dataset.next_states[records]
    return Batch(
        pairs=pair_index(dataset.states[records], dataset.actions[records], n_actions),
        next_pairs=pair_index(next_states, policy.sample(next_states, rng), n_actions),
        initial_pairs=pair_index(initial_states, policy.sample(initial_states, rng), n_actions),
        normalizer_pairs=normalizer_pairs,
    )


@dataclass(frozen=True)
class SaddleTerms:
    """ Forward quantities shared by the objective and its gradients. """
    tau: np.ndarray
    tau_scale: float
    f_current: np.ndarray
    f_next: np.ndarray
    f_initial: np.ndarray
    conjugate: np.ndarray


def saddle_terms(saddle, batch, cfg, conjugate):
    tau = np.asarray(saddle.tau.evaluate(batch.pairs), dtype=float)
    f_current = np.asarray(saddle.f.evaluate(batch.pairs), dtype=float)
    tau_scale = 1.0
    if cfg.normalization == 'self':
        if batch.normalizer_pairs is None:
            tau_scale = tau.mean()
        else:
            tau_scale = float(np.mean(saddle.tau.evaluate(batch.normalizer_pairs)))
    return SaddleTerms(
        tau=tau,
        tau_scale=tau_scale,
        f_current=f_current,
        f_next=np.asarray(saddle.f.evaluate(batch.next_pairs), dtype=float),
        f_initial=np.asarray(saddle.f.evaluate(batch.initial_pairs), dtype=float),
        conjugate=conjugate(f_current),
    )


def objective_from_terms(terms, u, cfg):
    gamma, lam = cfg.gamma, cfg.penalty
    tau = terms.tau / terms.tau_scale
    value = ((1.0 - gamma) * terms.f_initial.mean()
             + gamma * np.mean(tau * terms.f_next)
             - np.mean(tau * terms.conjugate))
    if lam:
        value += lam * (np.mean(u * tau - u) - u * u / 2.0)
    return float(value)


def objective_general(saddle, batch, cfg):
    """ The sampled objective for the configured divergence; raises on conjugate domain violations. """
    terms = saddle_terms(saddle, batch, cfg, cfg.divergence.phi_star)
    return objective_from_terms(terms, saddle.u, cfg)


def objective_chi2(saddle, batch, cfg):
    """ The sampled objective with phi*(y) = y + y^2 / 4, whatever divergence ``cfg`` names. """
    terms = saddle_terms(saddle, batch, cfg, chi2_conjugate)
    return objective_from_terms(terms, saddle.u, cfg)


def gradients(saddle, batch, cfg):
    """ Unbiased minibatch gradients of the objective.

    Args:
        saddle: The current SaddleParams.
        batch: A Batch of pair indices.
        cfg: The GenDiceConfig (gamma, lambda, divergence, normalisation).

    Returns: (grad_tau, grad_u, grad_f), parameter gradients as lists of arrays aligned
        with ``saddle.tau.arrays()`` and ``saddle.f.arrays()``.
    """
    return objective_and_gradients(saddle, batch, cfg)[1]


def objective_and_gradients(saddle, batch, cfg):
    divergence = cfg.divergence
    terms = saddle_terms(saddle, batch, cfg, divergence.phi_star)
    gamma, lam, u = cfg.gamma, cfg.penalty, saddle.u
    size = float(batch.pairs.size)

    # d J / d tau_j before the chain rule through the head.
    per_record = gamma * terms.f_next - terms.conjugate
    if cfg.normalization == 'self':
        scaled = terms.tau / terms.tau_scale
        weighted = np.mean(per_record * scaled)
        if batch.normalizer_pairs is None:
            tau_indices = batch.pairs
            tau_upstream = (per_record - weighted) / (size * terms.tau_scale)
        else:
            n_normalizer = batch.normalizer_pairs.size
            tau_indices = np.concatenate([batch.pairs, batch.normalizer_pairs])
            tau_upstream = np.concatenate([
                per_record / (size * terms.tau_scale),
                np.full(n_normalizer, -weighted / (n_normalizer * terms.tau_scale)),
            ])
        tau = scaled
    else:
        tau_indices = batch.pairs
        tau_upstream = (per_record + lam * u) / size
        tau = terms.tau
    grad_tau = saddle.tau.gradient(tau_indices, tau_upstream)

    grad_u = lam * (np.mean(terms.tau) - 1.0 - u) if lam else 0.0

    indices = np.concatenate([batch.initial_pairs, batch.next_pairs, batch.pairs])
    f_upstream = np.concatenate([
        np.full(batch.initial_pairs.size, (1.0 - gamma) / batch.initial_pairs.size),
        gamma * tau / size,
        -tau * divergence.phi_star_deriv(terms.f_current) / size,
    ])
    grad_f = saddle.f.gradient(indices, f_upstream)
    return objective_from_terms(terms, u, cfg), (grad_tau, float(grad_u), grad_f)


def inner_maximized_objective(tau, chain, p, gamma, mu0, lam):
    """ The chi-squared objective in expectation with f and u maximised in closed form.

    With d = p * tau and q = (1 - gamma) mu0 + gamma P^T d the value is
    sum_i (q_i - d_i)^2 / d_i + lambda / 2 (sum_i d_i - 1)^2, which is convex in tau.
    Indices with d_i = 0 contribute 0 when q_i = 0 and +inf otherwise.
    """
    tau = np.asarray(tau, dtype=float)
    d = np.asarray(getattr(p, 'probs', p), dtype=float) * tau
    mu0 = np.asarray(getattr(mu0, 'probs', mu0), dtype=float)
    q = (1.0 - gamma) * mu0 + gamma * np.asarray(chain.transition.T @ d).ravel()
    positive = d > 0
    if (q[~positive] > 0).any():
        return np.inf
    residual = np.sum((q[positive] - d[positive]) ** 2 / d[positive])
    return float(residual + lam / 2.0 * (d.sum() - 1.0) ** 2)
