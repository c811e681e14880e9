"""
f-divergences D_phi(q || p) = sum_i p(i) phi(q(i) / p(i)) with their Fenchel conjugates.

Each divergence also names the output head used for the dual function f during
training, keeping f inside the domain of phi*.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from divergences.exceptions import AbsoluteContinuityError, ConjugateDomainError
from markov.exceptions import InvalidParameterError, ShapeMismatchError

logger = logging.getLogger(__name__)

LOG_2 = math.log(2.0)


@dataclass(frozen=True)
class FDivergence:
    name: str
    phi: object
    conjugate: object
    conjugate_deriv: object
    closed_form_dual: object = None
    dual_head: str = 'identity'
    # phi* is finite only for y strictly below this bound.
    conjugate_bound: float = math.inf

    def check_domain(self, y):
        y = np.asarray(y, dtype=float)
        if np.isfinite(self.conjugate_bound) and y.size and y.max() >= self.conjugate_bound:
            raise ConjugateDomainError('{} conjugate is defined for y < {:.6f}, got y = {!r}.'.format(
                self.name, self.conjugate_bound, float(y.max())
            ))
        return y

    def phi_star(self, y):
        return self.conjugate(self.check_domain(y))

    def phi_star_deriv(self, y):
        return self.conjugate_deriv(self.check_domain(y))


def chi2_phi(x):
    return (np.asarray(x, dtype=float) - 1.0) ** 2


def chi2_conjugate(y):
    return y + y ** 2 / 4.0


def chi2_conjugate_deriv(y):
    return 1.0 + y / 2.0


def chi2_dual(r):
    return 2.0 * (np.asarray(r, dtype=float) - 1.0)


def kl_phi(x):
    return xlogy(x, x)


def kl_conjugate(y):
    return np.exp(y - 1.0)


def kl_dual(r):
    return 1.0 + np.log(r)


def js_phi(x):
    x = np.asarray(x, dtype=float)
    return xlogy(x, x) - xlogy(x + 1.0, (x + 1.0) / 2.0)


def js_conjugate(y):
    return -np.log(2.0 - np.exp(y))


def js_conjugate_deriv(y):
    return np.exp(y) / (2.0 - np.exp(y))


def js_dual(r):
    r = np.asarray(r, dtype=float)
    return np.log(2.0 * r / (r + 1.0))


def chi_squared():
    """ phi(x) = (x - 1)^2, phi*(y) = y + y^2 / 4. """
    return FDivergence('chi2', chi2_phi, chi2_conjugate, chi2_conjugate_deriv, chi2_dual)


def kl():
    """ phi(x) = x log x, phi*(y) = exp(y - 1). """
    return FDivergence('kl', kl_phi, kl_conjugate, kl_conjugate, kl_dual)


def js():
    """ phi(x) = x log x - (x + 1) log((x + 1) / 2), phi*(y) = -log(2 - e^y) for y < log 2. """
    return FDivergence(
        'js', js_phi, js_conjugate, js_conjugate_deriv, js_dual,
        dual_head='log2_minus_softplus',
        conjugate_bound=LOG_2,
    )


DIVERGENCES = {
    'chi2': chi_squared,
    'kl': kl,
    'js': js,
}


def get_divergence(name):
    try:
        return DIVERGENCES[name]()
    except KeyError:
        raise InvalidParameterError('Unknown divergence {!r}; choose one of {}.'.format(name, sorted(DIVERGENCES)))


def probabilities(distribution):
    return np.asarray(getattr(distribution, 'probs', distribution), dtype=float)


def eval_divergence(divergence, q, p, strict=False):
    """ Evaluates D_phi(q || p) with the convention 0 * phi(0 / 0) = 0.

    Args:
        divergence: The FDivergence.
        q: The distribution in the numerator of the ratio.
        p: The reference distribution.
        strict: Raise AbsoluteContinuityError instead of returning +inf when q puts
            mass where p has none.

    Returns: The divergence value, +inf when q is not absolutely continuous w.r.t. p.

    Examples:
    >>> eval_divergence(chi_squared(), [0.7, 0.3], [0.5, 0.5])
    0.16
    """
    q, p = probabilities(q), probabilities(p)
    if q.shape != p.shape:
        raise ShapeMismatchError('Distributions have shapes {} and {}.'.format(q.shape, p.shape))
    support = p > 0
    violations = np.flatnonzero(~support & (q > 0))
    if violations.size:
        if strict:
            raise AbsoluteContinuityError(violations)
        logger.debug('Divergence is infinite: q has mass off the support of p at %s.', violations.tolist())
        return math.inf
    ratio = q[support] / p[support]
    return float(np.sum(p[support] * divergence.phi(ratio)))
