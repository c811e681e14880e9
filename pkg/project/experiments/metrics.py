"""
Experiment metrics and the results.csv / summary.csv writers.
"""
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd
from django.conf import settings

from divergences.divergence_engine import probabilities
from markov.exceptions import InvalidParameterError, ShapeMismatchError

KL_FLOOR = 1e-12
DIVERGENT = 'divergent'


def log_kl(estimated, truth):
    """ log KL(truth || estimated), with the estimate floored at 1e-12 inside the log.

    Returns -inf when the divergence is zero.

    Examples:
    >>> log_kl([0.5, 0.5], [0.5, 0.5])
    -inf
    """
    estimated, truth = probabilities(estimated), probabilities(truth)
    if estimated.shape != truth.shape:
        raise ShapeMismatchError('Cannot compare distributions of shapes {} and {}.'.format(
            estimated.shape, truth.shape
        ))
    support = truth > 0
    kl = float(np.sum(truth[support] * (np.log(truth[support]) - np.log(np.maximum(estimated[support], KL_FLOOR)))))
    if kl <= 0:
        return -math.inf
    return math.log(kl)


def log_mse(estimates, truth):
    """ log of the mean squared error of ``estimates`` around ``truth``; -inf when exact. """
    estimates = np.asarray(estimates, dtype=float)
    if estimates.size == 0:
        raise InvalidParameterError('log_mse needs at least one estimate.')
    mse = float(np.mean((estimates - truth) ** 2))
    if mse <= 0:
        return -math.inf
    return math.log(mse)


def format_value(value):
    if isinstance(value, str):
        return value
    if value is None:
        return ''
    value = float(value)
    if math.isinf(value):
        return '-inf' if value < 0 else 'inf'
    return repr(value)


@dataclass(frozen=True)
class MetricRecord:
    """ One results.csv row; ``value`` is a float or the ``divergent`` marker. """
    task: str
    method: str
    seed: object
    metric: str
    value: object
    n_samples: object = ''
    alpha: object = ''
    gamma: object = ''
    lam: object = ''

    @property
    def divergent(self):
        return self.value == DIVERGENT

    def as_row(self):
        return {
            'task': self.task,
            'method': self.method,
            'seed': str(self.seed),
            'n_samples': str(self.n_samples),
            'alpha': format_value(self.alpha) if self.alpha != '' else '',
            'gamma': format_value(self.gamma) if self.gamma != '' else '',
            'lambda': format_value(self.lam) if self.lam != '' else '',
            'metric': self.metric,
            'value': format_value(self.value),
        }


def records_frame(records):
    return pd.DataFrame([record.as_row() for record in records], columns=list(settings.RESULTS_CSV_HEADER))


def write_results(records, path):
    records_frame(records).to_csv(path, index=False)
    return path


def summarize(records):
    """ Mean, std and count of every (task, method, cell, metric) over seeds.

    Divergent cells and the seed-aggregated rows are left out; ``divergent`` counts
    how many seeds of a cell diverged.
    """
    frame = records_frame(records)
    keys = [column for column in settings.RESULTS_CSV_HEADER if column not in ('seed', 'value')]
    per_seed = frame[frame['seed'] != 'all'].copy()
    per_seed['divergent'] = per_seed['value'] == DIVERGENT
    per_seed['value'] = pd.to_numeric(per_seed['value'].where(~per_seed['divergent']), errors='coerce')
    summary = per_seed.groupby(keys, sort=False).agg(
        mean=('value', 'mean'),
        std=('value', 'std'),
        count=('value', 'count'),
        divergent=('divergent', 'sum'),
    )
    return summary.reset_index()


def write_summary(records, path):
    summarize(records).to_csv(path, index=False)
    return path
