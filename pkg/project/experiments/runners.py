"""
Experiment runners: offline PageRank, taxi off-policy evaluation and the ablations.

Every runner fans the configured number of seeds out over a process pool (or runs them
inline with jobs = 1) and merges the per-seed records in seed order, so the same
configuration always produces the same rows.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import django
import numpy as np
import pandas as pd

from baselines.importance_sampling_engine import wis_estimate
from baselines.model_based_engine import behavior_clone, fit_model, model_based_stationary, model_based_value
from environments.graph_engine import generate_ba, load_edge_list, pagerank_chain, random_walk_dataset
from environments.taxi_engine import taxi_mdp
from estimator.exact_solver import exact_ratio
from estimator.exceptions import NumericalDivergenceError
from estimator.readouts import estimate_pagerank, estimate_policy_value, record_values
from estimator.training_engine import matched_steps, train, uses_data_normalizer
from experiments.metrics import DIVERGENT, MetricRecord, log_kl, log_mse
from markov.policy_engine import mix_policies, q_learning
from markov.sampling_engine import sample_trajectories
from markov.stationary_engine import policy_value, stationary_oracle
from markov.structures import Distribution, Policy

logger = logging.getLogger(__name__)


def child_seeds(base_seed, seed_index, n_streams=3):
    """ Integer seeds of the independent streams (environment, data, training) of one run seed. """
    sequence = np.random.SeedSequence(base_seed, spawn_key=(seed_index,))
    return [int(value) for value in sequence.generate_state(n_streams)]


@dataclass
class SeedResult:
    seed: int
    records: list = field(default_factory=list)
    traces: list = field(default_factory=list)

    def add_trace(self, trace, **cell):
        trace = trace.copy()
        for position, (key, value) in enumerate(cell.items()):
            trace.insert(position, key, value)
        self.traces.append(trace)

    def trace_frame(self):
        if not self.traces:
            return None
        return pd.concat(self.traces, ignore_index=True)


@dataclass
class RunResult:
    """ Records of a run in seed order, plus the loss traces of every seed. """
    task: str
    records: list
    traces: dict

    @classmethod
    def merge(cls, task, seed_results, extra_records=()):
        records = [record for result in seed_results for record in result.records]
        traces = {result.seed: result.trace_frame() for result in seed_results}
        return cls(task, records + list(extra_records), {seed: frame for seed, frame in traces.items()
                                                         if frame is not None})


def run_seeds(seed_function, n_seeds, jobs=1):
    """ Maps ``seed_function`` over seed indices, returning results in seed order. """
    seeds = range(n_seeds)
    if jobs <= 1 or n_seeds <= 1:
        return [seed_function(seed) for seed in seeds]
    with ProcessPoolExecutor(max_workers=jobs, initializer=django.setup) as executor:
        return list(executor.map(seed_function, seeds))


def train_or_mark(cfg, dataset, policy, result, **cell):
    """ Trains GenDICE; returns the pair table or None when training diverged. """
    try:
        trained = train(cfg, dataset, policy)
    except NumericalDivergenceError as error:
        logger.warning('Training diverged for %s: %s', cell, error)
        return None
    if cfg.steps:
        result.add_trace(trained.trace, **cell)
    return trained.tau_table(dataset.n_pairs)


# Offline PageRank

def build_graph(environment, seed):
    if environment['graph'] == 'file':
        return load_edge_list(environment['edge_list'], directed=environment['directed'])
    return generate_ba(environment['n_vertices'], environment['ba_m'], environment['ba_m0'], seed=seed,
                       weighted=environment['weighted'])


def pagerank_problem(environment, graph_seed):
    """ The PageRank chain of the configured graph and its exact stationary distribution. """
    chain = pagerank_chain(build_graph(environment, graph_seed), environment['eta'])
    return chain, stationary_oracle(chain)


def opr_seed(config, seed_index):
    cfg = config.gendice
    baselines = config.baselines
    graph_seed, data_seed, train_seed = child_seeds(cfg.seed, seed_index)
    chain, truth = pagerank_problem(config.environment, graph_seed)
    policy = Policy.uniform(chain.n_states, 1)
    result = SeedResult(seed_index)

    def record(method, n_samples, distribution, lam=''):
        value = log_kl(distribution, truth)
        result.records.append(MetricRecord(config.task, method, seed_index, 'log_kl', value, n_samples=n_samples,
                                           gamma=cfg.gamma, lam=lam))

    for n_samples in config.environment['sample_sizes']:
        dataset = random_walk_dataset(chain, n_samples, seed=data_seed)
        if baselines['exact']:
            record('gendice-exact', n_samples, estimate_pagerank(exact_ratio(dataset, policy, cfg.gamma), dataset))
        if baselines['trained']:
            trained_cfg = cfg.with_changes(seed=train_seed)
            trained = train(trained_cfg, dataset, policy)
            result.add_trace(trained.trace, method='gendice', n_samples=n_samples)
            tau = trained.tau_table(dataset.n_pairs)
            record('gendice', n_samples, estimate_pagerank(tau, dataset), trained_cfg.penalty)
        if baselines['trained'] and baselines['self_normalized']:
            self_cfg = cfg.with_changes(seed=train_seed, normalization='self')
            if baselines['equal_budget'] and uses_data_normalizer(self_cfg):
                self_cfg = self_cfg.with_changes(steps=matched_steps(self_cfg, len(dataset)))
                logger.info('Self-normalised run at %d samples gets %d steps.', n_samples, self_cfg.steps)
            trained = train(self_cfg, dataset, policy)
            result.add_trace(trained.trace, method='gendice-self', n_samples=n_samples)
            record('gendice-self', n_samples, estimate_pagerank(trained.tau_table(dataset.n_pairs), dataset))
        if baselines['model_based']:
            model = fit_model(dataset, baselines['smoothing'])
            record('model-based', n_samples, model_based_stationary(model, policy, cfg.gamma, chain.mu0))
    logger.info('Offline PageRank seed %d finished.', seed_index)
    return result


def run_opr(config):
    """ Sample-efficiency sweep of offline PageRank estimation, log KL to the true PageRank. """
    logger.info('Offline PageRank: %d seeds over sample sizes %s.', config.n_seeds,
                config.environment['sample_sizes'])
    results = run_seeds(partial(opr_seed, config), config.n_seeds, config.jobs)
    return RunResult.merge(config.task, results)


# Taxi off-policy evaluation

@dataclass(frozen=True)
class TaxiProblem:
    """ Per-run shared state: one MDP per discount, the policies and their true values. """
    mdps: dict
    target: Policy
    base: Policy
    truths: dict


def taxi_problem(environment):
    mdp = taxi_mdp(environment['grid'], environment['appear_probability'], environment['dropoff_reward'],
                   destination=environment['destination'])
    seed = environment['policy_seed']
    _, target = q_learning(mdp, environment['target_episodes'], seed=seed)
    _, base = q_learning(mdp, environment['base_episodes'], seed=seed)
    mdps, truths = {}, {}
    for gamma in environment['gammas']:
        mdps[gamma] = taxi_mdp(environment['grid'], environment['appear_probability'],
                               environment['dropoff_reward'], gamma, environment['destination'])
        truths[gamma] = policy_value(mdps[gamma], target, gamma)
        logger.info('Taxi target value at gamma %s: %.6f.', gamma, truths[gamma])
    return TaxiProblem(mdps, target, base, truths)


def sample_label(count, length):
    return '{}x{}'.format(count, length)


def taxi_cells(environment):
    for alpha in environment['alphas']:
        for gamma in environment['gammas']:
            for length in environment['trajectory_lengths']:
                for count in environment['trajectory_counts']:
                    yield alpha, gamma, length, count


def ope_seed(config, problem, seed_index):
    cfg = config.gendice
    baselines = config.baselines
    _, data_seed, train_seed = child_seeds(cfg.seed, seed_index)
    result = SeedResult(seed_index)
    for cell_index, (alpha, gamma, length, count) in enumerate(taxi_cells(config.environment)):
        mdp = problem.mdps[gamma]
        behavior = mix_policies(problem.base, problem.target, alpha)
        dataset = sample_trajectories(mdp, behavior, count, length, seed=data_seed + cell_index)
        label = sample_label(count, length)
        initial = dataset.initial_distribution()
        estimates = {}
        if baselines['exact']:
            estimates['gendice-exact'] = estimate_policy_value(exact_ratio(dataset, problem.target, gamma), dataset)
        if baselines['trained']:
            trained_cfg = cfg.with_changes(gamma=gamma, seed=train_seed)
            tau = train_or_mark(trained_cfg, dataset, problem.target, result, method='gendice', n_samples=label,
                                alpha=alpha, gamma=gamma)
            estimates['gendice'] = DIVERGENT if tau is None else estimate_policy_value(tau, dataset)
        if baselines['model_based']:
            model = fit_model(dataset, baselines['smoothing'])
            estimates['model-based'] = model_based_value(model, problem.target, gamma, initial)
        if baselines['wis']:
            estimates['wis'] = wis_estimate(dataset, problem.target, behavior_clone(dataset), gamma,
                                            baselines['wis_weighting'])
        for method, value in estimates.items():
            result.records.append(MetricRecord(config.task, method, seed_index, 'estimate', value,
                                               n_samples=label, alpha=alpha, gamma=gamma))
    logger.info('Taxi seed %d finished.', seed_index)
    return result


def log_mse_records(task, records, truths):
    """ One log MSE row per (method, cell) over the non-divergent seeds, seed = all. """
    cells = {}
    for record in records:
        cells.setdefault((record.method, record.n_samples, record.alpha, record.gamma), []).append(record.value)
    rows = []
    for (method, n_samples, alpha, gamma), values in cells.items():
        finite = [value for value in values if value != DIVERGENT]
        value = log_mse(finite, truths[gamma]) if finite else DIVERGENT
        rows.append(MetricRecord(task, method, 'all', 'log_mse', value, n_samples=n_samples, alpha=alpha,
                                 gamma=gamma))
    for gamma, truth in truths.items():
        rows.append(MetricRecord(task, 'oracle', 'all', 'value', truth, gamma=gamma))
    return rows


def run_ope_taxi(config):
    """ Taxi policy evaluation sweep over behavior mixtures, discounts and data sizes. """
    problem = taxi_problem(config.environment)
    results = run_seeds(partial(ope_seed, config, problem), config.n_seeds, config.jobs)
    records = [record for result in results for record in result.records]
    return RunResult.merge(config.task, results, log_mse_records(config.task, records, problem.truths))


# Ablations on offline PageRank

ABLATION_FACTORS = {
    'ablation-lambda': 'lambda',
    'ablation-divergence': 'divergence',
    'ablation-activation': 'activation',
    'ablation-penalty': 'penalty',
}


def ablation_variants(factor, cfg, ablation):
    """ (method label, config) for each level of ``factor``, all else at ``cfg``. """
    if factor == 'lambda':
        return [('gendice', cfg.with_changes(lam=lam)) for lam in ablation['lambdas']]
    if factor == 'divergence':
        return [('gendice-' + name, cfg.with_changes(divergence=name)) for name in ablation['divergences']]
    if factor == 'activation':
        return [('gendice-' + head, cfg.with_changes(positive_head=head)) for head in ablation['activations']]
    if factor == 'penalty':
        return [('gendice-' + mode, cfg.with_changes(normalization=mode)) for mode in ('penalty', 'none')]
    raise ValueError('Unknown ablation factor {!r}.'.format(factor))


def ablation_seed(config, factor, seed_index):
    cfg = config.gendice
    graph_seed, data_seed, train_seed = child_seeds(cfg.seed, seed_index)
    chain, truth = pagerank_problem(config.environment, graph_seed)
    policy = Policy.uniform(chain.n_states, 1)
    n_samples = config.ablation['n_samples']
    dataset = random_walk_dataset(chain, n_samples, seed=data_seed)
    result = SeedResult(seed_index)
    for method, variant in ablation_variants(factor, cfg.with_changes(seed=train_seed), config.ablation):
        tau = train_or_mark(variant, dataset, policy, result, method=method, n_samples=n_samples,
                            **{'lambda': variant.penalty})
        if tau is None:
            values = {'log_kl': DIVERGENT, 'mean_tau': DIVERGENT}
        else:
            mean_tau = float(record_values(tau, dataset).mean())
            # A fully collapsed ratio carries no distribution; score it as uniform.
            distribution = estimate_pagerank(tau, dataset) if mean_tau > 0 else Distribution.uniform(len(truth))
            values = {'log_kl': log_kl(distribution, truth), 'mean_tau': mean_tau}
        for metric, value in values.items():
            result.records.append(MetricRecord(config.task, method, seed_index, metric, value, n_samples=n_samples,
                                               gamma=variant.gamma, lam=variant.penalty))
    logger.info('Ablation %s seed %d finished.', factor, seed_index)
    return result


def run_ablation(config):
    """ Sweeps one factor of the estimator on offline PageRank, recording log KL and mean tau. """
    factor = ABLATION_FACTORS[config.task]
    results = run_seeds(partial(ablation_seed, config, factor), config.n_seeds, config.jobs)
    return RunResult.merge(config.task, results)


RUNNERS = {
    'opr': run_opr,
    'ope-taxi': run_ope_taxi,
}
RUNNERS.update({task: run_ablation for task in ABLATION_FACTORS})


def run_experiment(config):
    return RUNNERS[config.task](config)
