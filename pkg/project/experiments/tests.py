import io
import math
import os
import tempfile
from unittest import skipUnless

import numpy as np
import pandas as pd
from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from experiments.config import build_config, load_config, read_sections
from experiments.exceptions import ConfigurationError
from experiments.metrics import DIVERGENT, MetricRecord, log_kl, log_mse, records_frame, summarize, write_results
from experiments.runners import child_seeds, run_ablation, run_experiment, run_ope_taxi, run_opr, run_seeds
from environments.taxi_engine import taxi_mdp
from markov.policy_engine import q_learning
from markov.stationary_engine import policy_value

FAST_GENDICE = {'steps': '30', 'batch_size': '64', 'lr_tau': '0.01', 'lr_f': '0.01', 'lr_u': '0.01'}


def small_opr_sections(**environment):
    values = {'graph': 'ba', 'n_vertices': '12', 'ba_m': '2', 'sample_sizes': '200, 400'}
    values.update(environment)
    return {
        'experiment': {'task': 'opr', 'n_seeds': '2'},
        'environment': values,
        'gendice': dict(FAST_GENDICE),
    }


def small_taxi_sections():
    return {
        'experiment': {'task': 'ope-taxi', 'n_seeds': '2'},
        'environment': {
            'grid': '2', 'alphas': '0.0, 1.0', 'gammas': '0.9, 1.0', 'trajectory_lengths': '20',
            'trajectory_counts': '5', 'target_episodes': '20', 'base_episodes': '5',
        },
        'gendice': dict(FAST_GENDICE),
        'baselines': {'trained': 'false'},
    }


def write_config(directory, text, name='run.cfg'):
    path = os.path.join(directory, name)
    with open(path, 'w') as config_file:
        config_file.write(text)
    return path


class LogKlTest(SimpleTestCase):
    def test_identical_distributions_give_sentinel(self):
        self.assertEqual(log_kl([0.2, 0.3, 0.5], [0.2, 0.3, 0.5]), -math.inf)

    def test_matches_direct_sum(self):
        expected = math.log(0.5 * math.log(0.5 / 0.7) + 0.5 * math.log(0.5 / 0.3))
        self.assertAlmostEqual(log_kl([0.7, 0.3], [0.5, 0.5]), expected, places=12)

    def test_estimate_floored_inside_log(self):
        expected = math.log(0.5 * math.log(0.5 / 1.0) + 0.5 * math.log(0.5 / 1e-12))
        self.assertAlmostEqual(log_kl([1.0, 0.0], [0.5, 0.5]), expected, places=10)

    def test_shape_mismatch(self):
        with self.assertRaises(ValueError):
            log_kl([1.0], [0.5, 0.5])


class LogMseTest(SimpleTestCase):
    def test_symmetric_errors(self):
        self.assertAlmostEqual(log_mse([1.0, 3.0], 2.0), 0.0)

    def test_exact_estimates_give_sentinel(self):
        self.assertEqual(log_mse([2.0, 2.0], 2.0), -math.inf)

    def test_single_estimate(self):
        self.assertAlmostEqual(log_mse([2.5], 2.0), math.log(0.25))

    def test_empty(self):
        with self.assertRaises(ValueError):
            log_mse([], 1.0)


class ResultsCsvTest(SimpleTestCase):
    def setUp(self):
        self.records = [
            MetricRecord('opr', 'gendice', 0, 'log_kl', -4.5, n_samples=100, gamma=1.0, lam=1.0),
            MetricRecord('opr', 'gendice', 1, 'log_kl', -5.5, n_samples=100, gamma=1.0, lam=1.0),
            MetricRecord('opr', 'gendice', 2, 'log_kl', DIVERGENT, n_samples=100, gamma=1.0, lam=1.0),
            MetricRecord('opr', 'model-based', 0, 'log_kl', -math.inf, n_samples=100, gamma=1.0),
        ]

    def test_header_is_stable(self):
        with tempfile.TemporaryDirectory() as directory:
            path = write_results(self.records, os.path.join(directory, 'results.csv'))
            with open(path) as results:
                header = results.readline().strip()
        self.assertEqual(header, 'task,method,seed,n_samples,alpha,gamma,lambda,metric,value')

    def test_sentinels_are_strings(self):
        frame = records_frame(self.records)
        self.assertEqual(frame['value'].tolist(), ['-4.5', '-5.5', 'divergent', '-inf'])
        self.assertEqual(frame.loc[3, 'lambda'], '')

    def test_summary_over_seeds(self):
        summary = summarize(self.records).set_index('method')
        self.assertAlmostEqual(summary.loc['gendice', 'mean'], -5.0)
        self.assertAlmostEqual(summary.loc['gendice', 'std'], math.sqrt(0.5))
        self.assertEqual(summary.loc['gendice', 'count'], 2)
        self.assertEqual(summary.loc['gendice', 'divergent'], 1)


class ConfigTest(SimpleTestCase):
    def test_defaults_fill_missing_keys(self):
        config = build_config({}, task='opr')
        self.assertEqual(config.n_seeds, settings.EXPERIMENT_DEFAULTS['n_seeds'])
        self.assertEqual(config.environment['sample_sizes'], settings.EXPERIMENT_DEFAULTS['opr']['sample_sizes'])
        self.assertEqual(config.gendice.lam, settings.GENDICE_DEFAULTS['lam'])
        self.assertIsNone(config.environment['ba_m0'])

    def test_command_line_overrides_file(self):
        config = build_config(small_opr_sections(), n_seeds=5, jobs=None)
        self.assertEqual((config.n_seeds, config.jobs), (5, 1))

    def test_unknown_key_names_section_and_field(self):
        sections = small_opr_sections()
        sections['gendice']['learning_rate'] = '0.1'
        with self.assertRaises(ConfigurationError) as context:
            build_config(sections)
        self.assertEqual((context.exception.section, context.exception.field), ('gendice', 'learning_rate'))

    def test_unknown_section(self):
        sections = small_opr_sections()
        sections['ablation'] = {'n_samples': '10'}
        with self.assertRaises(ConfigurationError) as context:
            build_config(sections)
        self.assertEqual(context.exception.section, 'ablation')

    def test_invalid_value(self):
        sections = small_opr_sections(eta='1.5')
        with self.assertRaises(ConfigurationError) as context:
            build_config(sections)
        self.assertEqual((context.exception.section, context.exception.field), ('environment', 'eta'))

    def test_bad_list_item(self):
        with self.assertRaises(ConfigurationError) as context:
            build_config(small_opr_sections(sample_sizes='100, many'))
        self.assertEqual(context.exception.field, 'sample_sizes')

    def test_file_graph_needs_edge_list(self):
        with self.assertRaises(ConfigurationError) as context:
            build_config(small_opr_sections(graph='file'))
        self.assertEqual(context.exception.field, 'edge_list')

    def test_penalty_needs_positive_lambda(self):
        sections = small_opr_sections()
        sections['gendice']['lam'] = '0'
        with self.assertRaises(ConfigurationError) as context:
            build_config(sections)
        self.assertEqual(context.exception.section, 'gendice')

    def test_wis_weighting_choice(self):
        self.assertEqual(build_config(small_taxi_sections()).baselines['wis_weighting'], 'normalized')
        sections = small_taxi_sections()
        sections['baselines']['wis_weighting'] = 'uniform'
        with self.assertRaises(ConfigurationError) as context:
            build_config(sections)
        self.assertEqual((context.exception.section, context.exception.field), ('baselines', 'wis_weighting'))

    def test_ablation_lists(self):
        sections = {'ablation': {'divergences': 'chi2, js', 'lambdas': '0.1, 5'}}
        config = build_config(sections, task='ablation-divergence')
        self.assertEqual(config.ablation['divergences'], ('chi2', 'js'))
        self.assertEqual(config.ablation['lambdas'], (0.1, 5.0))
        with self.assertRaises(ConfigurationError):
            build_config({'ablation': {'divergences': 'chi2, hellinger'}}, task='ablation-divergence')

    def test_resolved_file_reloads_to_same_config(self):
        config = build_config(small_taxi_sections())
        with tempfile.TemporaryDirectory() as directory:
            path = config.write_resolved(directory)
            self.assertEqual(os.path.basename(path), 'resolved.cfg')
            self.assertEqual(load_config(path).sections, config.sections)

    def test_malformed_file(self):
        with tempfile.TemporaryDirectory() as directory:
            path = write_config(directory, 'no section header\n')
            with self.assertRaises(ConfigurationError):
                read_sections(path)


class SeedsTest(SimpleTestCase):
    def test_child_seeds_are_distinct_and_stable(self):
        first = child_seeds(0, 0)
        self.assertEqual(first, child_seeds(0, 0))
        self.assertEqual(len(set(first + child_seeds(0, 1))), 6)

    def test_results_in_seed_order(self):
        self.assertEqual(run_seeds(lambda seed: seed * seed, 4), [0, 1, 4, 9])


class RunOprTest(SimpleTestCase):
    def test_two_node_graph_converges(self):
        with tempfile.TemporaryDirectory() as directory:
            edges = write_config(directory, '0 1\n1 0\n', name='edges.txt')
            sections = small_opr_sections(graph='file', edge_list=edges, sample_sizes='200000')
            sections['experiment']['n_seeds'] = '1'
            sections['baselines'] = {'trained': 'false'}
            result = run_opr(build_config(sections))
        values = {record.method: record.value for record in result.records}
        self.assertEqual(set(values), {'gendice-exact', 'model-based'})
        for value in values.values():
            self.assertLess(value, -10.0)

    def test_rows_per_seed_and_method(self):
        result = run_opr(build_config(small_opr_sections()))
        frame = records_frame(result.records)
        self.assertEqual(len(frame), 2 * 2 * 4)
        self.assertEqual(frame['seed'].unique().tolist(), ['0', '1'])
        self.assertEqual(set(frame['method']), {'gendice-exact', 'gendice', 'gendice-self', 'model-based'})
        self.assertTrue(np.isfinite(frame['value'].astype(float)).all())

    def test_data_normalised_self_run_gets_matched_steps(self):
        sections = small_opr_sections(sample_sizes='200')
        sections['gendice']['self_normalizer'] = 'data'
        counts = run_opr(build_config(sections)).traces[0].groupby('method').size()
        self.assertEqual(counts['gendice'], 30)
        self.assertEqual(counts['gendice-self'], 30 * 64 // (64 + 200))

        sections['baselines'] = {'equal_budget': 'false'}
        counts = run_opr(build_config(sections)).traces[0].groupby('method').size()
        self.assertEqual(counts['gendice-self'], 30)

    def test_same_config_gives_identical_rows(self):
        config = build_config(small_opr_sections())
        first, second = run_opr(config), run_opr(config)
        pd.testing.assert_frame_equal(records_frame(first.records), records_frame(second.records))
        pd.testing.assert_frame_equal(first.traces[1], second.traces[1])

    def test_traces_carry_cells(self):
        result = run_opr(build_config(small_opr_sections()))
        trace = result.traces[0]
        self.assertEqual(list(trace.columns), ['method', 'n_samples', 'step', 'J'])
        self.assertEqual(len(trace), 2 * 2 * 30)


class RunOpeTaxiTest(SimpleTestCase):
    def setUp(self):
        self.config = build_config(small_taxi_sections())
        self.result = run_ope_taxi(self.config)
        self.frame = records_frame(self.result.records)

    def test_estimates_per_seed_and_cell(self):
        estimates = self.frame[self.frame['metric'] == 'estimate']
        self.assertEqual(len(estimates), 2 * 2 * 2 * 3)
        self.assertEqual(set(estimates['method']), {'gendice-exact', 'model-based', 'wis'})
        self.assertEqual(set(estimates['n_samples']), {'5x20'})

    def test_log_mse_aggregates_seeds(self):
        log_mse_rows = self.frame[self.frame['metric'] == 'log_mse']
        self.assertEqual(len(log_mse_rows), 2 * 2 * 3)
        self.assertEqual(set(log_mse_rows['seed']), {'all'})

    def test_oracle_value_matches_target_policy(self):
        _, target = q_learning(taxi_mdp(2), 20, seed=0)
        mdp = taxi_mdp(2, gamma=0.9)
        oracle = self.frame[(self.frame['method'] == 'oracle') & (self.frame['gamma'] == '0.9')]
        self.assertAlmostEqual(float(oracle['value'].iloc[0]), policy_value(mdp, target, 0.9), places=10)

    def test_log_mse_recomputes_from_estimates(self):
        estimates = self.frame[(self.frame['metric'] == 'estimate') & (self.frame['method'] == 'wis')
                               & (self.frame['alpha'] == '1.0') & (self.frame['gamma'] == '1.0')]
        oracle = self.frame[(self.frame['method'] == 'oracle') & (self.frame['gamma'] == '1.0')]
        expected = log_mse(estimates['value'].astype(float), float(oracle['value'].iloc[0]))
        row = self.frame[(self.frame['metric'] == 'log_mse') & (self.frame['method'] == 'wis')
                         & (self.frame['alpha'] == '1.0') & (self.frame['gamma'] == '1.0')]
        self.assertAlmostEqual(float(row['value'].iloc[0]), expected, places=10)


class RunAblationTest(SimpleTestCase):
    def test_divergent_cell_is_recorded(self):
        sections = small_opr_sections()
        sections['experiment'] = {'task': 'ablation-divergence', 'n_seeds': '1'}
        sections['ablation'] = {'divergences': 'chi2, kl', 'n_samples': '200'}
        sections['gendice']['divergence_bound'] = '1e-3'
        frame = records_frame(run_ablation(build_config(sections)).records)
        kl = frame[frame['method'] == 'gendice-kl']
        self.assertEqual(set(kl['metric']), {'log_kl', 'mean_tau'})
        self.assertEqual(set(kl['value']), {'divergent'})
        self.assertEqual(set(frame['method']), {'gendice-chi2', 'gendice-kl'})

    def test_penalty_levels(self):
        sections = small_opr_sections()
        sections['experiment'] = {'task': 'ablation-penalty', 'n_seeds': '1'}
        sections['ablation'] = {'n_samples': '200'}
        frame = records_frame(run_experiment(build_config(sections)).records)
        self.assertEqual(set(frame['method']), {'gendice-penalty', 'gendice-none'})
        self.assertEqual(set(frame.loc[frame['method'] == 'gendice-none', 'lambda']), {'0.0'})

    def test_lambda_levels_fill_lambda_column(self):
        sections = small_opr_sections()
        sections['experiment'] = {'task': 'ablation-lambda', 'n_seeds': '1'}
        sections['ablation'] = {'lambdas': '0.1, 5', 'n_samples': '200'}
        frame = records_frame(run_experiment(build_config(sections)).records)
        self.assertEqual(set(frame['lambda']), {'0.1', '5.0'})


class CommandsTest(SimpleTestCase):
    def test_opr_writes_outputs(self):
        with tempfile.TemporaryDirectory() as directory:
            path = write_config(directory, '\n'.join([
                '[experiment]', 'n_seeds = 3', 'write_traces = true',
                '[environment]', 'n_vertices = 12', 'ba_m = 2', 'sample_sizes = 200',
                '[gendice]', 'steps = 10', 'batch_size = 32',
            ]))
            out = os.path.join(directory, 'out')
            call_command('opr', '--config', path, '--out', out, '--seeds', '1', stdout=io.StringIO())
            self.assertEqual(sorted(os.listdir(out)), ['resolved.cfg', 'results.csv', 'summary.csv', 'trace_0.csv'])
            self.assertEqual(len(pd.read_csv(os.path.join(out, 'results.csv'))), 4)
            self.assertEqual(read_sections(os.path.join(out, 'resolved.cfg'))['experiment']['n_seeds'], '1')

    def test_configuration_error_exit_code(self):
        with tempfile.TemporaryDirectory() as directory:
            path = write_config(directory, '[gendice]\nlearning_rate = 0.1\n')
            with self.assertRaises(CommandError) as context:
                call_command('opr', '--config', path, '--out', directory)
        self.assertEqual(context.exception.returncode, 2)

    def test_wrong_task_for_command(self):
        with tempfile.TemporaryDirectory() as directory:
            path = write_config(directory, '[experiment]\ntask = opr\n')
            with self.assertRaises(CommandError) as context:
                call_command('ablate', '--config', path, '--out', directory)
        self.assertEqual(context.exception.returncode, 2)

    def test_divergence_exit_code(self):
        with tempfile.TemporaryDirectory() as directory:
            path = write_config(directory, '\n'.join([
                '[environment]', 'n_vertices = 12', 'ba_m = 2', 'sample_sizes = 200',
                '[gendice]', 'divergence = kl', 'divergence_bound = 1e-3', 'steps = 5',
            ]))
            with self.assertRaises(CommandError) as context:
                call_command('opr', '--config', path, '--out', directory, '--seeds', '1')
        self.assertEqual(context.exception.returncode, 3)


@skipUnless(settings.RUN_SLOW_TESTS, 'set GENDICE_SLOW_TESTS=1 to run the full-size reproductions')
class FullSizeReproductionTest(SimpleTestCase):
    """ Twenty-seed runs at the sizes of the published experiments, with the shipped configs. """
    gendice = {
        'optimizer': 'adaptive', 'full_batch': 'false', 'batch_size': '512', 'steps': '20000',
        'lr_tau': '0.005', 'lr_f': '0.005', 'lr_u': '0.005', 'tail_average': '0.5',
    }
    # Full-batch steps without averaging, so the unpenalised scale drift shows in the last iterate.
    scale_drift_gendice = {
        'optimizer': 'adaptive', 'full_batch': 'true', 'steps': '5000',
        'lr_tau': '0.01', 'lr_f': '0.01', 'lr_u': '0.01',
    }

    def opr_summary(self, sample_sizes, **baselines):
        gendice = dict(self.gendice, self_normalizer='data')
        config = build_config({
            'experiment': {'task': 'opr', 'n_seeds': '20', 'jobs': str(os.cpu_count() or 1)},
            'environment': {'sample_sizes': sample_sizes},
            'gendice': gendice,
            'baselines': baselines,
        })
        return summarize(run_opr(config).records).set_index(['method', 'n_samples'])['mean']

    def test_ba_100_regularization_beats_self_normalization(self):
        means = self.opr_summary('10000', exact='false', model_based='false')
        self.assertLessEqual(means[('gendice', '10000')], -4.0)
        self.assertLess(means[('gendice', '10000')], means[('gendice-self', '10000')])

    def test_gendice_keeps_up_with_model_based_with_little_data(self):
        means = self.opr_summary('200, 500, 1000, 2000', exact='false', self_normalized='false')
        for n_samples in ('200', '500', '1000', '2000'):
            self.assertLess(means[('gendice', n_samples)], means[('model-based', n_samples)] + 0.1)

    def test_taxi_error_shrinks_with_trajectory_length(self):
        config = build_config({
            'experiment': {'task': 'ope-taxi', 'n_seeds': '20', 'jobs': str(os.cpu_count() or 1)},
            'environment': {'alphas': '0.33', 'gammas': '1.0', 'trajectory_lengths': '200, 2000',
                            'trajectory_counts': '50'},
            'baselines': {'trained': 'false', 'wis': 'false', 'model_based': 'false'},
        })
        frame = records_frame(run_ope_taxi(config).records)
        log_mse_rows = frame[frame['metric'] == 'log_mse'].set_index('n_samples')['value'].astype(float)
        self.assertLess(log_mse_rows['50x2000'], log_mse_rows['50x200'])

        truth = float(frame.loc[frame['method'] == 'oracle', 'value'].iloc[0])
        estimates = frame[(frame['metric'] == 'estimate') & (frame['n_samples'] == '50x2000')]
        errors = (estimates['value'].astype(float) - truth).abs()
        self.assertEqual(len(errors), 20)
        self.assertLessEqual(errors.max(), 0.05 * abs(truth))

    def ablation_means(self, task, gendice=None, **ablation):
        config = build_config({
            'experiment': {'task': task, 'n_seeds': '20', 'jobs': str(os.cpu_count() or 1)},
            'gendice': dict(gendice or self.gendice),
            'ablation': ablation,
        })
        frame = summarize(run_ablation(config).records)
        return frame.set_index(['method', 'lambda', 'metric'])['mean']

    def test_lambda_results_are_consistent(self):
        means = self.ablation_means('ablation-lambda', lambdas='0.1, 1, 5')
        log_kls = [means[('gendice', lam, 'log_kl')] for lam in ('0.1', '1.0', '5.0')]
        self.assertLess(max(log_kls) - min(log_kls), 0.5)

    def test_kl_divergence_is_worst(self):
        means = self.ablation_means('ablation-divergence').reset_index()
        log_kls = means[means['metric'] == 'log_kl'].set_index('method')['mean']
        self.assertLessEqual(log_kls['gendice-chi2'], log_kls['gendice-js'])
        self.assertLess(log_kls['gendice-js'], log_kls['gendice-kl'])

    def test_penalty_keeps_the_ratio_normalised(self):
        means = self.ablation_means('ablation-penalty', self.scale_drift_gendice).reset_index()
        mean_tau = means[means['metric'] == 'mean_tau'].set_index('method')['mean']
        self.assertTrue(0.9 <= mean_tau['gendice-penalty'] <= 1.1)
        self.assertFalse(0.5 <= mean_tau['gendice-none'] <= 1.5)
