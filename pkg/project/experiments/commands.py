"""
Shared plumbing of the experiment management commands.

Exit codes: 0 on success, 2 for configuration errors, 3 when the numerics diverge.
"""
import os

from django.core.management.base import BaseCommand, CommandError

from environments.exceptions import EdgeListFormatError
from estimator.exceptions import NumericalDivergenceError
from estimator.readouts import save_trace
from experiments.config import load_config
from experiments.exceptions import ConfigurationError
from experiments.metrics import write_results, write_summary
from experiments.runners import run_experiment
from markov.exceptions import InvalidParameterError, StationaryConvergenceError

CONFIG_ERROR_RETURNCODE = 2
DIVERGENCE_RETURNCODE = 3

RESULTS_NAME = 'results.csv'
SUMMARY_NAME = 'summary.csv'
TRACE_NAME = 'trace_{}.csv'


class ExperimentCommand(BaseCommand):
    # Default task, and every task the command accepts from a configuration file.
    task = None
    tasks = ()

    def add_arguments(self, parser):
        parser.add_argument('--config', help='INI run configuration; settings defaults fill missing keys.')
        parser.add_argument('--out', required=True, help='Output directory for the CSV files.')
        parser.add_argument('--seeds', type=int, help='Number of seeds, overrides the file.')
        parser.add_argument('--jobs', type=int, help='Worker processes, overrides the file.')

    def task_for(self, options):
        """ The task requested on the command line, if any. """
        return None

    def handle(self, *args, **options):
        try:
            requested = self.task_for(options)
            config = load_config(options['config'], requested, self.task, n_seeds=options['seeds'],
                                 jobs=options['jobs'])
            if config.task not in self.tasks:
                raise ConfigurationError('experiment', 'task', '{} cannot run task {}.'.format(
                    self.__module__.rsplit('.', 1)[-1], config.task
                ))
            os.makedirs(options['out'], exist_ok=True)
            config.write_resolved(options['out'])
            result = run_experiment(config)
        except (ConfigurationError, EdgeListFormatError, InvalidParameterError, OSError) as error:
            raise CommandError(str(error), returncode=CONFIG_ERROR_RETURNCODE)
        except (NumericalDivergenceError, StationaryConvergenceError) as error:
            raise CommandError(str(error), returncode=DIVERGENCE_RETURNCODE)

        out = options['out']
        write_results(result.records, os.path.join(out, RESULTS_NAME))
        write_summary(result.records, os.path.join(out, SUMMARY_NAME))
        if config.write_traces:
            for seed, trace in result.traces.items():
                save_trace(trace, os.path.join(out, TRACE_NAME.format(seed)))
        message = 'Wrote {} rows for {} to {}.'.format(len(result.records), config.task, out)
        self.stdout.write(self.style.SUCCESS(message))
