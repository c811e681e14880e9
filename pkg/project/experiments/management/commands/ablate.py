from experiments.commands import ExperimentCommand
from experiments.runners import ABLATION_FACTORS

FACTOR_TASKS = {factor: task for task, factor in ABLATION_FACTORS.items()}


class Command(ExperimentCommand):
    help = 'Ablations of the estimator on offline PageRank: lambda, divergence, activation or penalty.'
    task = 'ablation-lambda'
    tasks = tuple(ABLATION_FACTORS)

    def add_arguments(self, parser):
        super(Command, self).add_arguments(parser)
        parser.add_argument('--factor', choices=sorted(FACTOR_TASKS),
                            help='The factor swept; defaults to the task in the file, else lambda.')

    def task_for(self, options):
        factor = options.get('factor')
        return FACTOR_TASKS[factor] if factor else None
