from experiments.commands import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Offline PageRank: sample-efficiency sweep of stationary distribution estimates.'
    task = 'opr'
    tasks = ('opr',)
