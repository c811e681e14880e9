from experiments.commands import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Off-policy evaluation on the taxi grid world over behavior mixtures, discounts and data sizes.'
    task = 'ope-taxi'
    tasks = ('ope-taxi',)
