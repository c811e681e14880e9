from django import forms
from django.core.exceptions import ValidationError

from baselines.importance_sampling_engine import WEIGHTINGS
from divergences.divergence_engine import DIVERGENCES
from estimator.saddle import NORMALIZATIONS, OPTIMIZERS, PARAMETERIZATIONS, SELF_NORMALIZERS, GenDiceConfig
from markov.exceptions import InvalidParameterError
from mlp.mlp_engine import POSITIVE_HEADS

OPR_TASKS = ('opr',)
OPE_TASKS = ('ope-taxi',)
ABLATION_TASKS = ('ablation-lambda', 'ablation-divergence', 'ablation-activation', 'ablation-penalty')
TASKS = OPR_TASKS + OPE_TASKS + ABLATION_TASKS


def choices(values):
    return [(value, value) for value in values]


class ListField(forms.Field):
    """ A comma separated list in a config file, cleaned to a tuple. """
    item_type = str

    def __init__(self, min_value=None, max_value=None, allowed=None, **kwargs):
        self.min_value = min_value
        self.max_value = max_value
        self.allowed = allowed
        super(ListField, self).__init__(**kwargs)

    def to_python(self, value):
        if isinstance(value, (list, tuple)):
            items = value
        else:
            items = [item.strip() for item in str(value or '').split(',') if item.strip()]
        try:
            return tuple(self.item_type(item) for item in items)
        except ValueError:
            raise ValidationError('Enter a comma separated list of {} values.'.format(self.item_type.__name__),
                                  code='invalid')

    def validate(self, value):
        super(ListField, self).validate(value)
        for item in value:
            if self.min_value is not None and item < self.min_value:
                raise ValidationError('{} is below the minimum {}.'.format(item, self.min_value), code='min_value')
            if self.max_value is not None and item > self.max_value:
                raise ValidationError('{} is above the maximum {}.'.format(item, self.max_value), code='max_value')
            if self.allowed is not None and item not in self.allowed:
                raise ValidationError('{!r} is not one of {}.'.format(item, ', '.join(self.allowed)), code='invalid')


class IntegerListField(ListField):
    item_type = int


class FloatListField(ListField):
    item_type = float


class ExperimentForm(forms.Form):
    task = forms.ChoiceField(choices=choices(TASKS))
    n_seeds = forms.IntegerField(min_value=1)
    jobs = forms.IntegerField(min_value=1)
    write_traces = forms.BooleanField(required=False)


class GraphEnvironmentForm(forms.Form):
    graph = forms.ChoiceField(choices=choices(('ba', 'file')))
    edge_list = forms.CharField(required=False)
    directed = forms.BooleanField(required=False)
    n_vertices = forms.IntegerField(min_value=2)
    ba_m = forms.IntegerField(min_value=1)
    ba_m0 = forms.IntegerField(min_value=2, required=False)
    weighted = forms.BooleanField(required=False)
    eta = forms.FloatField(min_value=0.0, max_value=0.999999)
    sample_sizes = IntegerListField(min_value=1)

    def clean(self):
        cleaned_data = super(GraphEnvironmentForm, self).clean()
        if cleaned_data.get('graph') == 'file' and not cleaned_data.get('edge_list'):
            self.add_error('edge_list', 'An edge list path is required when graph = file.')
        return cleaned_data


class TaxiEnvironmentForm(forms.Form):
    grid = forms.IntegerField(min_value=2)
    appear_probability = forms.FloatField(min_value=0.0, max_value=1.0)
    dropoff_reward = forms.FloatField()
    destination = forms.IntegerField(min_value=0, required=False)
    alphas = FloatListField(min_value=0.0, max_value=1.0)
    gammas = FloatListField(min_value=1e-9, max_value=1.0)
    trajectory_lengths = IntegerListField(min_value=1)
    trajectory_counts = IntegerListField(min_value=1)
    target_episodes = forms.IntegerField(min_value=0)
    base_episodes = forms.IntegerField(min_value=0)
    policy_seed = forms.IntegerField(min_value=0)


class AblationForm(forms.Form):
    lambdas = FloatListField(min_value=1e-12)
    divergences = ListField(allowed=tuple(DIVERGENCES))
    activations = ListField(allowed=POSITIVE_HEADS)
    n_samples = forms.IntegerField(min_value=1)


class GenDiceForm(forms.Form):
    lam = forms.FloatField(min_value=0.0)
    gamma = forms.FloatField(min_value=1e-9, max_value=1.0)
    divergence = forms.ChoiceField(choices=choices(DIVERGENCES))
    lr_tau = forms.FloatField()
    lr_f = forms.FloatField()
    lr_u = forms.FloatField()
    batch_size = forms.IntegerField(min_value=1)
    steps = forms.IntegerField(min_value=0)
    positive_head = forms.ChoiceField(choices=choices(POSITIVE_HEADS))
    optimizer = forms.ChoiceField(choices=choices(OPTIMIZERS))
    adaptive_decay = forms.FloatField(min_value=0.0, max_value=1.0)
    adaptive_epsilon = forms.FloatField(min_value=0.0)
    full_batch = forms.BooleanField(required=False)
    normalization = forms.ChoiceField(choices=choices(NORMALIZATIONS))
    self_normalizer = forms.ChoiceField(choices=choices(SELF_NORMALIZERS))
    parameterization = forms.ChoiceField(choices=choices(PARAMETERIZATIONS))
    hidden_sizes = IntegerListField(min_value=1)
    seed = forms.IntegerField(min_value=0)
    divergence_bound = forms.FloatField(min_value=0.0)
    tail_average = forms.FloatField(min_value=0.0, max_value=0.999)

    def clean(self):
        cleaned_data = super(GenDiceForm, self).clean()
        if not self.errors:
            try:
                GenDiceConfig(**cleaned_data)
            except InvalidParameterError as error:
                raise ValidationError(str(error))
        return cleaned_data


class BaselinesForm(forms.Form):
    exact = forms.BooleanField(required=False)
    trained = forms.BooleanField(required=False)
    self_normalized = forms.BooleanField(required=False)
    equal_budget = forms.BooleanField(required=False)
    model_based = forms.BooleanField(required=False)
    wis = forms.BooleanField(required=False)
    wis_weighting = forms.ChoiceField(choices=choices(WEIGHTINGS))
    smoothing = forms.FloatField(min_value=0.0)
