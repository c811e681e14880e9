"""
Run configuration: INI files with [experiment], [environment], [gendice], [baselines]
and, for ablations, [ablation] sections.

Every section is validated by a form from experiments.forms; keys missing from the file
take their values from the settings defaults. The fully resolved configuration can be
written back next to the results.
"""
import configparser
import logging
import os
from dataclasses import dataclass

from django.conf import settings

from estimator.saddle import GenDiceConfig
from experiments.exceptions import ConfigurationError
from experiments.forms import (
    ABLATION_TASKS, OPE_TASKS, AblationForm, BaselinesForm, ExperimentForm, GenDiceForm, GraphEnvironmentForm,
    TaxiEnvironmentForm,
)

logger = logging.getLogger(__name__)

RESOLVED_CONFIG_NAME = 'resolved.cfg'


def serialize(value):
    if value is None:
        return ''
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, (list, tuple)):
        return ', '.join(serialize(item) for item in value)
    return str(value)


def section_forms(task):
    environment = TaxiEnvironmentForm if task in OPE_TASKS else GraphEnvironmentForm
    forms = {
        'experiment': ExperimentForm,
        'environment': environment,
        'gendice': GenDiceForm,
        'baselines': BaselinesForm,
    }
    if task in ABLATION_TASKS:
        forms['ablation'] = AblationForm
    return forms


def section_defaults(task):
    experiment = settings.EXPERIMENT_DEFAULTS
    if task in OPE_TASKS:
        environment = dict(settings.TAXI_DEFAULTS)
        environment.pop('gamma')
        environment.update(experiment['ope-taxi'])
    else:
        environment = dict(experiment['opr'])
    defaults = {
        'experiment': {
            'task': task,
            'n_seeds': experiment['n_seeds'],
            'jobs': experiment['jobs'],
            'write_traces': experiment['write_traces'],
        },
        'environment': environment,
        'gendice': dict(settings.GENDICE_DEFAULTS),
        'baselines': dict(settings.BASELINE_DEFAULTS),
    }
    if task in ABLATION_TASKS:
        defaults['ablation'] = dict(experiment['ablation'])
    return defaults


@dataclass(frozen=True)
class ExperimentConfig:
    """ A validated run configuration, one cleaned dict per section. """
    task: str
    sections: dict

    @property
    def experiment(self):
        return self.sections['experiment']

    @property
    def environment(self):
        return self.sections['environment']

    @property
    def baselines(self):
        return self.sections['baselines']

    @property
    def ablation(self):
        return self.sections.get('ablation', {})

    @property
    def gendice(self):
        return GenDiceConfig(**self.sections['gendice'])

    @property
    def n_seeds(self):
        return self.experiment['n_seeds']

    @property
    def jobs(self):
        return self.experiment['jobs']

    @property
    def write_traces(self):
        return self.experiment['write_traces']

    def resolved_parser(self):
        parser = configparser.ConfigParser(interpolation=None)
        for section, values in self.sections.items():
            parser[section] = {key: serialize(value) for key, value in values.items()}
        return parser

    def write_resolved(self, directory):
        path = os.path.join(directory, RESOLVED_CONFIG_NAME)
        with open(path, 'w') as config_file:
            self.resolved_parser().write(config_file)
        return path


def read_sections(path):
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as config_file:
            parser.read_file(config_file)
    except OSError as error:
        raise ConfigurationError('experiment', None, 'cannot read {}: {}'.format(path, error))
    except configparser.Error as error:
        raise ConfigurationError('experiment', None, 'malformed configuration file: {}'.format(error))
    return {section: dict(parser[section]) for section in parser.sections()}


def build_config(sections=None, task=None, default_task=None, **experiment_overrides):
    """ Validates raw string sections into an ExperimentConfig.

    Args:
        sections: {section: {key: raw value}} as read from a file; may be empty.
        task: Task forced by the caller, overriding the file.
        default_task: Task used when neither the caller nor the file names one.
        experiment_overrides: Values replacing [experiment] keys, e.g. n_seeds or jobs
            from the command line; None values are ignored.

    Returns: The ExperimentConfig.

    Raises:
        ConfigurationError: unknown sections or keys, or invalid values.
    """
    sections = {name: dict(values) for name, values in (sections or {}).items()}
    task = task or sections.get('experiment', {}).get('task') or default_task
    if task is None:
        raise ConfigurationError('experiment', 'task', 'no task given.')
    sections.setdefault('experiment', {})['task'] = task
    for key, value in experiment_overrides.items():
        if value is not None:
            sections['experiment'][key] = value

    forms = section_forms(task)
    unknown = set(sections) - set(forms)
    if unknown:
        raise ConfigurationError(sorted(unknown)[0], None, 'unknown section for task {}.'.format(task))

    defaults = section_defaults(task)
    cleaned = {}
    for name, form_class in forms.items():
        raw = sections.get(name, {})
        extra = set(raw) - set(form_class.base_fields)
        if extra:
            raise ConfigurationError(name, sorted(extra)[0], 'unknown key.')
        data = {key: serialize(value) for key, value in defaults[name].items()}
        data.update(raw)
        form = form_class(data)
        if not form.is_valid():
            field, messages = next(iter(form.errors.items()))
            raise ConfigurationError(name, None if field == '__all__' else field, ' '.join(messages))
        cleaned[name] = form.cleaned_data
    logger.debug('Resolved configuration for task %s.', task)
    return ExperimentConfig(task, cleaned)


def load_config(path=None, task=None, default_task=None, **experiment_overrides):
    sections = read_sections(path) if path else {}
    return build_config(sections, task, default_task, **experiment_overrides)
