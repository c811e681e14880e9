"""
Django settings for the gendice project.

The project has no web surface: Django provides settings, logging, form based
validation of run configurations, management commands and the test runner.

For more information on this file, see
https://docs.djangoproject.com/en/5.1/topics/settings/
"""

# Build paths inside the project like this: os.path.join(BASE_DIR, ...)
import os

BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

SECRET_KEY = os.environ.get('GENDICE_SECRET_KEY', 'gendice-local-only-not-a-secret')

DEBUG = False

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = (
    'markov',
    'environments',
    'divergences',
    'mlp',
    'estimator',
    'baselines',
    'experiments',
)

# No ORM models anywhere in the project.
DATABASES = {}

USE_TZ = True

TIME_ZONE = 'UTC'


# Logging

GENDICE_LOG_LEVEL = os.environ.get('GENDICE_LOG_LEVEL', 'INFO')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '%(asctime)s %(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'loggers': {
        app: {
            'handlers': ['console'],
            'level': GENDICE_LOG_LEVEL,
            'propagate': False,
        }
        for app in INSTALLED_APPS
    },
}


# Markov chain oracles and policy construction

MARKOV_DEFAULTS = {
    'power_iteration_tol': 1e-10,
    'power_iteration_max_iter': 100000,
    'support_tol': 1e-12,
    'q_learning_lr': 0.1,
    'q_learning_epsilon': 0.1,
    # Multiplicative per-episode decay of the exploration rate, floored below.
    'q_learning_epsilon_decay': 0.995,
    'q_learning_epsilon_floor': 0.01,
    'q_learning_episode_length': 100,
    # Returned policies are (1 - softening) * greedy + softening * uniform.
    'q_learning_softening': 0.1,
    # One Q-learning "iteration" is one training episode.
    'q_learning_discount': 0.99,
}


# Taxi domain

TAXI_DEFAULTS = {
    'grid': 5,
    'appear_probability': 0.05,
    'dropoff_reward': 1.0,
    'gamma': 0.99,
    # Drop off cell for every passenger; None sends each to the opposite corner.
    'destination': None,
}


# GenDICE training

GENDICE_DEFAULTS = {
    'lam': 1.0,
    'gamma': 1.0,
    'divergence': 'chi2',
    'lr_tau': 0.001,
    'lr_f': 0.001,
    'lr_u': 0.001,
    'batch_size': 2048,
    'steps': 3000,
    'positive_head': 'square',
    'optimizer': 'sgd',
    # RMSProp-style scaling used when optimizer = 'adaptive'.
    'adaptive_decay': 0.9,
    'adaptive_epsilon': 1e-8,
    'full_batch': False,
    # 'penalty' (lambda term), 'self' (division by the mean tau) or 'none'.
    'normalization': 'penalty',
    # Mean tau used by 'self': over the 'batch', or over every record of the 'data'.
    'self_normalizer': 'batch',
    'parameterization': 'tabular',
    'hidden_sizes': (64, 64),
    'seed': 0,
    # Training aborts once |J| exceeds this bound.
    'divergence_bound': 1e8,
    # Share of the final steps averaged into the returned saddle; 0 keeps the last iterate.
    'tail_average': 0.0,
}

LEARNING_RATE_GRID = (0.0001, 0.0003, 0.001, 0.003)


# Baselines

BASELINE_DEFAULTS = {
    # Additive count smoothing for the tabular model; 0 keeps raw frequencies.
    'smoothing': 0.0,
    'exact': True,
    'trained': True,
    'self_normalized': True,
    # Data-normalised self runs get the tau evaluations of the penalty run, not its step count.
    'equal_budget': True,
    'model_based': True,
    'wis': True,
    # WIS step weights: 'normalized' (gamma^t over the horizon) or 'discounted' ((1 - gamma) gamma^t).
    'wis_weighting': 'normalized',
}


# Experiments

EXPERIMENT_DEFAULTS = {
    'opr': {
        'graph': 'ba',
        'edge_list': '',
        'directed': True,
        'n_vertices': 100,
        'ba_m': 4,
        'ba_m0': None,
        'weighted': False,
        'eta': 0.1,
        'sample_sizes': (100, 200, 500, 1000, 2000, 5000, 10000, 20000),
    },
    'ope-taxi': {
        'alphas': (0.0, 0.33, 0.66, 1.0),
        'gammas': (0.95, 0.99, 0.995, 0.999, 1.0),
        # Approximate grids, override per study.
        'trajectory_lengths': (200, 400, 1000, 2000),
        'trajectory_counts': (50, 100, 200),
        'target_episodes': 1000,
        'base_episodes': 950,
        # Seeds Q-learning for both policies, so every run evaluates the same target.
        'policy_seed': 0,
    },
    'ablation': {
        'lambdas': (0.1, 0.5, 1.0, 2.0, 5.0),
        'divergences': ('chi2', 'kl', 'js'),
        'activations': ('square', 'softplus', 'exp'),
        'n_samples': 10000,
    },
    'n_seeds': 20,
    'jobs': 1,
    'write_traces': False,
}

RESULTS_CSV_HEADER = ('task', 'method', 'seed', 'n_samples', 'alpha', 'gamma', 'lambda', 'metric', 'value')

RUN_SLOW_TESTS = os.environ.get('GENDICE_SLOW_TESTS', '') == '1'
