"""
Django settings for the convseq project.

Only the parts of Django the engine needs are switched on: the ORM (for the
run ledger), management commands (the subcommand surface) and logging.

Engine defaults live in ``CONVSEQ``. Values can be overridden per run with
``--config`` files or command-line flags; see ``cli.config``.
"""

import os
from pathlib import Path

from dotenv import load_dotenv

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

load_dotenv(BASE_DIR / '.env')


def env_bool(name, default):
    value = os.environ.get(name)
    if value is None:
        return default
    return value.strip().lower() in ('1', 'true', 'yes', 'on')


SECRET_KEY = os.environ.get('CONVSEQ_SECRET_KEY', 'convseq-local-only')

DEBUG = env_bool('CONVSEQ_DEBUG', False)

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'spikecore',
    'synthgen',
    'filterbank',
    'optengine',
    'stathypo',
    'cli',
]


# Database
# The run ledger (cli.models.RunRecord) is the only table.

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': os.environ.get('CONVSEQ_DB', BASE_DIR / 'convseq.sqlite3'),
    }
}

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

USE_TZ = True

TIME_ZONE = 'UTC'


# Engine defaults (hyperparameter table of the method plus artifact choices)

CONVSEQ = {
    'M': 100,
    'K': 1,
    'variant': 'direct',
    'lrate': 0.1,
    'n_steps': 100,
    'beta_tv': 100.0,
    # forced to 0 when K == 1
    'beta_xcor': 10.0,
    # lag bound j; None means j = M
    'j': None,
    'sigma': 16.0,
    'normalized_gaussian': True,
    'init_scale': 0.5,
    'n_null': 1000,
    'z': 4.0,
    'null_family': None,
    'log_every': 10,
    # place-cell noise, not given by the method description
    'placecell_background_density': 0.003,
    'placecell_jitter_sd': 2.0,
    'default_background_density': 0.003,
    'seed': int(os.environ.get('CONVSEQ_SEED', '0') or 0),
    'out_dir': os.environ.get('CONVSEQ_OUT_DIR', 'out'),
    'record_runs': env_bool('CONVSEQ_RECORD_RUNS', True),
    'bench_workers': int(os.environ.get('CONVSEQ_BENCH_WORKERS', '1') or 1),
}


# Logging

LOG_LEVEL = os.environ.get('CONVSEQ_LOG_LEVEL', 'INFO').upper()

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'loggers': {
        name: {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        }
        for name in ('spikecore', 'synthgen', 'filterbank', 'optengine', 'stathypo', 'cli')
    },
}
