"""
Django settings for the petzlab project.

Only the management-command surface of Django is used: there is no database,
no URL routing and no templates. Numerical tolerances, logging and the default
verification seed are configured here and may be overridden from the
environment (or a ``.env`` file at the repository root).
"""

from pathlib import Path
import json
import os
from dotenv import load_dotenv

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent
load_dotenv(BASE_DIR / '.env')

SECRET_KEY = os.getenv('PETZLAB_SECRET_KEY', 'petzlab-local-numerics-only')

DEBUG = os.getenv('PETZLAB_DEBUG', '0') == '1'

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'verification',
]

# No persistence layer: reports are written as JSON files.
DATABASES = {}

USE_TZ = True
TIME_ZONE = 'UTC'

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# Logging

LOG_LEVEL = os.getenv('PETZLAB_LOG_LEVEL', 'WARNING')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{asctime} {levelname} {name} {message}',
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
        'quantum_sdk': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
        'verification': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
    },
}


# Recoverability toolkit configuration

# JSON object, keys are fields of quantum_sdk.recoverability.tolerances.Tolerances
# e.g. PETZLAB_TOLERANCES='{"suff": 1e-7, "gap": 1e-9}'
RECOVERABILITY_TOLERANCES = json.loads(os.getenv('PETZLAB_TOLERANCES', '{}') or '{}')

# Seed used by `manage.py verify` when --seed is not given
VERIFY_SEED = int(os.getenv('PETZLAB_VERIFY_SEED', '7'))

# Worker threads for `manage.py experiment` when the config does not set them
EXPERIMENT_WORKERS = int(os.getenv('PETZLAB_EXPERIMENT_WORKERS', '1'))
