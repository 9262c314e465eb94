"""
Django settings for the conformal_lab project.

The project hosts the ``bergman`` app: a command-line toolkit for Bieberbach
polynomials and area-orthonormal polynomials. There is no web front end, no
database and no middleware; Django supplies settings, logging configuration,
management commands and the test runner.
"""

import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# Only used by Django internals (signing); nothing is served.
SECRET_KEY = os.environ.get('DJANGO_SECRET_KEY', 'conformal-lab-local-key')

DEBUG = os.environ.get('DEBUG', 'False').lower() == 'true'

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'bergman',
]

# No models: SimpleTestCase is used throughout the test suite.
DATABASES = {}

USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# Toolkit configuration
# Every numerical default lives here; bergman.conf.get_setting falls back to
# the same values when the library is used without Django settings.

BERGMAN = {
    'CACHE_DIR': os.environ.get('BERGMAN_CACHE_DIR', str(BASE_DIR / '.gram_cache')),
    'OUTPUT_DIR': os.environ.get('BERGMAN_OUTPUT_DIR', str(BASE_DIR / 'artifacts')),
    'QUADRATURE_ORDER': 24,
    'PANELS_PER_ARC': 8,
    'GRADING_RATIO': 0.5,
    'GRADING_DEPTH': 40,
    'BOUNDARY_SAMPLES': 512,
    'WINDING_SAMPLES': 4096,
    'ORTHONORMALITY_TOLERANCE': 1e-8,
    'DEFAULT_PRECISION': 106,
    'DIVERGENCE_PRECISION': 212,
    'KELDYSH_DEGREE_BUDGET': 120,
    'GRAM_WORKERS': 1,
    'SLOW_CALL_SECONDS': 1.0,
}


# Logging configuration
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '%(asctime)s %(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'level': 'DEBUG',
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
        },
    },
    'loggers': {
        'bergman': {
            'handlers': ['console'],
            'level': os.environ.get('BERGMAN_LOG_LEVEL', 'INFO'),
            'propagate': False,
        },
    },
}
