"""
Django settings for rvolmin_project.

Robust Volume-Minimization Matrix Factorization toolkit.

Only the parts of Django the toolkit uses are switched on: the ORM (run
records), management commands (the CLI) and logging. There is no HTTP surface.

For more information on this file, see
https://docs.djangoproject.com/en/4.2/topics/settings/
"""

from pathlib import Path
from decouple import config, Csv
import os

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# =============================================================================
# CORE SETTINGS
# =============================================================================

SECRET_KEY = config('SECRET_KEY', default='rvolmin-local-only-no-http-surface')

DEBUG = config('DEBUG', default=False, cast=bool)

ALLOWED_HOSTS = config('ALLOWED_HOSTS', default='localhost,127.0.0.1', cast=Csv())


# =============================================================================
# APPLICATION DEFINITION
# =============================================================================

INSTALLED_APPS = [
    # Django default apps (contenttypes/auth back DRF and the ORM)
    'django.contrib.contenttypes',
    'django.contrib.auth',

    # Third-party apps
    'rest_framework',

    # Numerical library
    'apps.core',
    'apps.regularizers',
    'apps.solver',
    'apps.identifiability',

    # Experiments and command-line surface
    'apps.synth',
    'apps.runs',
]

MIDDLEWARE = []


# =============================================================================
# DATABASE CONFIGURATION
# =============================================================================
# Run records only. sqlite is enough for desk-scale use; MySQL is available
# through PyMySQL for shared benchmark machines.

DB_ENGINE = config('DB_ENGINE', default='sqlite')

if DB_ENGINE == 'mysql':
    # PyMySQL as MySQLdb replacement (no need to compile mysqlclient)
    import pymysql

    # Django 4.2+ rejects PyMySQL's reported version, so report a compatible one
    pymysql.version_info = (2, 2, 1, "final", 0)
    pymysql.install_as_MySQLdb()

    DATABASES = {
        'default': {
            'ENGINE': 'django.db.backends.mysql',
            'NAME': config('DB_NAME', default='rvolmin_db'),
            'USER': config('DB_USER', default='root'),
            'PASSWORD': config('DB_PASSWORD', default=''),
            'HOST': config('DB_HOST', default='localhost'),
            'PORT': config('DB_PORT', default='3306'),
            'OPTIONS': {
                'charset': 'utf8mb4',
                'init_command': "SET sql_mode='STRICT_TRANS_TABLES'",
            },
        }
    }
else:
    DATABASES = {
        'default': {
            'ENGINE': 'django.db.backends.sqlite3',
            'NAME': config('DB_NAME', default=str(BASE_DIR / 'rvolmin.sqlite3')),
        }
    }


# =============================================================================
# SOLVER & EXPERIMENT DEFAULTS
# =============================================================================
# Defaults of the robust objective and of the stopping rule used throughout
# the simulations: p = 0.5, epsilon = 1e-12, tau = 1e-8, stop when the
# absolute change of the cost is below 1e-5 or after 1000 iterations.

RVOLMIN = {
    'P': config('RVOLMIN_P', default=0.5, cast=float),
    'LAMBDA': config('RVOLMIN_LAMBDA', default=1.0, cast=float),
    'EPSILON': config('RVOLMIN_EPSILON', default=1e-12, cast=float),
    'TAU': config('RVOLMIN_TAU', default=1e-8, cast=float),
    'MAX_ITER': config('RVOLMIN_MAX_ITER', default=1000, cast=int),
    'TOL': config('RVOLMIN_TOL', default=1e-5, cast=float),
    'SAFETY_DELTA': config('RVOLMIN_SAFETY_DELTA', default=0.05, cast=float),
    'POWER_ITERATIONS': config('RVOLMIN_POWER_ITERATIONS', default=50, cast=int),
    'MSE_FLOOR_DB': config('RVOLMIN_MSE_FLOOR_DB', default=-150.0, cast=float),
    'TRIALS': config('RVOLMIN_TRIALS', default=10, cast=int),
    'JOBS': config('RVOLMIN_JOBS', default=1, cast=int),
    'RECORD_RUNS': config('RVOLMIN_RECORD_RUNS', default=True, cast=bool),
}


# =============================================================================
# DJANGO REST FRAMEWORK CONFIGURATION
# =============================================================================
# Serializers are used for validation and report shaping only.

REST_FRAMEWORK = {
    'DEFAULT_RENDERER_CLASSES': [
        'rest_framework.renderers.JSONRenderer',
    ],
    'UNAUTHENTICATED_USER': None,
}


# =============================================================================
# INTERNATIONALIZATION
# =============================================================================

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True


# =============================================================================
# DEFAULT PRIMARY KEY FIELD TYPE
# =============================================================================

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# =============================================================================
# LOGGING CONFIGURATION
# =============================================================================

LOG_LEVEL = config('LOG_LEVEL', default='INFO')
LOG_FILE = config('LOG_FILE', default='')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {process:d} {thread:d} {message}',
            'style': '{',
        },
        'simple': {
            'format': '{levelname} {asctime} {module} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': 'WARNING',
    },
    'loggers': {
        'django': {
            'handlers': ['console'],
            'level': 'WARNING',
            'propagate': False,
        },
        'apps': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
    },
}

if LOG_FILE:
    os.makedirs(Path(LOG_FILE).parent, exist_ok=True)
    LOGGING['handlers']['file'] = {
        'class': 'logging.FileHandler',
        'filename': LOG_FILE,
        'formatter': 'verbose',
    }
    LOGGING['loggers']['apps']['handlers'].append('file')
