"""
Access to the RVOLMIN settings dict.

The numerical apps are importable without a configured Django project (plain
library use); in that case the built-in defaults below apply.
"""

from django.conf import settings
from django.core.exceptions import ImproperlyConfigured

DEFAULTS = {
    'P': 0.5,
    'LAMBDA': 1.0,
    'EPSILON': 1e-12,
    'TAU': 1e-8,
    'MAX_ITER': 1000,
    'TOL': 1e-5,
    'SAFETY_DELTA': 0.05,
    'POWER_ITERATIONS': 50,
    'MSE_FLOOR_DB': -150.0,
    'TRIALS': 10,
    'JOBS': 1,
    'RECORD_RUNS': True,
}


def rvolmin_setting(key: str):
    """Return settings.RVOLMIN[key], falling back to the built-in default."""
    try:
        configured = getattr(settings, 'RVOLMIN', {})
    except ImproperlyConfigured:
        configured = {}
    return configured.get(key, DEFAULTS[key])
