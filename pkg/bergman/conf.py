"""
Access to the toolkit settings.

Values come from the ``BERGMAN`` dict in Django settings; when the library is
imported without a configured settings module the built-in defaults apply.
"""

import os
from typing import Any

DEFAULTS = {
    'CACHE_DIR': '.gram_cache',
    'OUTPUT_DIR': 'artifacts',
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

SUPPORTED_PRECISIONS = (53, 106, 212)


def get_setting(name: str) -> Any:
    """Return a toolkit setting, preferring Django settings over defaults."""
    from django.conf import settings

    if settings.configured:
        value = getattr(settings, 'BERGMAN', {}).get(name)
        if value is not None:
            return value
    if name == 'CACHE_DIR' and os.environ.get('BERGMAN_CACHE_DIR'):
        return os.environ['BERGMAN_CACHE_DIR']
    if name == 'OUTPUT_DIR' and os.environ.get('BERGMAN_OUTPUT_DIR'):
        return os.environ['BERGMAN_OUTPUT_DIR']
    return DEFAULTS[name]
