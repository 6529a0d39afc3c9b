"""
Django settings for the Adiabatic Sweep Lab.
"""

from pathlib import Path

from decouple import config

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = config('SECRET_KEY', default='django-insecure-dev-key-change-in-production')

DEBUG = config('DEBUG', default=True, cast=bool)

ALLOWED_HOSTS = config('ALLOWED_HOSTS', default='localhost,127.0.0.1').split(',')


# Application definition

INSTALLED_APPS = [
    'django.contrib.auth',
    'django.contrib.contenttypes',

    # Third party
    'rest_framework',

    # Local apps
    'apps.core',
    'apps.ising',
    'apps.heisenberg',
    'apps.stability',
    'apps.reports',
]


# Database
# Nothing is persisted; the SQLite fallback only keeps Django booting.
DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': BASE_DIR / 'db.sqlite3',
    }
}


# Internationalization
LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = True
USE_TZ = True


# Default primary key field type
DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# REST Framework (serializers and the JSON renderer only)
REST_FRAMEWORK = {
    'DEFAULT_RENDERER_CLASSES': (
        'rest_framework.renderers.JSONRenderer',
    ),
    'UNAUTHENTICATED_USER': None,
    'COERCE_DECIMAL_TO_STRING': False,
    'STRICT_JSON': True,
}


# Simulation defaults (units: hbar = J = 1 unless overridden)
SIMULATION = {
    'HBAR': config('SWEEP_HBAR', default=1.0, cast=float),
    'COUPLING': config('SWEEP_COUPLING', default=1.0, cast=float),
    'INTEGRATOR': {
        'METHOD': config('SWEEP_INTEGRATOR', default='adaptive'),
        'STEP': config('SWEEP_STEP', default=0.05, cast=float),
        'RTOL': config('SWEEP_RTOL', default=1e-9, cast=float),
        'ATOL': config('SWEEP_ATOL', default=1e-12, cast=float),
        'MAX_STEPS': config('SWEEP_MAX_STEPS', default=10_000_000, cast=int),
        'NORM_TOLERANCE': 1e-6,
    },
    'TRACKING_STEPS': config('SWEEP_TRACKING_STEPS', default=200, cast=int),
    'WORKERS': config('SWEEP_WORKERS', default=1, cast=int),
    'OUTPUT_DIR': config('SWEEP_OUTPUT_DIR', default=str(BASE_DIR / 'output')),
}


# Logging
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
        'apps': {
            'handlers': ['console'],
            'level': config('LOG_LEVEL', default='INFO'),
            'propagate': False,
        },
    },
}
