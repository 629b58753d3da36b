"""
Django settings for longevity_bounds project.

Numerical defaults for the bounds engine live at the bottom of this file and
can be overridden from the environment (or a .env file).

For the full list of Django settings and their values, see
https://docs.djangoproject.com/en/5.2/ref/settings/
"""

from pathlib import Path
from dotenv import load_dotenv
import os

# Load environment variables from .env file
load_dotenv()

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.environ.get('SECRET_KEY', 'insecure-dev-key-change-me')

DEBUG = os.environ.get('DEBUG', 'True').lower() == 'true'

ALLOWED_HOSTS = os.environ.get('ALLOWED_HOSTS', '*').split(',')

# Application definition

INSTALLED_APPS = [
    'django.contrib.admin',
    'django.contrib.auth',
    'django.contrib.contenttypes',
    'django.contrib.sessions',
    'django.contrib.messages',
    'django.contrib.staticfiles',
    'django_filters',

    # Third-party apps
    "rest_framework",

    # Engine apps
    'distributions',
    'copulas',
    'layers',
    'crossings',
    'mortality',
    'scenarios',
]

MIDDLEWARE = [
    'django.middleware.security.SecurityMiddleware',
    'django.contrib.sessions.middleware.SessionMiddleware',
    'django.middleware.common.CommonMiddleware',
    'django.middleware.csrf.CsrfViewMiddleware',
    'django.contrib.auth.middleware.AuthenticationMiddleware',
    'django.contrib.messages.middleware.MessageMiddleware',
    'django.middleware.clickjacking.XFrameOptionsMiddleware',
]

ROOT_URLCONF = 'longevity_bounds.urls'

TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'DIRS': [],
        'APP_DIRS': True,
        'OPTIONS': {
            'context_processors': [
                'django.template.context_processors.debug',
                'django.template.context_processors.request',
                'django.contrib.auth.context_processors.auth',
                'django.contrib.messages.context_processors.messages',
            ],
        },
    },
]

WSGI_APPLICATION = 'longevity_bounds.wsgi.application'


# Database
# Only the scenario run history is stored here.

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': BASE_DIR / 'db.sqlite3',
    }
}


# REST framework configuration
REST_FRAMEWORK = {
    'DEFAULT_FILTER_BACKENDS': (
        'django_filters.rest_framework.DjangoFilterBackend',
    ),
    'DEFAULT_PAGINATION_CLASS': 'rest_framework.pagination.PageNumberPagination',
    'PAGE_SIZE': 25,
}

# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = True

USE_TZ = True

STATIC_URL = 'static/'
STATIC_ROOT = BASE_DIR / 'staticfiles'

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# Logging
LOG_LEVEL = os.environ.get('LOG_LEVEL', 'INFO')

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
        app: {'handlers': ['console'], 'level': LOG_LEVEL, 'propagate': False}
        for app in ['distributions', 'copulas', 'layers', 'crossings', 'mortality', 'scenarios']
    },
}


# Bounds engine defaults
BOUNDS_N_SIMS = int(os.environ.get('BOUNDS_N_SIMS', '100000'))
BOUNDS_SEED = int(os.environ.get('BOUNDS_SEED', '2010'))
BOUNDS_WORKERS = int(os.environ.get('BOUNDS_WORKERS', '1'))

# Empirical distributions
BOUNDS_MONOTONE_TOLERANCE = float(os.environ.get('BOUNDS_MONOTONE_TOLERANCE', '1e-9'))
BOUNDS_DISPERSIVE_GRID_POINTS = int(os.environ.get('BOUNDS_DISPERSIVE_GRID_POINTS', '99'))

# Crossing analysis (location tolerance used to order the three crossings)
BOUNDS_ORDER_BAND = float(os.environ.get('BOUNDS_ORDER_BAND', '1e-4'))

# Payoff sweep and spread bars
BOUNDS_SWEEP_MIN = float(os.environ.get('BOUNDS_SWEEP_MIN', '-0.15'))
BOUNDS_SWEEP_MAX = float(os.environ.get('BOUNDS_SWEEP_MAX', '0.15'))
BOUNDS_SWEEP_STEP = float(os.environ.get('BOUNDS_SWEEP_STEP', '0.001'))
BOUNDS_SWEEP_WIDTH = float(os.environ.get('BOUNDS_SWEEP_WIDTH', '0.005'))
BOUNDS_SPREAD_QUANTILE = float(os.environ.get('BOUNDS_SPREAD_QUANTILE', '0.95'))
BOUNDS_CDF_GRID_POINTS = int(os.environ.get('BOUNDS_CDF_GRID_POINTS', '501'))

# Mortality fitting
BOUNDS_MLE_TOLERANCE = float(os.environ.get('BOUNDS_MLE_TOLERANCE', '1e-8'))
BOUNDS_MLE_MAX_ITER = int(os.environ.get('BOUNDS_MLE_MAX_ITER', '10000'))
BOUNDS_FIT_START_YEAR = int(os.environ.get('BOUNDS_FIT_START_YEAR', '1950'))
BOUNDS_FIT_END_YEAR = int(os.environ.get('BOUNDS_FIT_END_YEAR', '2009'))
BOUNDS_FIT_MIN_AGE = int(os.environ.get('BOUNDS_FIT_MIN_AGE', '25'))
BOUNDS_FIT_MAX_AGE = int(os.environ.get('BOUNDS_FIT_MAX_AGE', '95'))

BOUNDS_OUTPUT_DIR = Path(os.environ.get('BOUNDS_OUTPUT_DIR', BASE_DIR / 'output'))
