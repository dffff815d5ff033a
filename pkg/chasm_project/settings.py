"""
Django settings for the chasm_project experiment harness.
"""

from pathlib import Path
from decouple import config

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = config('SECRET_KEY', default='django-insecure-chasm-harness')

DEBUG = config('DEBUG', default=False, cast=bool)

ALLOWED_HOSTS = []

# Application definition
INSTALLED_APPS = [
    'rest_framework',
    'spectral',
    'mri',
    'analysis',
    'experiments',
]

# The harness keeps no database state; every artifact is a file under CHASM_OUT_DIR.
DATABASES = {}

TIME_ZONE = 'UTC'
USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# Experiment outputs
CHASM_OUT_DIR = config('CHASM_OUT_DIR', default='runs')

CHASM_LOG_LEVEL = config('CHASM_LOG_LEVEL', default='INFO')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'simple': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'loggers': {
        app: {'handlers': ['console'], 'level': CHASM_LOG_LEVEL, 'propagate': False}
        for app in ('spectral', 'mri', 'analysis', 'experiments')
    },
}

# Celery configuration
CELERY_BROKER_URL = config('REDIS_URL', default='memory://')
CELERY_RESULT_BACKEND = config('CELERY_RESULT_BACKEND', default='cache+memory://')
CELERY_ACCEPT_CONTENT = ['json']
CELERY_TASK_SERIALIZER = 'json'
CELERY_RESULT_SERIALIZER = 'json'
CELERY_TIMEZONE = TIME_ZONE
CELERY_TASK_ALWAYS_EAGER = config('CHASM_EAGER_TASKS', default=True, cast=bool)
CELERY_TASK_EAGER_PROPAGATES = True
