"""Settings used when tabkey runs as a standalone command line tool."""
import os

SECRET_KEY = os.environ.get('TABKEY_SECRET_KEY', 'tabkey has no secrets')

INSTALLED_APPS = [
    'tabkey',
]

DATABASES = {}

USE_TZ = True

TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'APP_DIRS': True,
    },
]

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
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': os.environ.get('TABKEY_LOG_LEVEL', 'INFO'),
    },
}
