import os

from tabkey.settings import *  # noqa: F401,F403

TABKEY_PREDICTOR_URL = os.environ.get('AE_PREDICTOR_URL', 'http://localhost:8080')

TABKEY_WORKERS = 4

LOGGING['root']['level'] = 'DEBUG'

LOGGING['loggers'] = {
    'urllib3': {
        'level': 'INFO',
    },
}
