import os

from django.conf import settings

from tabkey.vocab import SPECIAL_TAGS

### TABKEY_METRIC ###
TABKEY_CUTOFF = getattr(settings, 'TABKEY_CUTOFF', 10)

TABKEY_FIRST_TOKEN = getattr(settings, 'TABKEY_FIRST_TOKEN', 'manual')

TABKEY_KEYSTROKE_UNIT = getattr(settings, 'TABKEY_KEYSTROKE_UNIT', 'char')

### TABKEY_SAMPLING ###
TABKEY_TOP_P = getattr(settings, 'TABKEY_TOP_P', 0.9)

TABKEY_TEMPERATURE = getattr(settings, 'TABKEY_TEMPERATURE', 0.75)

TABKEY_MAX_TOKENS = getattr(settings, 'TABKEY_MAX_TOKENS', 128)

TABKEY_SEED = getattr(settings, 'TABKEY_SEED', 0)

TABKEY_WORKERS = getattr(settings, 'TABKEY_WORKERS', 1)

### TABKEY_PREDICTORS ###
TABKEY_NGRAM_ORDER = getattr(settings, 'TABKEY_NGRAM_ORDER', 4)

TABKEY_BACKOFF_FACTOR = getattr(settings, 'TABKEY_BACKOFF_FACTOR', 0.4)

TABKEY_PREDICTOR_URL = getattr(
    settings, 'TABKEY_PREDICTOR_URL', os.environ.get('AE_PREDICTOR_URL'))

TABKEY_REMOTE_TIMEOUT = getattr(settings, 'TABKEY_REMOTE_TIMEOUT', 30)

TABKEY_REMOTE_RETRIES = getattr(settings, 'TABKEY_REMOTE_RETRIES', 3)

TABKEY_PREDICTOR_BACKENDS = getattr(settings, 'TABKEY_PREDICTOR_BACKENDS', {
    'ngram': 'tabkey.backends.ngram.NgramPredictor',
    'remote': 'tabkey.backends.remote.RemotePredictor',
    'scripted': 'tabkey.backends.oracles.ScriptedPredictor',
})

### TABKEY_CORPUS ###
TABKEY_SPECIAL_TAGS = getattr(settings, 'TABKEY_SPECIAL_TAGS', SPECIAL_TAGS)
