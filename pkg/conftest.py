import os

import django

# Mirror runtests.py: the suite runs against the test app's settings.
os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'tests.app.settings')
django.setup()
