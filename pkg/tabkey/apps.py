from django.apps import AppConfig


class TabkeyApp(AppConfig):
    name = 'tabkey'
    label = 'tabkey'
    verbose_name = 'Tabkey autocomplete evaluation'
