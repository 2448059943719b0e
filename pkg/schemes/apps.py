from django.apps import AppConfig


class SchemesConfig(AppConfig):
    name = 'schemes'
    verbose_name = 'Integrity code schemes'
