from django.apps import AppConfig


class IcrlConfig(AppConfig):
    name = 'icrl'
    verbose_name = 'Integrity code revocation list'
