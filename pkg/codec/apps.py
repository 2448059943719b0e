from django.apps import AppConfig


class CodecConfig(AppConfig):
    name = 'codec'
    verbose_name = 'Integrity code codec'
