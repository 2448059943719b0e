from django.apps import AppConfig


class RewriteConfig(AppConfig):
    name = 'rewrite'
    verbose_name = 'ICDB query rewriting'
