from django.apps import AppConfig


class CrossingsConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'crossings'
    verbose_name = 'Crossing Analysis'
