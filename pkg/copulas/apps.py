from django.apps import AppConfig


class CopulasConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'copulas'
    verbose_name = 'Copula Sampling'
