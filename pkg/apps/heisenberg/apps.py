from django.apps import AppConfig


class HeisenbergConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.heisenberg'
    verbose_name = 'Heisenberg chain'
