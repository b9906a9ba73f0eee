from django.apps import AppConfig


class OptengineConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'optengine'
    verbose_name = 'Filter optimization'
