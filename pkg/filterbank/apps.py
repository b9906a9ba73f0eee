from django.apps import AppConfig


class FilterbankConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'filterbank'
    verbose_name = 'Filter banks'
