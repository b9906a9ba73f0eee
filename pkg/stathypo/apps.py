from django.apps import AppConfig


class StathypoConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'stathypo'
    verbose_name = 'Significance and scoring'
