from django.apps import AppConfig


class SpikecoreConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'spikecore'
    verbose_name = 'Spike matrices'
