from django.apps import AppConfig


class IdentifiabilityConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.identifiability'
    verbose_name = 'Identifiability Certifier'
