"""Networks app configuration."""

from django.apps import AppConfig


class NetworksConfig(AppConfig):
    """Django app configuration for the networks app."""

    default_auto_field = "django.db.models.BigAutoField"
    name = "apps.networks"
    verbose_name = "Networks"
