"""Development proxy app configuration."""

from django.apps import AppConfig


class DevproxyConfig(AppConfig):
    """Django app configuration for the devproxy app."""

    default_auto_field = "django.db.models.BigAutoField"
    name = "apps.devproxy"
    verbose_name = "Development proxy"
