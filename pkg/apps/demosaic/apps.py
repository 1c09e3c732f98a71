"""Demosaic app configuration."""

from django.apps import AppConfig


class DemosaicConfig(AppConfig):
    """Django app configuration for the demosaic app."""

    default_auto_field = "django.db.models.BigAutoField"
    name = "apps.demosaic"
    verbose_name = "Demosaic"
