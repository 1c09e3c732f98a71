"""Metrics app configuration."""

from django.apps import AppConfig


class MetricsConfig(AppConfig):
    """Django app configuration for the metrics app."""

    default_auto_field = "django.db.models.BigAutoField"
    name = "apps.metrics"
    verbose_name = "Metrics"
