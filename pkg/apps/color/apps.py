"""Color app configuration."""

from django.apps import AppConfig


class ColorConfig(AppConfig):
    """Django app configuration for the color app."""

    default_auto_field = "django.db.models.BigAutoField"
    name = "apps.color"
    verbose_name = "Color"
