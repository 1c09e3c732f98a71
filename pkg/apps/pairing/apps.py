"""Pairing app configuration."""

from django.apps import AppConfig


class PairingConfig(AppConfig):
    """Django app configuration for the pairing app."""

    default_auto_field = "django.db.models.BigAutoField"
    name = "apps.pairing"
    verbose_name = "Pairing"
