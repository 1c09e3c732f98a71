"""Bayer demosaicing package."""
