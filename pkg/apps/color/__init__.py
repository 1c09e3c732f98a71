"""Colour matrix algebra package."""
