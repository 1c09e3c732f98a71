"""Noisy/clean pair preparation package."""
