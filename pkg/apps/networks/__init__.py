"""Denoising and compression networks package."""
