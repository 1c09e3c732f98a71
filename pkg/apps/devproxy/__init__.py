"""Proxy development pipeline package."""
