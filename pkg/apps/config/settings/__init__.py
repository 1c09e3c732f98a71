"""Django settings package."""
