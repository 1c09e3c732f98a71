"""Core raw containers, primitives and shared functionality package."""
