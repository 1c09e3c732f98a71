"""Core utility functions shared by the pipeline apps."""

import hashlib
import os
from pathlib import Path
from typing import Optional

import numpy as np

MASK64 = (1 << 64) - 1


class SplitMix64:
    """Portable 64-bit generator (splitmix update, fixed constants).

    Produces identical streams on every platform, so seeded parameter
    draws reproduce across implementations.
    """

    GOLDEN_GAMMA = 0x9E3779B97F4A7C15

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + self.GOLDEN_GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform(self, low: float, high: float) -> float:
        return low + (high - low) * self.random()

    def bernoulli(self, probability: float) -> bool:
        return self.random() < probability


def derive_seed(seed: int, *keys: object) -> int:
    """Deterministic 64-bit child seed for a named sub-stream."""
    material = ":".join([str(seed), *(str(key) for key in keys)])
    digest = hashlib.blake2b(material.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def numpy_rng(seed: int, *keys: object) -> np.random.Generator:
    """numpy Generator seeded from a derived sub-stream."""
    return np.random.default_rng(derive_seed(seed, *keys) if keys else seed)


def format_file_size(size_bytes: int) -> str:
    """Format file size in bytes to human readable format."""
    if size_bytes == 0:
        return "0 B"

    size_names = ["B", "KB", "MB", "GB", "TB"]
    i = 0
    size_float = float(size_bytes)
    while size_float >= 1024 and i < len(size_names) - 1:
        size_float /= 1024.0
        i += 1

    return f"{size_float:.1f} {size_names[i]}"


def relative_ref(path, base) -> str:
    """POSIX path of ``path`` relative to the ``base`` directory."""
    return Path(os.path.relpath(Path(path).resolve(), Path(base).resolve())).as_posix()


def resolve_ref(ref: str, base, default: Optional[str] = None):
    """Inverse of relative_ref."""
    if not ref:
        return default
    candidate = Path(ref)
    return candidate if candidate.is_absolute() else Path(base) / candidate
