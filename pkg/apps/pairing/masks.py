"""Per-pixel loss masks and their bit-packed file format."""

import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
from scipy import ndimage

from apps.core.exceptions import ParseError, ShapeMismatch

logger = logging.getLogger(__name__)

L1_THRESHOLD = 0.4
LOSS_PERCENTILE = 99.99
OVEREXPOSURE_THRESHOLD = 0.99
OPENING_SIZE = 3

MASK_MAGIC = b"RNIPMASK"
_MASK_HEADER = struct.Struct("<8sII")


@dataclass(frozen=True, eq=False)
class LossMask:
    """Boolean HxW plane, True where a pixel counts toward the loss."""

    mask: np.ndarray

    def __post_init__(self):
        if self.mask.ndim != 2:
            raise ShapeMismatch(f"mask must be 2-D, got {self.mask.shape}")
        object.__setattr__(self, "mask", self.mask.astype(bool, copy=False))

    @property
    def shape(self) -> tuple[int, int]:
        return self.mask.shape

    @property
    def excluded_fraction(self) -> float:
        return 1.0 - float(self.mask.mean()) if self.mask.size else 0.0


def exclusion_triggers(
    noisy: np.ndarray,
    clean: np.ndarray,
    l1_threshold: float = L1_THRESHOLD,
    percentile: float = LOSS_PERCENTILE,
    overexposure: float = OVEREXPOSURE_THRESHOLD,
) -> np.ndarray:
    """Raw exclusion set before morphological cleanup."""
    if noisy.shape != clean.shape:
        raise ShapeMismatch(f"pair shapes differ: {noisy.shape} vs {clean.shape}")
    per_pixel = np.mean(np.abs(noisy.astype(np.float64) - clean), axis=0)
    cutoff = np.percentile(per_pixel, percentile)
    return (
        (per_pixel > l1_threshold)
        | (per_pixel > cutoff)
        | np.any(clean >= overexposure, axis=0)
    )


def build_loss_mask(
    noisy: np.ndarray,
    clean: np.ndarray,
    l1_threshold: float = L1_THRESHOLD,
    percentile: float = LOSS_PERCENTILE,
    overexposure: float = OVEREXPOSURE_THRESHOLD,
    opening_size: int = OPENING_SIZE,
) -> LossMask:
    """Exclude inconsistent or overexposed pixels of an aligned pair.

    Inputs are the 3xHxW overlap views of a gain-matched pair. The
    exclusion set is opened with a square structuring element so only
    regions at least ``opening_size`` wide survive.
    """
    excluded = exclusion_triggers(noisy, clean, l1_threshold, percentile, overexposure)
    structure = np.ones((opening_size, opening_size), dtype=bool)
    opened = ndimage.binary_opening(excluded, structure=structure)
    mask = LossMask(~opened)
    logger.debug(
        "Mask: %d raw exclusions, %.4f excluded after opening",
        int(excluded.sum()),
        mask.excluded_fraction,
    )
    return mask


def write_mask(path: Union[str, Path], mask: LossMask) -> None:
    height, width = mask.shape
    bits = np.packbits(mask.mask.ravel())
    Path(path).write_bytes(_MASK_HEADER.pack(MASK_MAGIC, height, width) + bits.tobytes())


def read_mask(path: Union[str, Path]) -> LossMask:
    blob = Path(path).read_bytes()
    if len(blob) < _MASK_HEADER.size:
        raise ParseError(f"{path}: truncated mask header")
    magic, height, width = _MASK_HEADER.unpack_from(blob)
    if magic != MASK_MAGIC:
        raise ParseError(f"{path}: bad mask magic {magic!r}")
    payload = np.frombuffer(blob, dtype=np.uint8, offset=_MASK_HEADER.size)
    count = height * width
    if payload.size != (count + 7) // 8:
        raise ParseError(f"{path}: mask payload does not match {height}x{width}")
    bits = np.unpackbits(payload, count=count).astype(bool)
    return LossMask(bits.reshape(height, width))
