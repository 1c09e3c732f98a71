"""Patch grids over aligned pairs, random training crops and patch export."""

import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from apps.core.enums import PatchKind
from apps.core.exceptions import ParseError, ShapeMismatch, TooSmall

from .masks import LossMask

logger = logging.getLogger(__name__)

PATCH_GEOMETRY = {
    PatchKind.RGB: (1024, 256),
    PatchKind.BAYER: (512, 128),
}
MAX_MASKED_FRACTION = 0.5
CROP_ATTEMPTS = 8

RAWPATCH_MAGIC = b"RNIPPATC"
_RAWPATCH_HEADER = struct.Struct("<8sIII")


@dataclass(frozen=True)
class PatchSet:
    """Origins of kept patches; pixels are read as views when needed.

    Bayer origins and sizes are in packed-plane coordinates; each Bayer
    sample covers a 2x2 block of the mask.
    """

    kind: PatchKind
    size: int
    stride: int
    origins: list[tuple[int, int]] = field(default_factory=list)

    @property
    def scale(self) -> int:
        return 2 if self.kind == PatchKind.BAYER else 1

    def views(self, array: np.ndarray):
        """Yield zero-copy (..., size, size) views of ``array``."""
        for y, x in self.origins:
            yield array[..., y : y + self.size, x : x + self.size]


def _grid(extent: int, size: int, stride: int) -> range:
    return range(0, extent - size + 1, stride) if extent >= size else range(0)


def extract_patches(
    mask: LossMask,
    kind: PatchKind = PatchKind.RGB,
    size: Optional[int] = None,
    stride: Optional[int] = None,
    max_masked_fraction: float = MAX_MASKED_FRACTION,
) -> PatchSet:
    """Overlapping patch grid, dropping patches more than half masked."""
    kind = PatchKind(kind)
    default_size, default_stride = PATCH_GEOMETRY[kind]
    size = size or default_size
    stride = stride or default_stride
    patch_set = PatchSet(kind=kind, size=size, stride=stride)
    scale = patch_set.scale
    height, width = mask.shape[0] // scale, mask.shape[1] // scale

    # integral image of excluded pixels
    excluded = np.pad((~mask.mask).astype(np.int64), ((1, 0), (1, 0)))
    excluded = excluded.cumsum(0).cumsum(1)
    footprint = size * scale
    area = footprint * footprint
    dropped = 0
    for y in _grid(height, size, stride):
        for x in _grid(width, size, stride):
            y0, x0 = y * scale, x * scale
            y1, x1 = y0 + footprint, x0 + footprint
            count = (
                excluded[y1, x1]
                - excluded[y0, x1]
                - excluded[y1, x0]
                + excluded[y0, x0]
            )
            if count / area > max_masked_fraction:
                dropped += 1
                continue
            patch_set.origins.append((y, x))
    logger.debug(
        "%s patches: kept %d, dropped %d (size %d stride %d)",
        kind,
        len(patch_set.origins),
        dropped,
        size,
        stride,
    )
    return patch_set


def random_crop(
    noisy: np.ndarray,
    clean: np.ndarray,
    mask: np.ndarray,
    size: int,
    rng: np.random.Generator,
    max_masked_fraction: float = MAX_MASKED_FRACTION,
    attempts: int = CROP_ATTEMPTS,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Random aligned crop of a training pair.

    ``size`` is in noisy coordinates. The clean image and mask may be at
    twice the noisy resolution (packed Bayer input). Crops more than half
    masked are redrawn; after ``attempts`` tries the least masked is used.
    """
    h, w = noisy.shape[-2:]
    scale = clean.shape[-2] // h
    if clean.shape[-2:] != (h * scale, w * scale) or mask.shape != clean.shape[-2:]:
        raise ShapeMismatch(
            f"crop inputs disagree: {noisy.shape}, {clean.shape}, {mask.shape}"
        )
    if h < size or w < size:
        raise TooSmall(f"{h}x{w} is smaller than crop size {size}")
    best = None
    for _ in range(max(1, attempts)):
        y = int(rng.integers(0, h - size + 1))
        x = int(rng.integers(0, w - size + 1))
        ys = slice(y * scale, (y + size) * scale)
        xs = slice(x * scale, (x + size) * scale)
        fraction = 1.0 - float(mask[ys, xs].mean())
        if best is None or fraction < best[0]:
            best = (fraction, y, x, ys, xs)
        if fraction <= max_masked_fraction:
            break
    _, y, x, ys, xs = best
    return noisy[..., y : y + size, x : x + size], clean[..., ys, xs], mask[ys, xs]


def write_rawpatch(path: Union[str, Path], array: np.ndarray) -> None:
    """Planar little-endian float32 export with a CxHxW header."""
    array = np.asarray(array)
    if array.ndim == 2:
        array = array[None]
    if array.ndim != 3:
        raise ShapeMismatch(f"rawpatch must be CxHxW, got {array.shape}")
    header = _RAWPATCH_HEADER.pack(RAWPATCH_MAGIC, *array.shape)
    Path(path).write_bytes(header + np.ascontiguousarray(array, dtype="<f4").tobytes())


def read_rawpatch(path: Union[str, Path]) -> np.ndarray:
    blob = Path(path).read_bytes()
    if len(blob) < _RAWPATCH_HEADER.size:
        raise ParseError(f"{path}: truncated rawpatch header")
    magic, channels, height, width = _RAWPATCH_HEADER.unpack_from(blob)
    if magic != RAWPATCH_MAGIC:
        raise ParseError(f"{path}: bad rawpatch magic {magic!r}")
    expected = channels * height * width * 4
    if len(blob) - _RAWPATCH_HEADER.size != expected:
        raise ParseError(f"{path}: payload does not match {channels}x{height}x{width}")
    data = np.frombuffer(blob, dtype="<f4", offset=_RAWPATCH_HEADER.size)
    return data.reshape(channels, height, width).astype(np.float32)
