"""Gain matching and translation alignment of noisy/clean pairs.

Shift convention: ``noisy[y + shift_y, x + shift_x]`` corresponds to
``clean[y, x]``.
"""

import logging
from dataclasses import dataclass
from typing import Union

import numpy as np

from apps.core.exceptions import DegenerateImage, ShapeMismatch, TooSmall
from apps.core.images import LinearRgbImage

logger = logging.getLogger(__name__)

ImageLike = Union[LinearRgbImage, np.ndarray]

MAX_SHIFT = 128
DISCARD_THRESHOLD = 0.035
MIN_OVERLAP = 64
MIN_NOISY_MEAN = 1e-9
EXHAUSTIVE_RADIUS = 16


@dataclass(frozen=True)
class AlignmentResult:
    shift_y: int
    shift_x: int
    loss: float
    discarded: bool

    @property
    def shift(self) -> tuple[int, int]:
        return (self.shift_y, self.shift_x)


@dataclass(frozen=True)
class BayerShift:
    """Half-resolution shift plus the parity trims it implies."""

    shift_y: int
    shift_x: int
    trim_y: bool
    trim_x: bool


def _channels(img: ImageLike) -> np.ndarray:
    return img.channels if isinstance(img, LinearRgbImage) else np.asarray(img)


def match_gain(
    noisy: LinearRgbImage, clean: LinearRgbImage
) -> tuple[LinearRgbImage, float]:
    """Scale the noisy image so its mean equals the clean mean."""
    if noisy.channels.shape != clean.channels.shape:
        raise ShapeMismatch(
            f"pair shapes differ: {noisy.channels.shape} vs {clean.channels.shape}"
        )
    noisy_mean = float(np.mean(noisy.channels, dtype=np.float64))
    clean_mean = float(np.mean(clean.channels, dtype=np.float64))
    if noisy_mean <= MIN_NOISY_MEAN:
        raise DegenerateImage(f"noisy mean {noisy_mean:.3g} is too close to zero")
    if clean_mean <= 0:
        raise DegenerateImage(f"clean mean {clean_mean:.3g} must be positive")
    gain = clean_mean / noisy_mean
    scaled = (noisy.channels.astype(np.float64) * gain).astype(noisy.channels.dtype)
    return noisy.with_channels(scaled), gain


def _axis_bounds(size: int, shift: int) -> tuple[slice, slice]:
    clean = slice(max(0, -shift), size - max(0, shift))
    noisy = slice(max(0, shift), size + min(0, shift))
    return noisy, clean


def overlap_views(
    noisy: np.ndarray, clean: np.ndarray, shift: tuple[int, int]
) -> tuple[np.ndarray, np.ndarray]:
    """Views of the region both images cover under ``shift``.

    Works on any (..., H, W) arrays of equal spatial size.
    """
    if noisy.shape[-2:] != clean.shape[-2:]:
        raise ShapeMismatch(
            f"spatial sizes differ: {noisy.shape[-2:]} vs {clean.shape[-2:]}"
        )
    height, width = clean.shape[-2:]
    ny, cy = _axis_bounds(height, shift[0])
    nx, cx = _axis_bounds(width, shift[1])
    return noisy[..., ny, nx], clean[..., cy, cx]


def overlap_size(height: int, width: int, shift: tuple[int, int]) -> tuple[int, int]:
    return height - abs(shift[0]), width - abs(shift[1])


class _LossSurface:
    """Cached mean-L1 evaluations over candidate shifts."""

    def __init__(self, noisy: np.ndarray, clean: np.ndarray, min_overlap: int):
        if noisy.shape != clean.shape:
            raise ShapeMismatch(f"pair shapes differ: {noisy.shape} vs {clean.shape}")
        self.noisy = noisy.astype(np.float32, copy=False)
        self.clean = clean.astype(np.float32, copy=False)
        self.height, self.width = clean.shape[-2:]
        self.min_overlap = min_overlap
        self.cache: dict[tuple[int, int], float] = {}

    def feasible(self, shift: tuple[int, int]) -> bool:
        h, w = overlap_size(self.height, self.width, shift)
        return h >= self.min_overlap and w >= self.min_overlap

    def __call__(self, shift: tuple[int, int]) -> float:
        if shift not in self.cache:
            n, c = overlap_views(self.noisy, self.clean, shift)
            self.cache[shift] = float(np.mean(np.abs(n - c), dtype=np.float64))
        return self.cache[shift]


NEIGHBOURHOOD = [(dy, dx) for dy in (-1, 0, 1) for dx in (-1, 0, 1) if (dy, dx) != (0, 0)]


def align_pair(
    noisy: ImageLike,
    clean: ImageLike,
    max_shift: int = MAX_SHIFT,
    discard_threshold: float = DISCARD_THRESHOLD,
    min_overlap: int = MIN_OVERLAP,
) -> AlignmentResult:
    """Hill-climb the integer shift minimizing mean L1 over the overlap.

    Starts at (0, 0) and moves to the best strict improvement in the 3x3
    neighbourhood until none exists. Candidates beyond ``max_shift`` or
    with an overlap below ``min_overlap`` are never evaluated.
    """
    surface = _LossSurface(_channels(noisy), _channels(clean), min_overlap)
    current = (0, 0)
    if not surface.feasible(current):
        raise TooSmall(
            f"{surface.height}x{surface.width} pair is below the "
            f"{min_overlap}x{min_overlap} minimum overlap"
        )
    current_loss = surface(current)
    while True:
        best, best_loss = current, current_loss
        for dy, dx in NEIGHBOURHOOD:
            candidate = (current[0] + dy, current[1] + dx)
            if max(abs(candidate[0]), abs(candidate[1])) > max_shift:
                continue
            if not surface.feasible(candidate):
                continue
            loss = surface(candidate)
            if loss < best_loss:
                best, best_loss = candidate, loss
        if best == current:
            break
        current, current_loss = best, best_loss

    result = AlignmentResult(
        shift_y=current[0],
        shift_x=current[1],
        loss=current_loss,
        discarded=current_loss > discard_threshold,
    )
    logger.debug(
        "Aligned pair: shift=%s loss=%.5f after %d evaluations",
        result.shift,
        result.loss,
        len(surface.cache),
    )
    return result


def align_exhaustive(
    noisy: ImageLike,
    clean: ImageLike,
    radius: int = EXHAUSTIVE_RADIUS,
    discard_threshold: float = DISCARD_THRESHOLD,
    min_overlap: int = MIN_OVERLAP,
) -> AlignmentResult:
    """Brute-force search over every shift within ``radius``.

    Ties resolve to the first shift in row-major (shift_y, shift_x) order.
    """
    surface = _LossSurface(_channels(noisy), _channels(clean), min_overlap)
    best, best_loss = None, np.inf
    for sy in range(-radius, radius + 1):
        for sx in range(-radius, radius + 1):
            if not surface.feasible((sy, sx)):
                continue
            loss = surface((sy, sx))
            if loss < best_loss:
                best, best_loss = (sy, sx), loss
    if best is None:
        raise TooSmall(f"no shift within radius {radius} keeps {min_overlap}px overlap")
    return AlignmentResult(
        shift_y=best[0],
        shift_x=best[1],
        loss=best_loss,
        discarded=best_loss > discard_threshold,
    )


ALIGNERS = {"hill_climb": align_pair, "exhaustive": align_exhaustive}


def halve_shift_for_bayer(shift: tuple[int, int]) -> BayerShift:
    """Floor-halve a full-resolution shift; odd components need a trim."""
    sy, sx = shift
    return BayerShift(
        shift_y=sy // 2, shift_x=sx // 2, trim_y=bool(sy % 2), trim_x=bool(sx % 2)
    )


def _bayer_axis_bounds(size: int, shift: int) -> tuple[slice, slice]:
    """Packed-plane slice of the noisy image and matching clean slice."""
    half = size // 2
    offset, odd = shift // 2, shift % 2
    if shift >= 0:
        return slice(offset + odd, half), slice(odd, size - shift)
    return slice(0, half + offset), slice(-shift, size - odd)


def crop_bayer_pair(
    noisy_planes: np.ndarray,
    clean_rgb: np.ndarray,
    mask: np.ndarray,
    shift: tuple[int, int],
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Matching views of packed noisy planes, clean RGB and its mask.

    Odd shifts trim one extra clean row/column so every noisy packed
    sample lands on a 2x2 clean block.
    """
    height, width = clean_rgb.shape[-2:]
    if noisy_planes.shape[-2:] != (height // 2, width // 2):
        raise ShapeMismatch(
            f"planes {noisy_planes.shape} do not match clean {clean_rgb.shape}"
        )
    if mask.shape[-2:] != (height, width):
        raise ShapeMismatch(f"mask {mask.shape} does not match clean {clean_rgb.shape}")
    ny, cy = _bayer_axis_bounds(height, shift[0])
    nx, cx = _bayer_axis_bounds(width, shift[1])
    return noisy_planes[..., ny, nx], clean_rgb[..., cy, cx], mask[..., cy, cx]
