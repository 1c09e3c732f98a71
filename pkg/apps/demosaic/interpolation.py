"""Bilinear and edge-aware demosaicing of RGGB mosaics.

Both demosaicers work on the packed (R, G1, G2, B) planes: every
neighbour lookup is a one-plane-sample shift with replicate padding,
which is the same as replicating the nearest same-colour sample of the
full-resolution mosaic at its borders.
"""

import logging

import numpy as np

from apps.core.enums import ColorSpace
from apps.core.exceptions import ShapeMismatch
from apps.core.images import BayerMosaic, LinearRgbImage
from apps.core.mosaic import pack_planes

logger = logging.getLogger(__name__)


class _Shifter:
    """Replicate-padded shifted views of a half-resolution plane."""

    def __init__(self, plane: np.ndarray):
        self.height, self.width = plane.shape
        self.padded = np.pad(plane, 1, mode="edge")

    def __call__(self, di: int, dj: int) -> np.ndarray:
        """View of ``plane[i + di, j + dj]`` for every (i, j)."""
        return self.padded[
            1 + di : 1 + di + self.height, 1 + dj : 1 + dj + self.width
        ]


def interleave(r: np.ndarray, g1: np.ndarray, g2: np.ndarray, b: np.ndarray):
    """Full-resolution plane from values at the R, G1, G2 and B sites."""
    height, width = r.shape
    out = np.empty((2 * height, 2 * width), dtype=r.dtype)
    out[0::2, 0::2] = r
    out[0::2, 1::2] = g1
    out[1::2, 0::2] = g2
    out[1::2, 1::2] = b
    return out


def _check_planes(planes: np.ndarray) -> None:
    if planes.ndim != 3 or planes.shape[0] != 4:
        raise ShapeMismatch(f"expected (4, h, w) planes, got {planes.shape}")
    if planes.shape[1] < 2 or planes.shape[2] < 2:
        raise ShapeMismatch(f"planes {planes.shape} too small to demosaic")


def _diagonal_mean(shift: _Shifter, down: int, right: int) -> np.ndarray:
    """Mean of the four diagonal samples around a site.

    ``down``/``right`` are 0 when the site sits above/left of the block
    of diagonal samples, -1 otherwise.
    """
    return 0.25 * (
        shift(down, right)
        + shift(down, right + 1)
        + shift(down + 1, right)
        + shift(down + 1, right + 1)
    )


def bilinear_planes(planes: np.ndarray) -> np.ndarray:
    """Bilinear demosaic of packed planes into a 3xHxW array."""
    _check_planes(planes)
    r, g1, g2, b = planes
    R, G1, G2, B = (_Shifter(p) for p in planes)

    green_at_r = 0.25 * (G1(0, -1) + G1(0, 0) + G2(-1, 0) + G2(0, 0))
    green_at_b = 0.25 * (G2(0, 0) + G2(0, 1) + G1(0, 0) + G1(1, 0))

    red_at_g1 = 0.5 * (R(0, 0) + R(0, 1))
    red_at_g2 = 0.5 * (R(0, 0) + R(1, 0))
    red_at_b = _diagonal_mean(R, 0, 0)

    blue_at_g1 = 0.5 * (B(-1, 0) + B(0, 0))
    blue_at_g2 = 0.5 * (B(0, -1) + B(0, 0))
    blue_at_r = _diagonal_mean(B, -1, -1)

    return np.stack(
        [
            interleave(r, red_at_g1, red_at_g2, red_at_b),
            interleave(green_at_r, g1, g2, green_at_b),
            interleave(blue_at_r, blue_at_g1, blue_at_g2, b),
        ]
    )


def _directional_green(
    left: np.ndarray, right: np.ndarray, up: np.ndarray, down: np.ndarray
) -> np.ndarray:
    """Interpolate along the axis with the smaller green difference."""
    horizontal = np.abs(left - right)
    vertical = np.abs(up - down)
    return np.where(
        horizontal < vertical,
        0.5 * (left + right),
        np.where(
            vertical < horizontal,
            0.5 * (up + down),
            0.25 * (left + right + up + down),
        ),
    )


def edge_aware_planes(planes: np.ndarray) -> np.ndarray:
    """Gradient-guided demosaic of packed planes into a 3xHxW array.

    Green is filled first along the lower-gradient axis; red and blue are
    then interpolated bilinearly on the R-G and B-G difference planes.
    """
    _check_planes(planes)
    r, g1, g2, b = planes
    G1, G2 = _Shifter(g1), _Shifter(g2)

    green_at_r = _directional_green(G1(0, -1), G1(0, 0), G2(-1, 0), G2(0, 0))
    green_at_b = _directional_green(G2(0, 0), G2(0, 1), G1(0, 0), G1(1, 0))

    DR = _Shifter(r - green_at_r)
    DB = _Shifter(b - green_at_b)

    red_at_g1 = g1 + 0.5 * (DR(0, 0) + DR(0, 1))
    red_at_g2 = g2 + 0.5 * (DR(0, 0) + DR(1, 0))
    red_at_b = green_at_b + _diagonal_mean(DR, 0, 0)

    blue_at_g1 = g1 + 0.5 * (DB(-1, 0) + DB(0, 0))
    blue_at_g2 = g2 + 0.5 * (DB(0, -1) + DB(0, 0))
    blue_at_r = green_at_r + _diagonal_mean(DB, -1, -1)

    return np.stack(
        [
            interleave(r, red_at_g1, red_at_g2, red_at_b),
            interleave(green_at_r, g1, g2, green_at_b),
            interleave(blue_at_r, blue_at_g1, blue_at_g2, b),
        ]
    )


def demosaic_bilinear(mosaic: BayerMosaic) -> LinearRgbImage:
    """Average the nearest same-colour neighbours of every missing sample."""
    planes = pack_planes(mosaic).planes
    return LinearRgbImage(bilinear_planes(planes), colorspace=ColorSpace.CAMRGB)


def demosaic_edge_aware(mosaic: BayerMosaic) -> LinearRgbImage:
    planes = pack_planes(mosaic).planes
    return LinearRgbImage(edge_aware_planes(planes), colorspace=ColorSpace.CAMRGB)


DEMOSAICERS = {
    "bilinear": demosaic_bilinear,
    "edge_aware": demosaic_edge_aware,
}


def demosaic(mosaic: BayerMosaic, method: str = "edge_aware") -> LinearRgbImage:
    """Dispatch by method name."""
    try:
        func = DEMOSAICERS[method]
    except KeyError:
        raise ValueError(
            f"unknown demosaic method {method!r}; choose from {sorted(DEMOSAICERS)}"
        )
    logger.debug("Demosaicing %dx%d mosaic (%s)", mosaic.height, mosaic.width, method)
    return func(mosaic)
