"""CFA standardization, level normalization and Bayer plane packing."""

import logging
from typing import Optional

import numpy as np

from .enums import CfaPattern
from .exceptions import NotRggb, OddDims, ShapeMismatch, TooSmall
from .images import BayerMosaic, PackedBayer, SensorMeta
from .validators import validate_sensor_meta

logger = logging.getLogger(__name__)

MIN_MOSAIC_SIDE = 4


def _check_min_size(height: int, width: int) -> None:
    if height < MIN_MOSAIC_SIDE or width < MIN_MOSAIC_SIDE:
        raise TooSmall(
            f"mosaic must be at least {MIN_MOSAIC_SIDE}x{MIN_MOSAIC_SIDE}, "
            f"got {height}x{width}"
        )


def site_plane_index(cfa: CfaPattern, height: int, width: int) -> np.ndarray:
    """Plane index (0=R, 1=G1, 2=G2, 3=B) of every site of a mosaic.

    G1 is the green sharing a row with red, G2 the green sharing a column.
    """
    oy, ox = CfaPattern(cfa).offset
    rows = (np.arange(height) - oy) % 2
    cols = (np.arange(width) - ox) % 2
    return (2 * rows[:, None] + cols[None, :]).astype(np.intp)


def normalize_levels(
    raw: np.ndarray, meta: SensorMeta, cfa: CfaPattern = CfaPattern.RGGB
) -> BayerMosaic:
    """Subtract the black level and scale by the usable sensor range.

    Values below black clamp to 0. Values above white are kept, so the
    result may slightly exceed 1.
    """
    raw = np.asarray(raw)
    if raw.ndim != 2:
        raise ShapeMismatch(f"raw mosaic must be 2-D, got shape {raw.shape}")
    _check_min_size(*raw.shape)
    validate_sensor_meta(meta)

    planes = site_plane_index(cfa, *raw.shape)
    black = meta.black_level[planes]
    scale = meta.white_level - black
    data = (raw.astype(np.float64) - black) / scale
    data = np.maximum(data, 0.0).astype(np.float32)
    return BayerMosaic(data=data, cfa=CfaPattern(cfa), meta=meta)


def crop_to_rggb(mosaic: BayerMosaic) -> BayerMosaic:
    """Crop leading rows/columns so the mosaic starts on a red site.

    A trailing row/column is dropped as well when needed to keep both
    dimensions even; at most two rows and two columns are removed.
    """
    _check_min_size(mosaic.height, mosaic.width)
    oy, ox = mosaic.cfa.offset
    height = (mosaic.height - oy) // 2 * 2
    width = (mosaic.width - ox) // 2 * 2
    if (oy, ox) != (0, 0) or (height, width) != (mosaic.height, mosaic.width):
        logger.debug(
            "Cropping %s mosaic %dx%d to RGGB %dx%d",
            mosaic.cfa,
            mosaic.height,
            mosaic.width,
            height,
            width,
        )
    data = mosaic.data[oy : oy + height, ox : ox + width]
    return mosaic.with_data(data, cfa=CfaPattern.RGGB)


def _require_rggb_even(mosaic: BayerMosaic) -> None:
    if mosaic.cfa != CfaPattern.RGGB:
        raise NotRggb(f"expected RGGB mosaic, got {mosaic.cfa}")
    if mosaic.height % 2 or mosaic.width % 2:
        raise OddDims(f"mosaic dims {mosaic.height}x{mosaic.width} must be even")


def pack_planes(mosaic: BayerMosaic) -> PackedBayer:
    """Split an RGGB mosaic into (R, G1, G2, B) half-resolution planes."""
    _require_rggb_even(mosaic)
    d = mosaic.data
    planes = np.stack([d[0::2, 0::2], d[0::2, 1::2], d[1::2, 0::2], d[1::2, 1::2]])
    return PackedBayer(
        planes=planes, height=mosaic.height, width=mosaic.width, meta=mosaic.meta
    )


def unpack_planes(packed: PackedBayer) -> BayerMosaic:
    """Exact inverse of pack_planes."""
    data = np.empty((packed.height, packed.width), dtype=packed.planes.dtype)
    data[0::2, 0::2] = packed.planes[0]
    data[0::2, 1::2] = packed.planes[1]
    data[1::2, 0::2] = packed.planes[2]
    data[1::2, 1::2] = packed.planes[3]
    return BayerMosaic(data=data, cfa=CfaPattern.RGGB, meta=packed.meta)


def mosaic_from_rgb(
    rgb: np.ndarray,
    cfa: CfaPattern = CfaPattern.RGGB,
    meta: Optional[SensorMeta] = None,
) -> BayerMosaic:
    """Sample a 3xHxW image through a Bayer filter of the given phase."""
    rgb = np.asarray(rgb)
    if rgb.ndim != 3 or rgb.shape[0] != 3:
        raise ShapeMismatch(f"expected 3xHxW image, got {rgb.shape}")
    _, height, width = rgb.shape
    planes = site_plane_index(cfa, height, width)
    # plane index -> colour channel: R=0, G1=G2=1, B=2
    channel = np.array([0, 1, 1, 2])[planes]
    data = np.take_along_axis(rgb, channel[None], axis=0)[0]
    return BayerMosaic(data=data, cfa=CfaPattern(cfa), meta=meta)
