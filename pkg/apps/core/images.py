"""Image containers shared by every stage of the pipeline.

All containers are frozen dataclasses around numpy arrays. Operations never
mutate an input container; they return a new one.
"""

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .enums import CfaPattern, ColorSpace
from .exceptions import ShapeMismatch

# Fixed plane order of PackedBayer.
PLANE_ORDER = ("R", "G1", "G2", "B")


@dataclass(frozen=True, eq=False)
class SensorMeta:
    """Per-camera level and colour metadata.

    ``black_level`` is stored per colour plane in ``PLANE_ORDER``; a scalar
    broadcasts to all four planes.
    """

    black_level: np.ndarray
    white_level: float
    xyz_to_camrgb: np.ndarray
    camera_id: str = "unknown"

    def __post_init__(self):
        black = np.asarray(self.black_level, dtype=np.float64).reshape(-1)
        if black.size == 1:
            black = np.repeat(black, 4)
        if black.size != 4:
            raise ShapeMismatch(f"black_level needs 1 or 4 values, got {black.size}")
        matrix = np.asarray(self.xyz_to_camrgb, dtype=np.float64).reshape(3, 3)
        object.__setattr__(self, "black_level", black)
        object.__setattr__(self, "white_level", float(self.white_level))
        object.__setattr__(self, "xyz_to_camrgb", matrix)


@dataclass(frozen=True, eq=False)
class BayerMosaic:
    """Single-plane sensor mosaic."""

    data: np.ndarray
    cfa: CfaPattern
    meta: Optional[SensorMeta] = None

    def __post_init__(self):
        if self.data.ndim != 2:
            raise ShapeMismatch(f"mosaic must be 2-D, got shape {self.data.shape}")
        object.__setattr__(self, "cfa", CfaPattern(self.cfa))

    @property
    def height(self) -> int:
        return int(self.data.shape[0])

    @property
    def width(self) -> int:
        return int(self.data.shape[1])

    def with_data(
        self, data: np.ndarray, cfa: Optional[CfaPattern] = None
    ) -> "BayerMosaic":
        """Return a copy carrying new pixel data (and optionally a new phase)."""
        return replace(self, data=data, cfa=cfa if cfa is not None else self.cfa)


@dataclass(frozen=True, eq=False)
class PackedBayer:
    """RGGB mosaic split into four half-resolution planes (R, G1, G2, B)."""

    planes: np.ndarray
    height: int
    width: int
    meta: Optional[SensorMeta] = None

    def __post_init__(self):
        expected = (4, self.height // 2, self.width // 2)
        if self.planes.shape != expected:
            raise ShapeMismatch(
                f"packed planes shape {self.planes.shape} != {expected}"
            )


@dataclass(frozen=True, eq=False)
class LinearRgbImage:
    """Three-channel linear image, the common working representation."""

    channels: np.ndarray
    colorspace: ColorSpace = ColorSpace.CAMRGB

    def __post_init__(self):
        if self.channels.ndim != 3 or self.channels.shape[0] != 3:
            raise ShapeMismatch(
                f"linear RGB image must be 3xHxW, got {self.channels.shape}"
            )
        object.__setattr__(self, "colorspace", ColorSpace(self.colorspace))

    @property
    def height(self) -> int:
        return int(self.channels.shape[1])

    @property
    def width(self) -> int:
        return int(self.channels.shape[2])

    def with_channels(
        self, channels: np.ndarray, colorspace: Optional[ColorSpace] = None
    ) -> "LinearRgbImage":
        return LinearRgbImage(
            channels=channels,
            colorspace=colorspace if colorspace is not None else self.colorspace,
        )


@dataclass(frozen=True, eq=False)
class DevelopedImage:
    """Display-referred image with every value in [0, 1]."""

    channels: np.ndarray

    def __post_init__(self):
        if self.channels.ndim != 3 or self.channels.shape[0] != 3:
            raise ShapeMismatch(
                f"developed image must be 3xHxW, got {self.channels.shape}"
            )
        object.__setattr__(
            self, "channels", np.clip(self.channels, 0.0, 1.0).astype(np.float32)
        )

    def to_uint8(self) -> np.ndarray:
        """HxWx3 8-bit array for image writers."""
        return np.round(self.channels.transpose(1, 2, 0) * 255.0).astype(np.uint8)
