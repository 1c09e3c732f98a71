"""Sub-pixel rearrangement between channels and space."""

import numpy as np

from .exceptions import BadChannels, ShapeMismatch


def pixel_shuffle(tensor: np.ndarray, factor: int) -> np.ndarray:
    """Rearrange (C*r*r, H, W) into (C, r*H, r*W).

    ``out[c, r*i + di, r*j + dj] = tensor[c*r*r + di*r + dj, i, j]``, the
    same layout as ``torch.nn.PixelShuffle``.
    """
    if factor < 1:
        raise BadChannels(f"upscale factor must be >= 1, got {factor}")
    if tensor.ndim != 3:
        raise ShapeMismatch(f"expected CxHxW tensor, got shape {tensor.shape}")
    channels, height, width = tensor.shape
    if channels % (factor * factor):
        raise BadChannels(f"{channels} channels not divisible by {factor}^2")
    out_channels = channels // (factor * factor)
    return (
        tensor.reshape(out_channels, factor, factor, height, width)
        .transpose(0, 3, 1, 4, 2)
        .reshape(out_channels, height * factor, width * factor)
    )


def pixel_unshuffle(tensor: np.ndarray, factor: int) -> np.ndarray:
    """Exact inverse of pixel_shuffle."""
    if factor < 1:
        raise BadChannels(f"downscale factor must be >= 1, got {factor}")
    if tensor.ndim != 3:
        raise ShapeMismatch(f"expected CxHxW tensor, got shape {tensor.shape}")
    channels, height, width = tensor.shape
    if height % factor or width % factor:
        raise ShapeMismatch(f"{height}x{width} not divisible by {factor}")
    return (
        tensor.reshape(channels, height // factor, factor, width // factor, factor)
        .transpose(0, 2, 4, 1, 3)
        .reshape(channels * factor * factor, height // factor, width // factor)
    )
