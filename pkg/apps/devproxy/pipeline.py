"""Proxy development: tone map, edge boost, gamma, contrast, sharpening."""

import logging

import numpy as np
from scipy import ndimage

from apps.core.enums import ColorSpace
from apps.core.images import DevelopedImage, LinearRgbImage

from .params import DevParams

logger = logging.getLogger(__name__)

# Rec. 2020 luma weights.
LUMA_WEIGHTS = np.array([0.2627, 0.6780, 0.0593])
MIN_SIGMOID_GAIN = 1e-6


def log_tonemap(rgb: np.ndarray, strength: float) -> np.ndarray:
    """Compress luminance with ``log(1 + k L) / log(1 + k)``, keeping chroma."""
    if strength <= 0:
        return rgb
    luma = np.tensordot(LUMA_WEIGHTS, rgb, axes=1)
    mapped = np.log1p(strength * luma) / np.log1p(strength)
    ratio = np.divide(mapped, luma, out=np.zeros_like(luma), where=luma > 0)
    return rgb * ratio


def laplacian_boost(rgb: np.ndarray, gain: float) -> np.ndarray:
    """Add the 4-neighbour edge response (centre-positive Laplacian)."""
    # ndimage.laplace is centre-negative; flipping it sharpens instead of blurring
    edges = np.stack([-ndimage.laplace(channel, mode="nearest") for channel in rgb])
    return rgb + gain * edges


def gamma_encode(rgb: np.ndarray, gamma: float) -> np.ndarray:
    return np.power(np.maximum(rgb, 0.0), 1.0 / gamma)


def sigmoid_contrast(rgb: np.ndarray, gain: float, midpoint: float) -> np.ndarray:
    """Logistic S-curve rescaled so 0 maps to 0 and 1 maps to 1."""
    if gain < MIN_SIGMOID_GAIN:
        return rgb

    def curve(v):
        return 1.0 / (1.0 + np.exp(-gain * (v - midpoint)))

    low, high = curve(0.0), curve(1.0)
    return (curve(rgb) - low) / (high - low)


def unsharp_mask(rgb: np.ndarray, sigma: float, amount: float) -> np.ndarray:
    blurred = ndimage.gaussian_filter(rgb, sigma=(0, sigma, sigma), mode="nearest")
    return rgb + amount * (rgb - blurred)


def develop_proxy(img: LinearRgbImage, params: DevParams) -> DevelopedImage:
    """Run the enabled stages in fixed order, then clamp to [0, 1]."""
    if img.colorspace != ColorSpace.REC2020:
        logger.warning("Developing a %s image as if it were Rec. 2020", img.colorspace)
    rgb = np.maximum(img.channels.astype(np.float64), 0.0)
    if params.enabled("log_tonemap"):
        rgb = log_tonemap(rgb, params.log_tonemap_strength)
    if params.enabled("laplacian"):
        rgb = laplacian_boost(rgb, params.laplacian_gain)
    if params.enabled("gamma"):
        rgb = gamma_encode(rgb, params.gamma)
    if params.enabled("sigmoid"):
        rgb = sigmoid_contrast(rgb, params.sigmoid_gain, params.sigmoid_midpoint)
    if params.enabled("unsharp"):
        rgb = unsharp_mask(rgb, params.unsharp_sigma, params.unsharp_amount)
    return DevelopedImage(np.clip(rgb, 0.0, 1.0))
