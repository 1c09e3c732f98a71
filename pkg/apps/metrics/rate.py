"""Bits-per-pixel accounting from symbol likelihoods or coded streams."""

from typing import Union

import numpy as np
import torch

from apps.core.exceptions import BadProbability

ArrayLike = Union[np.ndarray, torch.Tensor]


def _check_pixels(image_pixels: int) -> None:
    if image_pixels <= 0:
        raise ValueError(f"image_pixels must be positive, got {image_pixels}")


def analytic_bpp(likelihoods: ArrayLike, image_pixels: int):
    """``-sum(log2 p) / image_pixels``.

    Torch input returns a differentiable scalar tensor; anything else
    returns a float.
    """
    _check_pixels(image_pixels)
    if isinstance(likelihoods, torch.Tensor):
        with torch.no_grad():
            bad = torch.any(
                ~torch.isfinite(likelihoods) | (likelihoods <= 0) | (likelihoods > 1)
            ).item()
        if bad:
            raise BadProbability("likelihoods must lie in (0, 1]")
        return -torch.log2(likelihoods).sum() / image_pixels
    p = np.asarray(likelihoods, dtype=np.float64)
    if np.any(~np.isfinite(p) | (p <= 0) | (p > 1)):
        raise BadProbability("likelihoods must lie in (0, 1]")
    return float(-np.log2(p).sum() / image_pixels)


def coded_bpp(num_bytes: int, image_pixels: int) -> float:
    """Rate of an actual bitstream."""
    _check_pixels(image_pixels)
    return 8.0 * num_bytes / image_pixels
