"""Masked rate-distortion loss."""

from dataclasses import dataclass
from typing import Optional, Union

import torch

from apps.color.matrices import apply_color_matrix_torch
from apps.core.exceptions import ShapeMismatch, TooSmall
from apps.metrics.quality import WINDOW_SIZE, fit_window, ms_ssim_batch, ssim_batch

DISPLAY_GAMMA = 2.2
_GAMMA_FLOOR = 1e-12


@dataclass
class RdLossTerms:
    distortion: torch.Tensor
    rate_bpp: torch.Tensor
    total: torch.Tensor
    x: torch.Tensor
    x_hat: torch.Tensor

    def as_floats(self) -> dict[str, float]:
        return {
            "distortion": float(self.distortion.detach()),
            "rate_bpp": float(self.rate_bpp.detach()),
            "total": float(self.total.detach()),
        }


def gamma_encode(values: torch.Tensor, gamma: float = DISPLAY_GAMMA) -> torch.Tensor:
    """``v ** (1 / gamma)`` for positive values, identity elsewhere."""
    safe = values.clamp_min(_GAMMA_FLOOR)
    return torch.where(values > 0, safe ** (1.0 / gamma), values)


def structural_similarity(x_hat: torch.Tensor, x: torch.Tensor) -> torch.Tensor:
    """Per-image MS-SSIM with the largest window that fits.

    Crops too small for any five-scale pyramid use single-scale SSIM.
    """
    height, width = x.shape[-2:]
    try:
        return ms_ssim_batch(x_hat, x, win_size=fit_window(height, width))
    except TooSmall:
        side = min(height, width)
        win = min(WINDOW_SIZE, side if side % 2 else side - 1)
        return ssim_batch(x_hat, x, win_size=win)


def rd_loss(
    x_hat: torch.Tensor,
    x: torch.Tensor,
    mask: Optional[torch.Tensor],
    lam: float,
    rate_bpp: Union[torch.Tensor, float] = 0.0,
    color: Optional[torch.Tensor] = None,
    gamma_before_loss: bool = False,
) -> RdLossTerms:
    """``total = (1 - MS-SSIM) + lam * rate_bpp`` over the included pixels.

    ``mask`` is (N, H, W) or (N, 1, H, W), True where a pixel counts;
    excluded reconstruction pixels are replaced by the target so they
    contribute no error. ``color`` converts a camera RGB reconstruction
    to the target's space first.
    """
    if x_hat.dim() != 4 or x_hat.shape[1] != 3:
        raise ShapeMismatch(
            f"reconstruction must be (N,3,H,W), got {tuple(x_hat.shape)}"
        )
    if x_hat.shape != x.shape:
        raise ShapeMismatch(
            f"reconstruction {tuple(x_hat.shape)} != target {tuple(x.shape)}"
        )
    if color is not None:
        x_hat = apply_color_matrix_torch(x_hat, color)
    if mask is not None:
        if mask.dim() == 3:
            mask = mask.unsqueeze(1)
        if mask.shape != (x.shape[0], 1, *x.shape[-2:]):
            raise ShapeMismatch(
                f"mask {tuple(mask.shape)} does not match target {tuple(x.shape)}"
            )
        x_hat = torch.where(mask.to(torch.bool), x_hat, x)
    if gamma_before_loss:
        x_hat, x = gamma_encode(x_hat), gamma_encode(x)

    distortion = 1.0 - structural_similarity(x_hat, x).mean()
    rate = torch.as_tensor(rate_bpp, dtype=distortion.dtype)
    return RdLossTerms(
        distortion=distortion,
        rate_bpp=rate,
        total=distortion + lam * rate,
        x=x,
        x_hat=x_hat,
    )
