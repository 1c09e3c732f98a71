"""Image quality metrics: MS-SSIM, SSIM, L1 and PSNR.

Images are 3xHxW (or NxCxHxW) arrays or tensors. The SSIM family is
implemented in torch so the same code serves evaluation and the
differentiable training loss.
"""

import math
from typing import Union

import numpy as np
import torch
import torch.nn.functional as F

from apps.core.exceptions import DegenerateImage, ShapeMismatch, TooSmall

ArrayLike = Union[np.ndarray, torch.Tensor]

MSSSIM_WEIGHTS = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)
WINDOW_SIZE = 11
WINDOW_SIGMA = 1.5
K1 = 0.01
K2 = 0.03
DATA_RANGE = 1.0


def min_side_for(win_size: int, levels: int = len(MSSSIM_WEIGHTS)) -> int:
    """Smallest image side on which every pyramid level fits the window."""
    return win_size * 2 ** (levels - 1)


def fit_window(height: int, width: int) -> int:
    """Largest odd window <= 11 whose five-scale pyramid fits the image."""
    side = min(height, width)
    for win in range(WINDOW_SIZE, 2, -2):
        if side >= min_side_for(win):
            return win
    raise TooSmall(f"{height}x{width} is too small for a five-scale pyramid")


def gaussian_window(win_size: int, sigma: float = WINDOW_SIGMA, dtype=torch.float64):
    coords = torch.arange(win_size, dtype=dtype) - win_size // 2
    g = torch.exp(-(coords**2) / (2 * sigma**2))
    return g / g.sum()


def _as_batch(x: ArrayLike) -> torch.Tensor:
    t = torch.as_tensor(x) if isinstance(x, np.ndarray) else x
    if t.dim() == 3:
        t = t.unsqueeze(0)
    if t.dim() != 4:
        raise ShapeMismatch(f"expected CxHxW or NxCxHxW, got {tuple(t.shape)}")
    return t if t.is_floating_point() else t.double()


def _blur(x: torch.Tensor, win: torch.Tensor) -> torch.Tensor:
    """Separable valid-mode Gaussian filter, one window per channel."""
    channels = x.shape[1]
    w = win.to(dtype=x.dtype, device=x.device)
    kh = w.view(1, 1, -1, 1).repeat(channels, 1, 1, 1)
    kw = w.view(1, 1, 1, -1).repeat(channels, 1, 1, 1)
    return F.conv2d(F.conv2d(x, kh, groups=channels), kw, groups=channels)


def _ssim_components(x: torch.Tensor, y: torch.Tensor, win: torch.Tensor):
    """Per-image, per-channel mean SSIM and contrast-structure terms."""
    c1 = (K1 * DATA_RANGE) ** 2
    c2 = (K2 * DATA_RANGE) ** 2
    mu_x = _blur(x, win)
    mu_y = _blur(y, win)
    mu_xx, mu_yy, mu_xy = mu_x * mu_x, mu_y * mu_y, mu_x * mu_y
    sigma_xx = _blur(x * x, win) - mu_xx
    sigma_yy = _blur(y * y, win) - mu_yy
    sigma_xy = _blur(x * y, win) - mu_xy

    cs_map = (2 * sigma_xy + c2) / (sigma_xx + sigma_yy + c2)
    ssim_map = ((2 * mu_xy + c1) / (mu_xx + mu_yy + c1)) * cs_map
    return ssim_map.flatten(2).mean(-1), cs_map.flatten(2).mean(-1)


def _prepare(a: ArrayLike, b: ArrayLike) -> tuple[torch.Tensor, torch.Tensor]:
    x, y = _as_batch(a), _as_batch(b)
    if x.shape != y.shape:
        raise ShapeMismatch(f"shapes differ: {tuple(x.shape)} vs {tuple(y.shape)}")
    dtype = torch.promote_types(x.dtype, y.dtype)
    # unclipped raw data may exceed 1 slightly
    return x.to(dtype).clamp(0.0, 1.0), y.to(dtype).clamp(0.0, 1.0)


def ms_ssim_batch(x: torch.Tensor, y: torch.Tensor, win_size: int = WINDOW_SIZE):
    """Differentiable five-scale MS-SSIM per image (channels averaged)."""
    side = min(x.shape[-2:])
    if win_size % 2 == 0:
        raise ValueError(f"window size must be odd, got {win_size}")
    if side < min_side_for(win_size):
        raise TooSmall(
            f"side {side} < {min_side_for(win_size)} required by window {win_size}"
        )
    win = gaussian_window(win_size)
    weights = torch.tensor(MSSSIM_WEIGHTS, dtype=x.dtype, device=x.device)
    levels = len(MSSSIM_WEIGHTS)
    terms = []
    for level in range(levels):
        ssim_term, cs = _ssim_components(x, y, win)
        if level < levels - 1:
            terms.append(torch.relu(cs))
            padding = [s % 2 for s in x.shape[2:]]
            x = F.avg_pool2d(x, kernel_size=2, padding=padding)
            y = F.avg_pool2d(y, kernel_size=2, padding=padding)
    terms.append(torch.relu(ssim_term))
    stacked = torch.stack(terms, dim=0)
    per_channel = torch.prod(stacked ** weights.view(-1, 1, 1), dim=0)
    return per_channel.mean(dim=1)


def ssim_batch(x: torch.Tensor, y: torch.Tensor, win_size: int = WINDOW_SIZE):
    """Single-scale SSIM per image (channels averaged)."""
    if min(x.shape[-2:]) < win_size:
        raise TooSmall(f"image smaller than the {win_size}x{win_size} window")
    ssim_term, _ = _ssim_components(x, y, gaussian_window(win_size))
    return ssim_term.mean(dim=1)


def ms_ssim(a: ArrayLike, b: ArrayLike, win_size: int = WINDOW_SIZE) -> float:
    """Mean five-scale MS-SSIM of two images (or batches), in [0, 1]."""
    x, y = _prepare(a, b)
    with torch.no_grad():
        value = ms_ssim_batch(x, y, win_size).mean().item()
    return float(min(max(value, 0.0), 1.0))


def ssim(a: ArrayLike, b: ArrayLike, win_size: int = WINDOW_SIZE) -> float:
    x, y = _prepare(a, b)
    with torch.no_grad():
        return float(ssim_batch(x, y, win_size).mean().item())


def _pair_arrays(a: ArrayLike, b: ArrayLike) -> tuple[np.ndarray, np.ndarray]:
    a = a.detach().cpu().numpy() if isinstance(a, torch.Tensor) else np.asarray(a)
    b = b.detach().cpu().numpy() if isinstance(b, torch.Tensor) else np.asarray(b)
    if a.shape != b.shape:
        raise ShapeMismatch(f"shapes differ: {a.shape} vs {b.shape}")
    return a.astype(np.float64), b.astype(np.float64)


def l1(a: ArrayLike, b: ArrayLike) -> float:
    """Mean absolute difference."""
    x, y = _pair_arrays(a, b)
    return float(np.mean(np.abs(x - y)))


def psnr(
    a: ArrayLike, b: ArrayLike, peak: float = 1.0, raise_on_identical: bool = False
) -> float:
    """Peak signal-to-noise ratio in dB.

    Identical inputs have no finite PSNR: ``math.inf`` is returned, or
    DegenerateImage raised when ``raise_on_identical`` is set.
    """
    x, y = _pair_arrays(a, b)
    mse = float(np.mean((x - y) ** 2))
    if mse == 0.0:
        if raise_on_identical:
            raise DegenerateImage("PSNR is undefined for identical images")
        return math.inf
    return 10.0 * math.log10(peak**2 / mse)


def adaptive_ms_ssim(a: ArrayLike, b: ArrayLike) -> float:
    """MS-SSIM with the largest window the image size allows.

    Images too small for any five-scale pyramid fall back to single-scale
    SSIM, clamped to [0, 1].
    """
    x, y = _prepare(a, b)
    height, width = x.shape[-2:]
    try:
        return ms_ssim(x, y, win_size=fit_window(height, width))
    except TooSmall:
        side = min(height, width)
        win = min(WINDOW_SIZE, side if side % 2 else side - 1)
        if win < 1:
            raise
        return float(min(max(ssim(x, y, win_size=win), 0.0), 1.0))
