"""Factorized per-channel entropy model over integer latents."""

from typing import Optional

import numpy as np
import torch
from torch import nn

from apps.core.exceptions import ShapeMismatch

SYMBOL_MIN = -128
SYMBOL_MAX = 127
NUM_SYMBOLS = SYMBOL_MAX - SYMBOL_MIN + 1
LIKELIHOOD_BOUND = 1e-9
CDF_PRECISION = 16


class EntropyModel(nn.Module):
    """Learned cumulative probability model, one table per latent channel.

    Each channel holds logits over the 256 representable symbols. The CDF
    is the piecewise-linear interpolation of the cumulative softmax between
    bin edges ``k - 128.5``, so it is non-decreasing by construction, 0 at
    the lower edge and 1 at the upper edge. A symbol's likelihood is
    ``CDF(v + 1/2) - CDF(v - 1/2)``, which for integer ``v`` is exactly its
    softmax probability. Zero logits give the uniform model (8 bits/symbol).
    """

    def __init__(self, channels: int):
        super().__init__()
        self.channels = channels
        self.logits = nn.Parameter(torch.zeros(channels, NUM_SYMBOLS))

    def pmf(self) -> torch.Tensor:
        return torch.softmax(self.logits, dim=-1)

    def _cumulative(self) -> tuple[torch.Tensor, torch.Tensor]:
        pmf = self.pmf()
        zero = torch.zeros_like(pmf[:, :1])
        return torch.cat([zero, torch.cumsum(pmf, dim=-1)], dim=-1), pmf

    def cdf(self, values: torch.Tensor) -> torch.Tensor:
        """CDF of every element of an (N, C, H, W) tensor under its channel."""
        if values.dim() != 4 or values.shape[1] != self.channels:
            raise ShapeMismatch(
                f"expected (N,{self.channels},H,W) latents, got {tuple(values.shape)}"
            )
        cumulative, pmf = self._cumulative()
        n, c, h, w = values.shape
        flat = values.transpose(0, 1).reshape(c, -1)
        position = (flat - (SYMBOL_MIN - 0.5)).clamp(0.0, float(NUM_SYMBOLS))
        index = position.detach().floor().clamp(max=NUM_SYMBOLS - 1).long()
        frac = position - index.to(position.dtype)
        cumulative = cumulative.to(values.dtype)
        pmf = pmf.to(values.dtype)
        out = cumulative.gather(1, index) + frac * pmf.gather(1, index)
        return out.reshape(c, n, h, w).transpose(0, 1)

    def likelihood(self, values: torch.Tensor) -> torch.Tensor:
        upper = self.cdf(values + 0.5)
        lower = self.cdf(values - 0.5)
        return (upper - lower).clamp(LIKELIHOOD_BOUND, 1.0)

    @staticmethod
    def quantize(
        values: torch.Tensor,
        training: bool,
        generator: Optional[torch.Generator] = None,
    ) -> torch.Tensor:
        """Additive uniform noise while training, clamped rounding otherwise."""
        if training:
            noise = torch.rand(
                values.shape, generator=generator, dtype=values.dtype
            ).to(values.device)
            return values + (noise - 0.5)
        return torch.round(values).clamp(SYMBOL_MIN, SYMBOL_MAX)

    def forward(
        self, latents: torch.Tensor, generator: Optional[torch.Generator] = None
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """Return (quantized latents, per-element likelihoods)."""
        quantized = self.quantize(latents, self.training, generator)
        return quantized, self.likelihood(quantized)

    def quantized_cdf(self, precision: int = CDF_PRECISION) -> np.ndarray:
        """Integer cumulative frequencies, shape (C, 257), summing to 2**precision.

        Every symbol gets a frequency of at least 1 so anything in range
        stays codable; the rounding remainder goes to the likeliest symbol.
        """
        total = 1 << precision
        with torch.no_grad():
            pmf = self.pmf().double().cpu().numpy()
        freqs = 1 + np.floor(pmf * (total - NUM_SYMBOLS)).astype(np.int64)
        remainder = total - freqs.sum(axis=1)
        freqs[np.arange(self.channels), pmf.argmax(axis=1)] += remainder
        cdf = np.zeros((self.channels, NUM_SYMBOLS + 1), dtype=np.int64)
        np.cumsum(freqs, axis=1, out=cdf[:, 1:])
        return cdf
