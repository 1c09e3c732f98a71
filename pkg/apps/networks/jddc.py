"""Joint denoising (demosaicing) and compression autoencoder."""

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
import torch
from torch import nn

from apps.metrics.rate import analytic_bpp, coded_bpp

from .coder import range_decode, range_encode
from .configs import NEGATIVE_SLOPE, JddcConfig
from .entropy import EntropyModel
from .unet import OUTPUT_CHANNELS, check_input

KERNEL_SIZE = 5


def _down(in_channels: int, out_channels: int) -> nn.Conv2d:
    return nn.Conv2d(
        in_channels, out_channels, KERNEL_SIZE, stride=2, padding=KERNEL_SIZE // 2
    )


def _up(in_channels: int, out_channels: int) -> nn.ConvTranspose2d:
    return nn.ConvTranspose2d(
        in_channels,
        out_channels,
        KERNEL_SIZE,
        stride=2,
        padding=KERNEL_SIZE // 2,
        output_padding=1,
    )


class JddcOutput(NamedTuple):
    x_hat: torch.Tensor
    rate_bpp: torch.Tensor
    likelihoods: torch.Tensor


@dataclass(frozen=True)
class CompressedImage:
    """Range-coded latents of a batch plus what decoding needs."""

    data: bytes
    latent_shape: tuple[int, ...]
    image_pixels: int

    @property
    def bpp(self) -> float:
        return coded_bpp(len(self.data), self.image_pixels)


class JddcModel(nn.Module):
    """Stride-2 convolutional autoencoder with a factorized entropy model.

    The encoder has ``stages`` 5x5 stride-2 convolutions; the decoder
    mirrors it with transposed convolutions. With the Bayer head the
    decoder ends at packed resolution and one more convolution plus a 2x
    PixelShuffle produces full-resolution camera RGB.
    """

    def __init__(self, config: JddcConfig):
        super().__init__()
        self.config = config
        enc, latent = config.enc_channels, config.latent_channels

        layers: list[nn.Module] = []
        in_channels = config.input_kind.channels
        for stage in range(config.stages):
            out_channels = latent if stage == config.stages - 1 else enc
            layers.append(_down(in_channels, out_channels))
            if stage < config.stages - 1:
                layers.append(nn.LeakyReLU(NEGATIVE_SLOPE))
            in_channels = out_channels
        self.encoder = nn.Sequential(*layers)

        layers = []
        for stage in range(config.stages):
            last = stage == config.stages - 1
            out_channels = OUTPUT_CHANNELS if last and not config.bayer_head else enc
            layers.append(_up(in_channels, out_channels))
            if not last:
                layers.append(nn.LeakyReLU(NEGATIVE_SLOPE))
            in_channels = out_channels
        if config.bayer_head:
            layers += [
                nn.LeakyReLU(NEGATIVE_SLOPE),
                nn.Conv2d(enc, OUTPUT_CHANNELS * 4, kernel_size=3, padding=1),
                nn.PixelShuffle(2),
            ]
        self.decoder = nn.Sequential(*layers)
        self.entropy = EntropyModel(latent)

    def encode(self, x: torch.Tensor) -> torch.Tensor:
        check_input(x, self.config.input_kind.channels, self.config.divisor)
        return self.encoder(x)

    def forward(
        self, x: torch.Tensor, generator: Optional[torch.Generator] = None
    ) -> JddcOutput:
        """Reconstruction and bits per output pixel (mean over the batch).

        Training mode adds uniform noise to the latents (``generator``
        makes it reproducible); evaluation rounds them.
        """
        latents = self.encode(x)
        quantized, likelihoods = self.entropy(latents, generator)
        x_hat = self.decoder(quantized)
        pixels = x_hat.shape[0] * x_hat.shape[-2] * x_hat.shape[-1]
        return JddcOutput(x_hat, analytic_bpp(likelihoods, pixels), likelihoods)

    @torch.no_grad()
    def compress(self, x: torch.Tensor) -> CompressedImage:
        latents = self.entropy.quantize(self.encode(x), training=False)
        symbols = latents.to(torch.int64).cpu().numpy()
        scale = 2 if self.config.bayer_head else 1
        pixels = x.shape[0] * x.shape[-2] * x.shape[-1] * scale * scale
        return CompressedImage(
            data=range_encode(symbols, self.entropy),
            latent_shape=tuple(symbols.shape),
            image_pixels=pixels,
        )

    @torch.no_grad()
    def decompress(self, compressed: CompressedImage) -> torch.Tensor:
        symbols = range_decode(compressed.data, self.entropy, compressed.latent_shape)
        dtype = next(self.parameters()).dtype
        return self.decoder(torch.from_numpy(symbols.astype(np.float64)).to(dtype))


def jddc_forward(config: JddcConfig, x: torch.Tensor) -> JddcOutput:
    """One-shot evaluation-mode forward pass of a freshly initialised model."""
    return JddcModel(config).eval()(x)
