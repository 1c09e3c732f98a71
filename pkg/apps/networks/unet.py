"""U-Net denoiser with an optional PixelShuffle head for packed Bayer input."""

import torch
from torch import nn

from apps.core.enums import UpscaleMode
from apps.core.exceptions import DivisibilityError, ShapeMismatch

from .configs import UNetConfig

OUTPUT_CHANNELS = 3


def check_input(x: torch.Tensor, channels: int, divisor: int) -> None:
    """Raise unless ``x`` is (N, channels, H, W) with H and W multiples of divisor."""
    if x.dim() != 4 or x.shape[1] != channels:
        raise ShapeMismatch(
            f"expected (N,{channels},H,W) input, got {tuple(x.shape)}"
        )
    height, width = x.shape[-2:]
    if height % divisor or width % divisor:
        raise DivisibilityError(
            f"input {height}x{width} is not divisible by {divisor}"
        )


class ConvBlock(nn.Sequential):
    """Two 3x3 convolutions, each followed by a leaky ReLU."""

    def __init__(self, in_channels: int, out_channels: int, negative_slope: float):
        super().__init__(
            nn.Conv2d(in_channels, out_channels, kernel_size=3, padding=1),
            nn.LeakyReLU(negative_slope),
            nn.Conv2d(out_channels, out_channels, kernel_size=3, padding=1),
            nn.LeakyReLU(negative_slope),
        )


class UpBlock(nn.Module):
    """Nearest 2x upsampling and a halving conv, then concat the skip."""

    def __init__(self, in_channels: int, out_channels: int, negative_slope: float):
        super().__init__()
        self.up = nn.Sequential(
            nn.Upsample(scale_factor=2, mode="nearest"),
            nn.Conv2d(in_channels, out_channels, kernel_size=3, padding=1),
            nn.LeakyReLU(negative_slope),
        )
        self.block = ConvBlock(2 * out_channels, out_channels, negative_slope)

    def forward(self, x: torch.Tensor, skip: torch.Tensor) -> torch.Tensor:
        return self.block(torch.cat([self.up(x), skip], dim=1))


class UNet(nn.Module):
    """Denoising U-Net.

    RGB-like inputs keep their spatial size. Packed Bayer input
    (N, 4, H, W) is decoded to (N, 3, 2H, 2W) camera RGB by a 12-channel
    final convolution and a 2x PixelShuffle.
    """

    def __init__(self, config: UNetConfig):
        super().__init__()
        self.config = config
        slope = config.negative_slope
        widths = [config.base_channels * 2**level for level in range(config.depth + 1)]

        self.encoders = nn.ModuleList()
        in_channels = config.input_kind.channels
        for width in widths[:-1]:
            self.encoders.append(ConvBlock(in_channels, width, slope))
            in_channels = width
        self.pool = nn.MaxPool2d(kernel_size=2)
        self.bottleneck = ConvBlock(widths[-2], widths[-1], slope)
        self.decoders = nn.ModuleList(
            UpBlock(widths[level + 1], widths[level], slope)
            for level in reversed(range(config.depth))
        )

        if config.output_upscale == UpscaleMode.PIXEL_SHUFFLE_2X:
            self.head = nn.Conv2d(widths[0], OUTPUT_CHANNELS * 4, kernel_size=1)
            self.shuffle = nn.PixelShuffle(2)
        else:
            self.head = nn.Conv2d(widths[0], OUTPUT_CHANNELS, kernel_size=1)
            self.shuffle = nn.Identity()

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        check_input(x, self.config.input_kind.channels, self.config.divisor)
        skips = []
        for encoder in self.encoders:
            x = encoder(x)
            skips.append(x)
            x = self.pool(x)
        x = self.bottleneck(x)
        for decoder, skip in zip(self.decoders, reversed(skips)):
            x = decoder(x, skip)
        return self.shuffle(self.head(x))


def unet_forward(config: UNetConfig, x: torch.Tensor) -> torch.Tensor:
    """One-shot forward pass of a freshly initialised U-Net."""
    return UNet(config)(x)
