"""Multiply-accumulate counts of the networks, per megapixel of output."""

import logging
from collections.abc import Sequence
from typing import Optional, Union

import torch
from torch import nn

from apps.core.enums import InputKind

from .configs import JddcConfig, UNetConfig
from .training import build_model

logger = logging.getLogger(__name__)

TRACE_SIDE = 256
PIXELS_PER_MEGAPIXEL = 1_000_000

ModelConfig = Union[UNetConfig, JddcConfig]


def _conv_macs(module: nn.Module, inputs, output) -> int:
    """``H*W*Cin*Cout*k*k`` per image (groups divide Cin)."""
    kernel = module.kernel_size[0] * module.kernel_size[1]
    if isinstance(module, nn.ConvTranspose2d):
        # every input sample is scattered through the full kernel
        source = inputs[0]
        per_sample = module.out_channels // module.groups * kernel
        return source[0].numel() * per_sample
    cin = module.in_channels // module.groups
    return output[0].numel() * cin * kernel


def trace_input(config: ModelConfig, side: int = TRACE_SIDE) -> torch.Tensor:
    """Input whose output image is ``side`` x ``side`` pixels."""
    if config.input_kind == InputKind.BAYER4:
        return torch.zeros(1, 4, side // 2, side // 2)
    return torch.zeros(1, 3, side, side)


def _count_one(config: ModelConfig, part: Optional[str], side: int) -> int:
    model = build_model(config).eval()
    root = getattr(model, part) if part else model
    total = 0

    def hook(module, inputs, output):
        nonlocal total
        total += _conv_macs(module, inputs, output)

    handles = [
        module.register_forward_hook(hook)
        for module in root.modules()
        if isinstance(module, (nn.Conv2d, nn.ConvTranspose2d))
    ]
    try:
        with torch.no_grad():
            model(trace_input(config, side))
    finally:
        for handle in handles:
            handle.remove()
    return total


def count_macs(
    config: Union[ModelConfig, Sequence[ModelConfig]],
    megapixels: float = 1.0,
    part: Optional[str] = None,
    trace_side: int = TRACE_SIDE,
) -> int:
    """MACs of every convolution for ``megapixels`` of output image.

    A sequence of configs (e.g. a denoiser followed by a compressor) is
    counted as running one after the other. ``part`` restricts the count
    to a submodule such as ``"encoder"`` or ``"decoder"``.
    """
    configs = [config] if isinstance(config, (UNetConfig, JddcConfig)) else config
    traced = sum(_count_one(cfg, part, trace_side) for cfg in configs)
    scale = megapixels * PIXELS_PER_MEGAPIXEL / trace_side**2
    macs = round(traced * scale)
    logger.debug("count_macs(%s, part=%s) = %d", configs, part, macs)
    return macs
