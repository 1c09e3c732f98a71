"""Management command checking the range coder against the analytic entropy."""

import json
import time

from django.core.management.base import CommandError

import numpy as np
import torch

from apps.core.management.base import EXIT_PARTIAL_FAILURE, PipelineCommand
from apps.core.utils import numpy_rng
from apps.networks.coder import range_decode, range_encode
from apps.networks.entropy import NUM_SYMBOLS, SYMBOL_MIN, EntropyModel

OVERHEAD_BYTES = 32
OVERHEAD_FRACTION = 0.02


def laplacian_model(channels: int, scale: float) -> EntropyModel:
    """Entropy model with a discretized Laplacian per channel."""
    model = EntropyModel(channels)
    values = torch.arange(NUM_SYMBOLS, dtype=torch.float32) + SYMBOL_MIN
    with torch.no_grad():
        model.logits.copy_((-values.abs() / scale).expand(channels, -1))
    return model


def analytic_bytes(symbols: np.ndarray, model: EntropyModel) -> float:
    """Ideal code length under the model's integer frequency tables."""
    cdf = model.quantized_cdf()
    total = float(cdf[0, -1])
    channels = np.arange(model.channels).reshape(-1, 1, 1)
    channels = np.broadcast_to(channels, symbols.shape).reshape(-1)
    index = symbols.reshape(-1) - SYMBOL_MIN
    freqs = cdf[channels, index + 1] - cdf[channels, index]
    return float(-np.log2(freqs / total).sum() / 8.0)


class Command(PipelineCommand):
    """Encode random latents, decode them, and compare size with the entropy."""

    help = "Range coder self-test: exact roundtrip and size within 2% of entropy"

    def add_command_arguments(self, parser):
        """Add command-line arguments."""
        parser.add_argument(
            "--symbols", type=int, default=100_000, help="Symbols to code"
        )
        parser.add_argument("--channels", type=int, default=4)
        parser.add_argument(
            "--distribution",
            choices=["uniform", "laplace"],
            default="uniform",
            help="Symbol source (default: uniform 8-bit)",
        )
        parser.add_argument(
            "--scale", type=float, default=4.0, help="Laplace scale in symbols"
        )

    def run(self, **options):
        """Execute the self-test."""
        channels = options["channels"]
        per_channel = max(1, options["symbols"] // channels)
        shape = (1, channels, 1, per_channel)
        rng = numpy_rng(options["seed"], "coder_selftest")
        if options["distribution"] == "uniform":
            model = EntropyModel(channels)
            symbols = rng.integers(SYMBOL_MIN, SYMBOL_MIN + NUM_SYMBOLS, size=shape)
        else:
            model = laplacian_model(channels, options["scale"])
            symbols = np.clip(
                np.round(rng.laplace(0.0, options["scale"], size=shape)),
                SYMBOL_MIN,
                SYMBOL_MIN + NUM_SYMBOLS - 1,
            ).astype(np.int64)

        started = time.perf_counter()
        data = range_encode(symbols, model)
        decoded = range_decode(data, model, shape)
        elapsed = time.perf_counter() - started

        ideal = analytic_bytes(symbols, model)
        report = {
            "symbols": int(symbols.size),
            "bytes": len(data),
            "analytic_bytes": ideal,
            "overhead_fraction": len(data) / ideal - 1.0 if ideal else 0.0,
            "roundtrip": bool(np.array_equal(decoded, symbols)),
            "seconds": elapsed,
        }
        self.stdout.write(json.dumps(report, indent=2))
        limit = max(ideal + OVERHEAD_BYTES, ideal * (1 + OVERHEAD_FRACTION))
        if not report["roundtrip"] or len(data) > limit:
            raise CommandError(
                "range coder self-test failed", returncode=EXIT_PARTIAL_FAILURE
            )
        self.success("Range coder self-test passed")
