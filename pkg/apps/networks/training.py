"""Training loop and evaluation for the denoising and compression models."""

import logging
import math
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
import psutil
import torch

from apps.color.matrices import apply_color_matrix_torch
from apps.core.exceptions import NonFiniteLoss
from apps.core.utils import derive_seed, numpy_rng
from apps.demosaic.interpolation import bilinear_planes
from apps.metrics.quality import adaptive_ms_ssim

from .configs import JddcConfig, TrainingConfig, UNetConfig
from .datasets import TrainingItem, build_dataset
from .jddc import JddcModel
from .losses import RdLossTerms, rd_loss
from .unet import UNet

logger = logging.getLogger(__name__)

_SEED_MASK = (1 << 63) - 1


def build_model(config: Union[UNetConfig, JddcConfig]) -> torch.nn.Module:
    if isinstance(config, JddcConfig):
        return JddcModel(config)
    return UNet(config)


def configure_torch(num_threads: int = 1) -> None:
    """Pin intra-op threads and force deterministic kernels."""
    torch.set_num_threads(num_threads)
    torch.use_deterministic_algorithms(True)


@dataclass
class TrainingBatch:
    noisy: torch.Tensor
    clean: torch.Tensor
    mask: torch.Tensor
    color: torch.Tensor

    @classmethod
    def from_items(
        cls, items: Sequence[TrainingItem], dtype: torch.dtype = torch.float32
    ) -> "TrainingBatch":
        def stack(name):
            return torch.from_numpy(np.stack([getattr(item, name) for item in items]))

        return cls(
            noisy=stack("noisy").to(dtype),
            clean=stack("clean").to(dtype),
            mask=stack("mask"),
            color=stack("color").to(dtype),
        )


@dataclass
class TrainState:
    """Model, optimiser and step counter of one training run."""

    config: TrainingConfig
    model: torch.nn.Module
    optimizer: torch.optim.Optimizer
    step: int = 0
    history: list[dict] = field(default_factory=list)

    @classmethod
    def create(
        cls, config: TrainingConfig, dtype: torch.dtype = torch.float32
    ) -> "TrainState":
        """Fresh state whose initial weights depend only on ``config.seed``."""
        torch.manual_seed(config.seed & _SEED_MASK)
        model = build_model(config.model_config()).to(dtype)
        optimizer = torch.optim.Adam(model.parameters(), lr=config.lr)
        return cls(config=config, model=model, optimizer=optimizer)

    def noise_generator(self) -> torch.Generator:
        """Latent-noise stream of the current step."""
        seed = derive_seed(self.config.seed, "noise", self.step) & _SEED_MASK
        return torch.Generator().manual_seed(seed)


def forward_batch(
    model: torch.nn.Module,
    batch: TrainingBatch,
    generator: Optional[torch.Generator] = None,
) -> tuple[torch.Tensor, Union[torch.Tensor, float]]:
    """Network output (camera RGB for Bayer kinds) and its rate in bpp."""
    if isinstance(model, JddcModel):
        x_hat, rate, _ = model(batch.noisy, generator=generator)
        return x_hat, rate
    return model(batch.noisy), 0.0


def compute_loss(
    model: torch.nn.Module,
    batch: TrainingBatch,
    config: TrainingConfig,
    generator: Optional[torch.Generator] = None,
) -> RdLossTerms:
    """Forward pass and masked RD loss of one batch."""
    x_hat, rate = forward_batch(model, batch, generator)
    return rd_loss(
        x_hat,
        batch.clean,
        batch.mask,
        lam=config.lam,
        rate_bpp=rate,
        color=batch.color if config.input_kind.outputs_camrgb else None,
        gamma_before_loss=config.gamma_before_loss,
    )


def train_step(state: TrainState, batch: TrainingBatch) -> RdLossTerms:
    """One optimiser step; raises NonFiniteLoss before touching the weights."""
    state.model.train()
    terms = compute_loss(state.model, batch, state.config, state.noise_generator())
    if not torch.isfinite(terms.total):
        raise NonFiniteLoss(
            "non-finite training loss",
            diagnostics={"step": state.step, **terms.as_floats()},
        )
    state.optimizer.zero_grad()
    terms.total.backward()
    state.optimizer.step()
    state.step += 1
    return terms


def batch_indices(config: TrainingConfig, step: int, num_items: int) -> list[int]:
    rng = numpy_rng(config.seed, "batch", step)
    return rng.integers(0, num_items, size=config.batch_size).tolist()


def fit(state: TrainState, dataset, steps: Optional[int] = None) -> TrainState:
    """Run ``steps`` (default: config.steps) optimiser steps on ``dataset``."""
    steps = state.config.steps if steps is None else steps
    dtype = next(state.model.parameters()).dtype
    process = psutil.Process(os.getpid())
    for _ in range(steps):
        indices = batch_indices(state.config, state.step, len(dataset))
        batch = TrainingBatch.from_items([dataset[i] for i in indices], dtype)
        terms = train_step(state, batch)
        if state.step % state.config.log_every == 0 or state.step == 1:
            values = {"step": state.step, **terms.as_floats()}
            state.history.append(values)
            logger.info(
                "step %d: total=%.5f distortion=%.5f bpp=%.4f rss=%.1fMB",
                state.step,
                values["total"],
                values["distortion"],
                values["rate_bpp"],
                process.memory_info().rss / 2**20,
            )
    return state


@dataclass
class EvaluationResult:
    """Means over an evaluation set."""

    items: int
    total: float
    distortion: float
    rate_bpp: float
    coded_bpp: float
    msssim: float
    noisy_msssim: float

    def to_dict(self) -> dict:
        return {
            "items": self.items,
            "total": self.total,
            "distortion": self.distortion,
            "rate_bpp": self.rate_bpp,
            "coded_bpp": self.coded_bpp,
            "msssim": self.msssim,
            "noisy_msssim": self.noisy_msssim,
        }


def _noisy_reference(item: TrainingItem) -> np.ndarray:
    """The noisy input at output resolution and in the target's colour space."""
    noisy = item.noisy.astype(np.float64)
    if noisy.shape[0] == 4:
        noisy = bilinear_planes(noisy)
    return np.einsum("ij,jhw->ihw", item.color, noisy)


@torch.no_grad()
def evaluate(
    model: torch.nn.Module,
    dataset,
    config: TrainingConfig,
    code: bool = True,
) -> EvaluationResult:
    """Evaluation-mode RD metrics; JDDC models are also range coded."""
    model.eval()
    dtype = next(model.parameters()).dtype
    coded = code and isinstance(model, JddcModel)
    sums = dict.fromkeys(
        ("total", "distortion", "rate_bpp", "coded_bpp", "msssim", "noisy_msssim"),
        0.0,
    )
    for index in range(len(dataset)):
        item = dataset[index]
        batch = TrainingBatch.from_items([item], dtype)
        x_hat, rate = forward_batch(model, batch)
        terms = rd_loss(
            x_hat,
            batch.clean,
            batch.mask,
            lam=config.lam,
            rate_bpp=rate,
            color=batch.color if config.input_kind.outputs_camrgb else None,
            gamma_before_loss=config.gamma_before_loss,
        )
        for name, value in terms.as_floats().items():
            sums[name] += value
        if coded:
            sums["coded_bpp"] += model.compress(batch.noisy).bpp
        if config.input_kind.outputs_camrgb:
            x_hat = apply_color_matrix_torch(x_hat, batch.color)
        sums["msssim"] += adaptive_ms_ssim(x_hat[0], batch.clean[0])
        sums["noisy_msssim"] += adaptive_ms_ssim(_noisy_reference(item), item.clean)
    count = max(len(dataset), 1)
    means = {name: value / count for name, value in sums.items()}
    if not coded:
        means["coded_bpp"] = math.nan
    logger.info("Evaluated %d items: %s", len(dataset), means)
    return EvaluationResult(items=len(dataset), **means)


def run_training(
    config: TrainingConfig, threads: int = 1, torch_threads: int = 1
) -> TrainState:
    """Build the dataset and model of ``config`` and train for config.steps."""
    configure_torch(torch_threads)
    dataset = build_dataset(config, threads=threads)
    state = TrainState.create(config)
    logger.info(
        "Training %s on %d items for %d steps (lambda=%g)",
        config.label,
        len(dataset),
        config.steps,
        config.lam,
    )
    return fit(state, dataset)
