"""Management command training a denoising or compression model."""

import json
from pathlib import Path

from django.conf import settings

from apps.core.enums import InputKind
from apps.core.management.base import PipelineCommand
from apps.networks.checkpoints import save_checkpoint
from apps.networks.serializers import build_training_config
from apps.networks.training import run_training


class Command(PipelineCommand):
    """Train one model and write a checkpoint."""

    help = (
        "Train a U-Net denoiser or JDDC/JDC compression model with the masked "
        "rate-distortion loss and save an RNIPCKPT checkpoint"
    )

    def add_command_arguments(self, parser):
        """Add command-line arguments."""
        parser.add_argument("--config", help="JSON training config")
        parser.add_argument(
            "--output",
            help=f"Checkpoint path (default: {settings.CHECKPOINT_DIR}/<label>.ckpt)",
        )
        parser.add_argument("--model", choices=["jddc", "unet"])
        parser.add_argument("--input-kind", choices=InputKind.values)
        parser.add_argument(
            "--lambda",
            dest="lam",
            type=float,
            help="Rate weight in D + lambda * bpp (config default: 0.005)",
        )
        parser.add_argument("--steps", type=int, help="Optimiser steps")
        parser.add_argument("--lr", type=float, help="Adam learning rate")
        parser.add_argument(
            "--manifest", help="Train on a prepared manifest instead of synthetic pairs"
        )
        parser.add_argument(
            "--history", help="Write the logged loss history as JSON to this path"
        )

    def run(self, **options):
        """Execute the training run."""
        config = build_training_config(
            options["config"],
            crop_sizes=(settings.RGB_CROP_SIZE, settings.BAYER_CROP_SIZE),
            model=options["model"],
            input_kind=options["input_kind"],
            lam=options["lam"],
            steps=options["steps"],
            lr=options["lr"],
            manifest=options["manifest"],
            seed=options["seed"],
        )
        state = run_training(
            config,
            threads=options["threads"],
            torch_threads=settings.TORCH_NUM_THREADS,
        )
        output = Path(
            options["output"] or Path(settings.CHECKPOINT_DIR) / f"{config.label}.ckpt"
        )
        save_checkpoint(output, state.model, config, step=state.step)
        if options["history"]:
            Path(options["history"]).write_text(json.dumps(state.history, indent=2))
        if state.history:
            last = state.history[-1]
            self.stdout.write(
                f"step {last['step']}: total={last['total']:.5f} "
                f"distortion={last['distortion']:.5f} bpp={last['rate_bpp']:.4f}"
            )
        self.success(f"Wrote {output}")
