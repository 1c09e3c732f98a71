"""Management command sweeping the rate weight and writing an RD curve."""

import math
from dataclasses import replace
from pathlib import Path

from django.conf import settings
from django.core.management.base import CommandError

from apps.core.management.base import EXIT_INVALID_INVOCATION, PipelineCommand
from apps.core.utils import derive_seed
from apps.metrics.reports import RdPoint, write_rd_csv
from apps.networks.checkpoints import load_model, save_checkpoint
from apps.networks.datasets import build_dataset
from apps.networks.serializers import build_training_config
from apps.networks.training import configure_torch, evaluate, run_training

DEFAULT_LAMBDAS = "0.0005,0.005,0.05"


def parse_lambdas(text: str) -> list[float]:
    """Comma-separated rate weights; an empty string is an empty sweep."""
    return [float(part) for part in text.split(",") if part.strip()]


def checkpoint_path(directory: Path, label: str, lam: float) -> Path:
    return directory / f"{label}-lambda{lam:g}.ckpt"


class Command(PipelineCommand):
    """Evaluate one checkpoint per lambda and write (label, lambda, bpp, msssim)."""

    help = (
        "Rate-distortion sweep: one CSV row per lambda with coded bpp and "
        "MS-SSIM against the clean reference, sorted by bpp"
    )

    def add_command_arguments(self, parser):
        """Add command-line arguments."""
        parser.add_argument("--config", help="JSON training config of the sweep")
        parser.add_argument(
            "--lambdas",
            default=DEFAULT_LAMBDAS,
            help=f"Comma-separated lambdas (default: {DEFAULT_LAMBDAS})",
        )
        parser.add_argument("--output", required=True, help="CSV report path")
        parser.add_argument(
            "--checkpoint-dir",
            default=str(settings.CHECKPOINT_DIR),
            help=(
                "Directory of per-lambda checkpoints "
                f"(default: {settings.CHECKPOINT_DIR})"
            ),
        )
        parser.add_argument(
            "--train",
            action="store_true",
            help="Train missing checkpoints with the config's step budget",
        )
        parser.add_argument(
            "--items", type=int, default=16, help="Evaluation pairs per lambda"
        )

    def run(self, **options):
        """Execute the sweep."""
        configure_torch(settings.TORCH_NUM_THREADS)
        try:
            lambdas = parse_lambdas(options["lambdas"])
        except ValueError as exc:
            raise CommandError(
                f"--lambdas: {exc}", returncode=EXIT_INVALID_INVOCATION
            )
        base = build_training_config(
            options["config"],
            crop_sizes=(settings.RGB_CROP_SIZE, settings.BAYER_CROP_SIZE),
            seed=options["seed"],
        )
        directory = Path(options["checkpoint_dir"])
        points = []
        for lam in lambdas:
            config = replace(base, lam=lam)
            path = checkpoint_path(directory, config.label, lam)
            if options["train"] and not path.exists():
                state = run_training(
                    config,
                    threads=options["threads"],
                    torch_threads=settings.TORCH_NUM_THREADS,
                )
                save_checkpoint(path, state.model, config, step=state.step)
            model, trained = load_model(path)
            held_out = replace(trained, num_items=options["items"])
            dataset = build_dataset(
                held_out,
                seed=derive_seed(options["seed"], "validation"),
                threads=options["threads"],
            )
            result = evaluate(model, dataset, held_out)
            bpp = result.rate_bpp if math.isnan(result.coded_bpp) else result.coded_bpp
            points.append(
                RdPoint(label=trained.label, lam=lam, bpp=bpp, msssim=result.msssim)
            )
            self.stdout.write(
                f"{trained.label} lambda={lam:g}: bpp={bpp:.4f} "
                f"msssim={result.msssim:.4f}"
            )
        output = Path(options["output"])
        output.parent.mkdir(parents=True, exist_ok=True)
        rows = write_rd_csv(output, points)
        self.success(f"Wrote {len(rows)} rows to {options['output']}")
