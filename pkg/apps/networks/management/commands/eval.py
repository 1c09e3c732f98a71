"""Management command evaluating a checkpoint."""

import json
from dataclasses import replace
from pathlib import Path

from django.conf import settings

from apps.core.management.base import PipelineCommand
from apps.core.utils import derive_seed
from apps.networks.checkpoints import load_model
from apps.networks.datasets import build_dataset
from apps.networks.training import configure_torch, evaluate

VALIDATION_ITEMS = 16


class Command(PipelineCommand):
    """Report RD loss, bpp and MS-SSIM of a checkpoint on held-out pairs."""

    help = "Evaluate a checkpoint: RD loss terms, analytic and coded bpp, MS-SSIM"

    def add_command_arguments(self, parser):
        """Add command-line arguments."""
        parser.add_argument("--checkpoint", required=True, help="RNIPCKPT file")
        parser.add_argument(
            "--items",
            type=int,
            default=VALIDATION_ITEMS,
            help=f"Evaluation pairs (default: {VALIDATION_ITEMS})",
        )
        parser.add_argument(
            "--manifest", help="Evaluate on manifest crops instead of synthetic pairs"
        )
        parser.add_argument(
            "--no-code",
            action="store_true",
            help="Skip range coding (coded_bpp is reported as NaN)",
        )
        parser.add_argument("--output", help="Also write the metrics as JSON here")

    def run(self, **options):
        """Execute the evaluation."""
        configure_torch(settings.TORCH_NUM_THREADS)
        model, trained = load_model(Path(options["checkpoint"]))
        # held-out stream: same settings as training, different seed
        config = replace(
            trained,
            num_items=options["items"],
            manifest=options["manifest"] or trained.manifest,
        )
        dataset = build_dataset(
            config,
            seed=derive_seed(options["seed"], "validation"),
            threads=options["threads"],
        )
        result = evaluate(model, dataset, config, code=not options["no_code"])
        report = {"label": config.label, "lambda": config.lam, **result.to_dict()}
        text = json.dumps(report, indent=2)
        if options["output"]:
            Path(options["output"]).write_text(text + "\n")
        self.stdout.write(text)
