"""Management command aligning a single noisy/clean pair."""

import json
from pathlib import Path

from django.conf import settings

from apps.core.management.base import PipelineCommand
from apps.pairing.alignment import ALIGNERS, EXHAUSTIVE_RADIUS, match_gain
from apps.pairing.services import PairPreparationService


class Command(PipelineCommand):
    """Print the shift, loss and discard flag of one pair as JSON."""

    help = "Gain-match and align one noisy/clean mosaic pair"

    def add_command_arguments(self, parser):
        """Add command-line arguments."""
        parser.add_argument("--noisy", required=True, help="Noisy mosaic (.pgm)")
        parser.add_argument("--clean", required=True, help="Clean mosaic (.pgm)")
        parser.add_argument(
            "--method",
            choices=sorted(ALIGNERS),
            default="hill_climb",
            help="Alignment search (default: hill_climb)",
        )
        parser.add_argument(
            "--max-shift",
            type=int,
            default=settings.ALIGN_MAX_SHIFT,
            help=f"Hill-climb shift limit (default: {settings.ALIGN_MAX_SHIFT})",
        )
        parser.add_argument(
            "--radius",
            type=int,
            default=EXHAUSTIVE_RADIUS,
            help=f"Exhaustive search radius (default: {EXHAUSTIVE_RADIUS})",
        )
        parser.add_argument(
            "--discard-threshold",
            type=float,
            default=settings.ALIGN_DISCARD_THRESHOLD,
            help=f"Discard cut-off (default: {settings.ALIGN_DISCARD_THRESHOLD})",
        )

    def run(self, **options):
        """Execute the alignment."""
        noisy = PairPreparationService.load_image(Path(options["noisy"]))
        clean = PairPreparationService.load_image(Path(options["clean"]))
        scaled, gain = match_gain(noisy.rgb, clean.rgb)
        kwargs = {
            "discard_threshold": options["discard_threshold"],
            "min_overlap": settings.ALIGN_MIN_OVERLAP,
        }
        if options["method"] == "hill_climb":
            kwargs["max_shift"] = options["max_shift"]
        else:
            kwargs["radius"] = options["radius"]
        result = ALIGNERS[options["method"]](scaled, clean.rgb, **kwargs)
        self.stdout.write(
            json.dumps(
                {
                    "shift_y": result.shift_y,
                    "shift_x": result.shift_x,
                    "gain": gain,
                    "loss": result.loss,
                    "discarded": result.discarded,
                }
            )
        )
