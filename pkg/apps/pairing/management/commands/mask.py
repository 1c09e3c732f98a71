"""Management command building the loss mask of one pair."""

from pathlib import Path

from django.conf import settings

from apps.core.management.base import PipelineCommand
from apps.pairing.alignment import align_pair, match_gain, overlap_views
from apps.pairing.masks import build_loss_mask, write_mask
from apps.pairing.services import PairPreparationService


class Command(PipelineCommand):
    """Align a pair, build its loss mask and write it as a .mask file."""

    help = "Build and write the loss mask of one aligned noisy/clean pair"

    def add_command_arguments(self, parser):
        """Add command-line arguments."""
        parser.add_argument("--noisy", required=True, help="Noisy mosaic (.pgm)")
        parser.add_argument("--clean", required=True, help="Clean mosaic (.pgm)")
        parser.add_argument("--output", required=True, help="Mask output path")
        parser.add_argument(
            "--l1-threshold",
            type=float,
            default=settings.MASK_L1_THRESHOLD,
            help=f"Per-pixel L1 exclusion (default: {settings.MASK_L1_THRESHOLD})",
        )
        parser.add_argument(
            "--percentile",
            type=float,
            default=settings.MASK_LOSS_PERCENTILE,
            help=(
                "Per-pair loss percentile exclusion "
                f"(default: {settings.MASK_LOSS_PERCENTILE})"
            ),
        )
        parser.add_argument(
            "--overexposure",
            type=float,
            default=settings.MASK_OVEREXPOSURE_THRESHOLD,
            help=(
                "Clean value marking overexposure "
                f"(default: {settings.MASK_OVEREXPOSURE_THRESHOLD})"
            ),
        )

    def run(self, **options):
        """Execute the mask build."""
        noisy = PairPreparationService.load_image(Path(options["noisy"]))
        clean = PairPreparationService.load_image(Path(options["clean"]))
        scaled, _ = match_gain(noisy.rgb, clean.rgb)
        alignment = align_pair(
            scaled,
            clean.rgb,
            max_shift=settings.ALIGN_MAX_SHIFT,
            discard_threshold=settings.ALIGN_DISCARD_THRESHOLD,
            min_overlap=settings.ALIGN_MIN_OVERLAP,
        )
        noisy_view, clean_view = overlap_views(
            scaled.channels, clean.rgb.channels, alignment.shift
        )
        mask = build_loss_mask(
            noisy_view,
            clean_view,
            l1_threshold=options["l1_threshold"],
            percentile=options["percentile"],
            overexposure=options["overexposure"],
            opening_size=settings.MASK_OPENING_SIZE,
        )
        output = Path(options["output"])
        output.parent.mkdir(parents=True, exist_ok=True)
        write_mask(output, mask)
        self.success(
            f"Wrote {output}: {mask.shape[0]}x{mask.shape[1]} overlap at shift "
            f"{alignment.shift}, {mask.excluded_fraction:.4%} excluded"
        )
