"""Management command preparing a noisy/clean pair manifest."""

from pathlib import Path

from django.conf import settings
from django.core.management.base import CommandError

from apps.core.management.base import EXIT_PARTIAL_FAILURE, PipelineCommand
from apps.core.utils import format_file_size
from apps.pairing.alignment import ALIGNERS
from apps.pairing.manifest import write_manifest
from apps.pairing.services import PairPreparationService, PreparationOptions


class Command(PipelineCommand):
    """Align, mask and patch every scene of an input directory."""

    help = (
        "Prepare noisy/clean pairs: normalize, demosaic, gain-match, align, "
        "mask and index patches; writes a JSON-lines manifest"
    )

    def add_command_arguments(self, parser):
        """Add command-line arguments."""
        data_root = Path(settings.RAW_DATA_ROOT)
        parser.add_argument(
            "--input",
            default=str(data_root / "scenes"),
            help=(
                "Directory of <scene>/clean/*.pgm and <scene>/noisy/*.pgm "
                f"(default: {data_root / 'scenes'})"
            ),
        )
        parser.add_argument(
            "--manifest",
            default=str(data_root / "manifest.jsonl"),
            help=f"Manifest output path (default: {data_root / 'manifest.jsonl'})",
        )
        parser.add_argument(
            "--align-method",
            choices=sorted(ALIGNERS),
            default="hill_climb",
            help="Alignment search (default: hill_climb)",
        )
        parser.add_argument(
            "--align-max-shift",
            type=int,
            default=settings.ALIGN_MAX_SHIFT,
            help=(
                "Hill-climb shift limit in pixels "
                f"(default: {settings.ALIGN_MAX_SHIFT}, the +/-128 search range)"
            ),
        )
        parser.add_argument(
            "--align-discard-threshold",
            type=float,
            default=settings.ALIGN_DISCARD_THRESHOLD,
            help=(
                "Discard pairs whose alignment loss exceeds this "
                f"(default: {settings.ALIGN_DISCARD_THRESHOLD})"
            ),
        )
        parser.add_argument(
            "--mask-l1-threshold",
            type=float,
            default=settings.MASK_L1_THRESHOLD,
            help=f"Per-pixel L1 exclusion level (default: {settings.MASK_L1_THRESHOLD})",
        )
        parser.add_argument(
            "--demosaic-method",
            choices=["bilinear", "edge_aware"],
            default="edge_aware",
            help="Demosaicer used before alignment (default: edge_aware)",
        )
        parser.add_argument(
            "--use-celery",
            action="store_true",
            default=settings.PREPARE_USE_CELERY,
            help="Dispatch scenes as Celery tasks instead of local threads",
        )

    def run(self, **options):
        """Execute the preparation."""
        manifest_path = Path(options["manifest"])
        manifest_path.parent.mkdir(parents=True, exist_ok=True)
        prep = PreparationOptions.from_settings(
            max_shift=options["align_max_shift"],
            discard_threshold=options["align_discard_threshold"],
            l1_threshold=options["mask_l1_threshold"],
            align_method=options["align_method"],
            demosaic_method=options["demosaic_method"],
        )
        summary = PairPreparationService.prepare_dataset(
            Path(options["input"]),
            manifest_path.parent,
            prep,
            threads=options["threads"],
            use_celery=options["use_celery"],
        )
        write_manifest(manifest_path, summary.records)

        for failure in summary.failures:
            self.stderr.write(f"failed: {failure}")
        self.stdout.write(
            f"pairs: {len(summary.records)} prepared, {len(summary.failures)} failed"
        )
        self.stdout.write(
            f"discarded: {summary.discarded} "
            f"({summary.discarded_fraction:.2%} of prepared pairs)"
        )
        self.success(
            f"Wrote {manifest_path} "
            f"({format_file_size(manifest_path.stat().st_size)})"
        )
        if summary.failure_fraction > settings.PREPARE_MAX_FAILURE_FRACTION:
            raise CommandError(
                f"{len(summary.failures)} of {summary.total} pairs failed",
                returncode=EXIT_PARTIAL_FAILURE,
            )
