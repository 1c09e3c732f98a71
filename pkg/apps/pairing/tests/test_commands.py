"""Tests for the prepare, align and mask management commands."""

import json
import tempfile
from io import StringIO
from pathlib import Path
from unittest.mock import patch

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, override_settings

import numpy as np

from apps.core.management.base import EXIT_PARTIAL_FAILURE
from apps.pairing.manifest import read_manifest
from apps.pairing.masks import read_mask
from apps.pairing.services import PairPreparationService
from apps.pairing.tests.factories import SensorMetaFactory, smooth_field, write_shot

SMALL_PATCHES = {
    "RGB_PATCH_SIZE": 32,
    "RGB_PATCH_STRIDE": 16,
    "BAYER_PATCH_SIZE": 16,
    "BAYER_PATCH_STRIDE": 8,
}


def build_dataset(root: Path) -> None:
    """Two scenes: a well aligned pair shifted by two rows and an unrelated pair."""
    meta = SensorMetaFactory(camera_id="test-cam")
    rng = np.random.default_rng(0)

    field = smooth_field(100, 100, seed=1)
    clean = field[:, 2:98, 2:98]
    noisy = field[:, 0:96, 2:98] + rng.normal(0, 0.003, (3, 96, 96))
    write_shot(root / "aligned" / "clean" / "iso100.pgm", clean, meta)
    write_shot(root / "aligned" / "noisy" / "iso6400.pgm", noisy, meta)

    unrelated = root / "unrelated"
    write_shot(unrelated / "clean" / "iso100.pgm", smooth_field(96, 96, seed=2), meta)
    write_shot(
        unrelated / "noisy" / "iso6400.pgm", rng.uniform(0.1, 0.5, (3, 96, 96)), meta
    )


@override_settings(**SMALL_PATCHES)
class PrepareCommandTest(SimpleTestCase):
    """Test the prepare command end to end."""

    def setUp(self):
        """Create a scratch dataset and manifest directory."""
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.root = Path(self.tmp.name)
        self.input = self.root / "scenes"
        self.input.mkdir()

    def prepare(self, manifest_name="out/manifest.jsonl", *args):
        manifest = self.root / manifest_name
        out = StringIO()
        call_command(
            "prepare",
            "--input",
            str(self.input),
            "--manifest",
            str(manifest),
            *args,
            stdout=out,
            stderr=StringIO(),
        )
        return manifest, out.getvalue()

    def test_empty_input_writes_empty_manifest(self):
        """Test that no scenes give an empty manifest and exit 0."""
        manifest, output = self.prepare()
        self.assertEqual(manifest.read_text(), "")
        self.assertIn("pairs: 0 prepared, 0 failed", output)

    def test_paths_default_to_data_root(self):
        """Test that --input and --manifest default under RAW_DATA_ROOT."""
        build_dataset(self.input)
        with override_settings(RAW_DATA_ROOT=self.root):
            call_command("prepare", stdout=StringIO(), stderr=StringIO())
        records = read_manifest(self.root / "manifest.jsonl")
        self.assertEqual([r.scene_id for r in records], ["aligned", "unrelated"])

    def test_missing_input_is_invalid(self):
        """Test exit code 2 for a missing input directory."""
        with self.assertRaises(CommandError) as ctx:
            call_command(
                "prepare",
                "--input",
                str(self.root / "missing"),
                "--manifest",
                str(self.root / "m.jsonl"),
                stdout=StringIO(),
            )
        self.assertEqual(ctx.exception.returncode, 2)

    def test_records_for_kept_and_discarded_pairs(self):
        """Test alignment, discard flag, masks and patches of the two scenes."""
        build_dataset(self.input)
        manifest, output = self.prepare()
        records = read_manifest(manifest)

        self.assertEqual([r.scene_id for r in records], ["aligned", "unrelated"])
        aligned, unrelated = records

        self.assertEqual((aligned.shift_y, aligned.shift_x), (2, 0))
        self.assertFalse(aligned.discarded)
        self.assertLess(aligned.alignment_loss, 0.035)
        self.assertAlmostEqual(aligned.gain, 1.0, delta=0.05)
        self.assertGreater(aligned.msssim, 0.9)
        self.assertEqual(aligned.camera_id, "test-cam")
        self.assertTrue(aligned.rgb_patches)
        self.assertTrue(aligned.bayer_patches)
        self.assertEqual(aligned.noisy_ref, "../scenes/aligned/noisy/iso6400.pgm")

        mask = read_mask(manifest.parent / aligned.mask_ref)
        self.assertEqual(mask.shape, (96, 96))
        # rows outside the overlap are excluded
        self.assertFalse(mask.mask[-2:].any())

        self.assertTrue(unrelated.discarded)
        self.assertEqual(unrelated.rgb_patches, ())
        self.assertEqual(unrelated.bayer_patches, ())
        self.assertIn("discarded: 1", output)

    def test_thread_count_does_not_change_output(self):
        """Test byte-identical manifests for 1 and 3 threads."""
        build_dataset(self.input)
        one, _ = self.prepare("a/manifest.jsonl", "--threads", "1")
        three, _ = self.prepare("b/manifest.jsonl", "--threads", "3")
        self.assertEqual(one.read_text(), three.read_text())

    def test_celery_dispatch_matches_local_run(self):
        """Test that eager Celery tasks produce the same manifest."""
        build_dataset(self.input)
        local, _ = self.prepare("a/manifest.jsonl")
        remote, _ = self.prepare("b/manifest.jsonl", "--use-celery")
        self.assertEqual(local.read_text(), remote.read_text())

    def test_unreadable_pair_is_reported(self):
        """Test that a failing pair is skipped and counted."""
        build_dataset(self.input)
        (self.input / "aligned" / "noisy" / "broken.pgm").write_bytes(b"P5\n")
        manifest, output = self.prepare()
        self.assertEqual(len(read_manifest(manifest)), 2)
        self.assertIn("1 failed", output)

    def test_mostly_failing_run_exits_one(self):
        """Test exit code 1 when the failure fraction exceeds the limit."""
        build_dataset(self.input)
        with patch.object(
            PairPreparationService, "prepare_pair", side_effect=OSError("disk")
        ):
            with self.assertRaises(CommandError) as ctx:
                self.prepare()
        self.assertEqual(ctx.exception.returncode, EXIT_PARTIAL_FAILURE)


class AlignAndMaskCommandTest(SimpleTestCase):
    """Test the single-pair align and mask commands."""

    def setUp(self):
        """Write one shifted pair."""
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.root = Path(self.tmp.name)
        build_dataset(self.root)
        self.noisy = str(self.root / "aligned" / "noisy" / "iso6400.pgm")
        self.clean = str(self.root / "aligned" / "clean" / "iso100.pgm")

    def test_align_prints_json(self):
        """Test the JSON alignment report for both search methods."""
        for method in ("hill_climb", "exhaustive"):
            with self.subTest(method=method):
                out = StringIO()
                call_command(
                    "align",
                    "--noisy",
                    self.noisy,
                    "--clean",
                    self.clean,
                    "--method",
                    method,
                    stdout=out,
                )
                report = json.loads(out.getvalue())
                self.assertEqual((report["shift_y"], report["shift_x"]), (2, 0))
                self.assertFalse(report["discarded"])

    def test_mask_writes_overlap_mask(self):
        """Test that the mask covers the 94x96 overlap."""
        output = self.root / "out" / "pair.mask"
        call_command(
            "mask",
            "--noisy",
            self.noisy,
            "--clean",
            self.clean,
            "--output",
            str(output),
            stdout=StringIO(),
        )
        self.assertEqual(read_mask(output).shape, (94, 96))
