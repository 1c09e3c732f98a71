"""Tests for checkpoints, training config parsing and the network commands."""

import csv
import json
import tempfile
from io import StringIO
from pathlib import Path

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, override_settings

import pytest
import torch

from apps.core.exceptions import CheckpointFormatError, MissingCheckpoint, ParseError
from apps.networks.checkpoints import load_model, read_checkpoint, save_checkpoint
from apps.networks.configs import TrainingConfig
from apps.networks.serializers import (
    build_training_config,
    load_training_config,
    training_config_from_dict,
)
from apps.networks.training import TrainState

TINY_CONFIG = {
    "model": "jddc",
    "enc_channels": 4,
    "latent_channels": 4,
    "crop_size": 16,
    "batch_size": 2,
    "num_items": 4,
    "steps": 2,
    "log_every": 1,
    "lambda": 0.01,
}


class ScratchDirMixin:
    """Scratch directory per test."""

    def setUp(self):
        """Create a scratch directory."""
        super().setUp()
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.root = Path(self.tmp.name)

    def write_config(self, name="config.json", **overrides):
        path = self.root / name
        path.write_text(json.dumps({**TINY_CONFIG, **overrides}))
        return path


class CheckpointTest(ScratchDirMixin, SimpleTestCase):
    """Test checkpoint writing and reading."""

    def save_tiny(self, name="model.ckpt"):
        config = training_config_from_dict(TINY_CONFIG)
        state = TrainState.create(config)
        return save_checkpoint(self.root / name, state.model, config, step=7), state

    def test_roundtrip(self):
        """Test that weights, config and step survive a save and load."""
        path, state = self.save_tiny()
        model, config = load_model(path)
        self.assertEqual(config, state.config)
        self.assertEqual(read_checkpoint(path)[1], 7)
        for name, tensor in state.model.state_dict().items():
            self.assertTrue(torch.equal(model.state_dict()[name], tensor), name)

    def test_header(self):
        """Test the magic and version at the start of the file."""
        path, _ = self.save_tiny()
        self.assertEqual(path.read_bytes()[:12], b"RNIPCKPT\x01\x00\x00\x00")

    def test_missing(self):
        """Test MissingCheckpoint, which is also a FileNotFoundError."""
        with self.assertRaises(MissingCheckpoint):
            load_model(self.root / "absent.ckpt")
        self.assertTrue(issubclass(MissingCheckpoint, FileNotFoundError))

    def test_bad_magic(self):
        """Test CheckpointFormatError for a foreign file."""
        path = self.root / "foreign.ckpt"
        path.write_bytes(b"NOTACKPT" + bytes(16))
        with self.assertRaisesMessage(CheckpointFormatError, "magic"):
            read_checkpoint(path)

    def test_truncated_and_trailing(self):
        """Test CheckpointFormatError for cut and padded files."""
        path, _ = self.save_tiny()
        blob = path.read_bytes()
        for name, data in (("cut", blob[:-3]), ("padded", blob + b"\x00")):
            with self.subTest(name):
                bad = self.root / f"{name}.ckpt"
                bad.write_bytes(data)
                with self.assertRaises(CheckpointFormatError):
                    read_checkpoint(bad)


class TrainingConfigSerializerTest(ScratchDirMixin, SimpleTestCase):
    """Test parsing and validation of training configs."""

    def test_lambda_key(self):
        """Test that the on-disk key lambda maps onto lam."""
        config = training_config_from_dict({"lambda": 0.02})
        self.assertEqual(config.lam, 0.02)
        self.assertEqual(config.to_dict()["lambda"], 0.02)

    def test_defaults(self):
        """Test that an empty object gives the default config."""
        self.assertEqual(training_config_from_dict({}), TrainingConfig())

    def test_rejections(self):
        """Test ParseError for unknown keys and invalid values."""
        for data, needle in (
            ({"learning_rate": 0.1}, "learning_rate"),
            ({"lambda": -1.0}, "lam"),
            ({"model": "gan"}, "model"),
            ({"crop_size": 40}, "crop_size"),
        ):
            with self.subTest(data=data):
                with self.assertRaisesMessage(ParseError, needle):
                    training_config_from_dict(data)

    def test_load_file(self):
        """Test reading a config file."""
        config = load_training_config(self.write_config())
        self.assertEqual((config.enc_channels, config.lam), (4, 0.01))

    def test_load_invalid_json(self):
        """Test ParseError with the line of a JSON error."""
        path = self.root / "bad.json"
        path.write_text('{\n  "steps": ,\n}')
        with self.assertRaises(ParseError) as ctx:
            load_training_config(path)
        self.assertEqual(ctx.exception.line_number, 2)

    def test_load_non_object(self):
        """Test ParseError for a JSON list."""
        path = self.root / "list.json"
        path.write_text("[1, 2]")
        with self.assertRaises(ParseError):
            load_training_config(path)

    def test_overrides(self):
        """Test command-line overrides on top of a file."""
        config = build_training_config(
            self.write_config(), lam=0.5, steps=None, model="unet", depth=2
        )
        self.assertEqual(config.lam, 0.5)
        self.assertEqual(config.steps, 2)
        self.assertEqual(config.model, "unet")
        self.assertEqual(config.label, "unet-rgb3")

    def test_custom_label_survives_overrides(self):
        """Test that an explicit label is kept."""
        path = self.write_config(label="mine")
        self.assertEqual(build_training_config(path, seed=3).label, "mine")

    def test_no_file(self):
        """Test overrides on the built-in defaults."""
        config = build_training_config(None, lam=0.02, seed=None)
        self.assertEqual((config.lam, config.steps, config.seed), (0.02, 2000, 0))

    def test_crop_sizes_fill_a_missing_crop(self):
        """Test per-kind crop defaults, used only when crop_size is unset."""
        path = self.write_config(crop_size=None)
        self.assertEqual(build_training_config(path, crop_sizes=(64, 16)).crop_size, 64)
        bayer = build_training_config(path, crop_sizes=(64, 16), input_kind="bayer4")
        self.assertEqual(bayer.crop_size, 32)
        explicit = build_training_config(self.write_config(), crop_sizes=(64, 16))
        self.assertEqual(explicit.crop_size, 16)


class TrainAndEvalCommandTest(ScratchDirMixin, SimpleTestCase):
    """Test the train and eval commands."""

    def train(self, *args):
        out = StringIO()
        call_command(
            "train",
            "--config",
            str(self.write_config()),
            "--output",
            str(self.root / "model.ckpt"),
            *args,
            stdout=out,
        )
        return out.getvalue()

    def test_train_writes_checkpoint_and_history(self):
        """Test the checkpoint, the loss history and the summary line."""
        output = self.train("--history", str(self.root / "history.json"))
        config, step, _ = read_checkpoint(self.root / "model.ckpt")
        self.assertEqual(step, 2)
        self.assertEqual(config.label, "jddc-rgb3")
        history = json.loads((self.root / "history.json").read_text())
        self.assertEqual([entry["step"] for entry in history], [1, 2])
        self.assertIn("step 2:", output)

    def test_train_overrides(self):
        """Test that --lambda and --steps override the config file."""
        self.train("--lambda", "0.05", "--steps", "1", "--seed", "9")
        config, step, _ = read_checkpoint(self.root / "model.ckpt")
        self.assertEqual((config.lam, config.seed, step), (0.05, 9, 1))

    @override_settings(RGB_CROP_SIZE=32)
    def test_train_uses_crop_setting(self):
        """Test that a config without crop_size trains on RGB_CROP_SIZE crops."""
        call_command(
            "train",
            "--config",
            str(self.write_config(crop_size=None)),
            "--output",
            str(self.root / "model.ckpt"),
            stdout=StringIO(),
        )
        config, _, _ = read_checkpoint(self.root / "model.ckpt")
        self.assertEqual(config.crop_size, 32)

    def test_eval_reports_metrics(self):
        """Test the JSON report of a trained checkpoint."""
        self.train()
        out = StringIO()
        call_command(
            "eval",
            "--checkpoint",
            str(self.root / "model.ckpt"),
            "--items",
            "2",
            "--output",
            str(self.root / "eval.json"),
            stdout=out,
        )
        report = json.loads(out.getvalue())
        self.assertEqual(report, json.loads((self.root / "eval.json").read_text()))
        self.assertEqual(report["label"], "jddc-rgb3")
        self.assertEqual(report["lambda"], 0.01)
        self.assertEqual(report["items"], 2)
        self.assertGreater(report["coded_bpp"], 0.0)

    def test_eval_missing_checkpoint(self):
        """Test exit code 2 for a missing checkpoint."""
        with self.assertRaises(CommandError) as ctx:
            call_command(
                "eval", "--checkpoint", str(self.root / "none.ckpt"), stdout=StringIO()
            )
        self.assertEqual(ctx.exception.returncode, 2)


class RdSweepCommandTest(ScratchDirMixin, SimpleTestCase):
    """Test the rd_sweep command."""

    def sweep(self, *args):
        output = self.root / "rd.csv"
        call_command(
            "rd_sweep",
            "--config",
            str(self.write_config()),
            "--output",
            str(output),
            "--checkpoint-dir",
            str(self.root / "checkpoints"),
            "--items",
            "1",
            *args,
            stdout=StringIO(),
        )
        return output

    def test_empty_sweep_writes_header(self):
        """Test that no lambdas give a header-only CSV."""
        output = self.sweep("--lambdas", "")
        self.assertEqual(output.read_text(), "label,lambda,bpp,msssim\n")

    def test_trains_and_reports_each_lambda(self):
        """Test one row per lambda, sorted by bpp, and the saved checkpoints."""
        output = self.sweep("--lambdas", "0.01,1.0", "--train")
        with output.open(newline="") as handle:
            rows = list(csv.DictReader(handle))
        self.assertEqual(sorted(float(row["lambda"]) for row in rows), [0.01, 1.0])
        bpps = [float(row["bpp"]) for row in rows]
        self.assertEqual(bpps, sorted(bpps))
        self.assertTrue(all(row["label"] == "jddc-rgb3" for row in rows))
        checkpoints = self.root / "checkpoints"
        self.assertTrue((checkpoints / "jddc-rgb3-lambda0.01.ckpt").is_file())
        self.assertTrue((checkpoints / "jddc-rgb3-lambda1.ckpt").is_file())

    @pytest.mark.slow
    def test_rate_and_distortion_follow_lambda(self):
        """Test at most one inversion of bpp or distortion across three lambdas."""
        config = self.write_config(
            latent_channels=8, crop_size=32, num_items=8, steps=150, lr=3e-3
        )
        output = self.root / "rd.csv"
        call_command(
            "rd_sweep",
            "--config",
            str(config),
            "--output",
            str(output),
            "--checkpoint-dir",
            str(self.root / "checkpoints"),
            "--items",
            "4",
            "--lambdas",
            "0.005,0.5,50",
            "--train",
            stdout=StringIO(),
        )
        with output.open(newline="") as handle:
            rows = sorted(csv.DictReader(handle), key=lambda row: float(row["lambda"]))
        self.assertEqual(len(rows), 3)
        inversions = 0
        for low, high in zip(rows, rows[1:]):
            # larger lambda: fewer bits, more distortion (lower msssim)
            inversions += float(high["bpp"]) > float(low["bpp"])
            inversions += float(high["msssim"]) > float(low["msssim"])
        self.assertLessEqual(inversions, 1)

    def test_missing_checkpoint_without_training(self):
        """Test exit code 2 when a checkpoint is missing and --train is off."""
        with self.assertRaises(CommandError) as ctx:
            self.sweep("--lambdas", "0.01")
        self.assertEqual(ctx.exception.returncode, 2)

    def test_bad_lambdas(self):
        """Test exit code 2 for a malformed lambda list."""
        with self.assertRaises(CommandError) as ctx:
            self.sweep("--lambdas", "0.1,abc")
        self.assertEqual(ctx.exception.returncode, 2)


class MacCountCommandTest(SimpleTestCase):
    """Test the mac_count command."""

    ARGS = (
        "--base-channels",
        "8",
        "--depth",
        "2",
        "--enc-channels",
        "32",
        "--latent-channels",
        "48",
    )

    def test_json_ratios(self):
        """Test the Bayer to RGB ratios of the JSON report."""
        out = StringIO()
        call_command("mac_count", *self.ARGS, "--json", stdout=out)
        report = json.loads(out.getvalue())
        ratios = report["ratios"]
        self.assertAlmostEqual(ratios["unet_bayer_to_rgb"], 0.25, delta=0.01)
        self.assertTrue(0.22 <= ratios["encoder_bayer_to_rgb"] <= 0.30)
        macs = report["macs"]
        self.assertAlmostEqual(
            macs["denoise_then_compress"],
            macs["unet_bayer"] + macs["jdc_rgb_encoder"] + macs["jdc_rgb_decoder"],
            delta=2,
        )

    def test_table(self):
        """Test the plain-text table."""
        out = StringIO()
        call_command("mac_count", *self.ARGS, stdout=out)
        self.assertIn("unet_bayer", out.getvalue())
        self.assertIn("GMAC/1MP", out.getvalue())
