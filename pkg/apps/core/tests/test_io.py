"""Tests for PGM and sidecar ingestion."""

import tempfile
from pathlib import Path

from django.test import SimpleTestCase

import numpy as np

from apps.core.enums import CfaPattern
from apps.core.exceptions import MetaInvalid, ParseError
from apps.core.io import (
    format_sidecar,
    parse_sidecar,
    read_mosaic,
    read_pgm,
    read_sidecar,
    sidecar_path,
    write_mosaic,
    write_pgm,
)
from apps.pairing.tests.factories import SensorMetaFactory


class PgmTest(SimpleTestCase):
    """Test 16-bit PGM reading and writing."""

    def setUp(self):
        """Create a scratch directory."""
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = Path(self.tmp.name)

    def test_roundtrip(self):
        """Test that written counts are read back exactly."""
        raw = np.random.default_rng(0).integers(0, 65536, size=(6, 10), dtype=np.uint16)
        path = self.dir / "a.pgm"
        write_pgm(path, raw)
        np.testing.assert_array_equal(read_pgm(path), raw)

    def test_big_endian_raster(self):
        """Test the byte order of the raster."""
        path = self.dir / "b.pgm"
        write_pgm(path, np.array([[0x0102, 0x0304]], dtype=np.uint16))
        self.assertTrue(path.read_bytes().endswith(b"\x01\x02\x03\x04"))

    def test_header_comments_are_skipped(self):
        """Test that # comments in the header are ignored."""
        path = self.dir / "c.pgm"
        path.write_bytes(b"P5\n# made by hand\n2 1\n65535\n\x00\x01\x00\x02")
        np.testing.assert_array_equal(read_pgm(path), [[1, 2]])

    def test_bad_magic(self):
        """Test that ASCII PGMs are rejected."""
        path = self.dir / "d.pgm"
        path.write_bytes(b"P2\n2 1\n65535\n1 2\n")
        with self.assertRaises(ParseError):
            read_pgm(path)

    def test_truncated_raster(self):
        """Test that a short raster is rejected."""
        path = self.dir / "e.pgm"
        path.write_bytes(b"P5\n4 4\n65535\n\x00\x01")
        with self.assertRaises(ParseError):
            read_pgm(path)


class SidecarTest(SimpleTestCase):
    """Test the key=value sidecar."""

    def setUp(self):
        """Create a scratch directory."""
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = Path(self.tmp.name)

    def test_parse_ignores_comments_and_blanks(self):
        """Test comment and blank line handling."""
        fields = parse_sidecar("# header\n\ncfa = RGGB\nwhite_level=1023\n")
        self.assertEqual(fields, {"cfa": "RGGB", "white_level": "1023"})

    def test_parse_error_has_line_number(self):
        """Test that a line without '=' reports its number."""
        with self.assertRaises(ParseError) as ctx:
            parse_sidecar("cfa=RGGB\nnonsense\n")
        self.assertEqual(ctx.exception.line_number, 2)

    def test_format_then_read(self):
        """Test that a formatted sidecar reads back the same metadata."""
        meta = SensorMetaFactory(camera_id="x-t3")
        path = self.dir / "a.meta"
        path.write_text(format_sidecar(CfaPattern.GBRG, meta))
        cfa, read = read_sidecar(path)
        self.assertEqual(cfa, CfaPattern.GBRG)
        self.assertEqual(read.camera_id, "x-t3")
        np.testing.assert_array_equal(read.black_level, meta.black_level)
        np.testing.assert_array_equal(read.xyz_to_camrgb, meta.xyz_to_camrgb)

    def test_missing_key_is_named(self):
        """Test that MetaInvalid names the missing key."""
        path = self.dir / "b.meta"
        path.write_text("cfa=RGGB\nblack_level=512\nwhite_level=16383\n")
        with self.assertRaisesMessage(MetaInvalid, "xyz_to_camrgb"):
            read_sidecar(path)

    def test_wrong_matrix_length(self):
        """Test that xyz_to_camrgb needs nine values."""
        path = self.dir / "c.meta"
        path.write_text(
            "cfa=RGGB\nblack_level=512\nwhite_level=16383\nxyz_to_camrgb=1 0 0 1\n"
        )
        with self.assertRaisesMessage(MetaInvalid, "xyz_to_camrgb"):
            read_sidecar(path)

    def test_white_not_above_black(self):
        """Test the level invariant through the serializer."""
        path = self.dir / "d.meta"
        path.write_text(
            "cfa=RGGB\nblack_level=512\nwhite_level=500\n"
            "xyz_to_camrgb=1 0 0 0 1 0 0 0 1\n"
        )
        with self.assertRaises(MetaInvalid):
            read_sidecar(path)

    def test_unknown_cfa(self):
        """Test that X-Trans style patterns are rejected."""
        path = self.dir / "e.meta"
        path.write_text(
            "cfa=XTRANS\nblack_level=512\nwhite_level=16383\n"
            "xyz_to_camrgb=1 0 0 0 1 0 0 0 1\n"
        )
        with self.assertRaisesMessage(MetaInvalid, "cfa"):
            read_sidecar(path)


class ReadMosaicTest(SimpleTestCase):
    """Test read_mosaic and write_mosaic."""

    def test_roundtrip_normalizes_levels(self):
        """Test that a written mosaic reads back normalized with its phase."""
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "shot.pgm"
            meta = SensorMetaFactory()
            raw = np.full((6, 8), 512, dtype=np.uint16)
            raw[0, 0] = 16383
            write_mosaic(path, raw, CfaPattern.GRBG, meta)
            self.assertTrue(sidecar_path(path).is_file())
            mosaic = read_mosaic(path)
        self.assertEqual(mosaic.cfa, CfaPattern.GRBG)
        self.assertEqual(mosaic.data.shape, (6, 8))
        self.assertEqual(mosaic.data[0, 0], 1.0)
        self.assertEqual(mosaic.data[3, 3], 0.0)
