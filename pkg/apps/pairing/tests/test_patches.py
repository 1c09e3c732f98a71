"""Tests for patch grids, random crops and .rawpatch files."""

import tempfile
from pathlib import Path

from django.test import SimpleTestCase

import numpy as np

from apps.core.enums import PatchKind
from apps.core.exceptions import ParseError, TooSmall
from apps.pairing.masks import LossMask
from apps.pairing.patches import (
    extract_patches,
    random_crop,
    read_rawpatch,
    write_rawpatch,
)


def full_mask(height: int, width: int) -> LossMask:
    return LossMask(np.ones((height, width), dtype=bool))


class ExtractPatchesTest(SimpleTestCase):
    """Test extract_patches with the default geometry."""

    def test_single_rgb_patch(self):
        """Test that a 1024x1024 image yields exactly one RGB patch."""
        patches = extract_patches(full_mask(1024, 1024), PatchKind.RGB)
        self.assertEqual(patches.origins, [(0, 0)])

    def test_rgb_grid_along_width(self):
        """Test that 1024x1536 yields origins at x = 0, 256, 512."""
        patches = extract_patches(full_mask(1024, 1536), PatchKind.RGB)
        self.assertEqual(patches.origins, [(0, 0), (0, 256), (0, 512)])

    def test_mostly_masked_patch_is_dropped(self):
        """Test that a patch with 60% excluded pixels is dropped."""
        mask = np.ones((1024, 1024), dtype=bool)
        mask[: int(0.6 * 1024)] = False
        self.assertEqual(extract_patches(LossMask(mask), PatchKind.RGB).origins, [])

    def test_half_masked_patch_is_kept(self):
        """Test that exactly 50% excluded still passes."""
        mask = np.ones((1024, 1024), dtype=bool)
        mask[:512] = False
        self.assertEqual(
            extract_patches(LossMask(mask), PatchKind.RGB).origins, [(0, 0)]
        )

    def test_bayer_patches_in_plane_coordinates(self):
        """Test that a 1024x1280 mask gives a 512x640 plane grid."""
        patches = extract_patches(full_mask(1024, 1280), PatchKind.BAYER)
        self.assertEqual(patches.size, 512)
        self.assertEqual(patches.origins, [(0, 0), (0, 128)])

    def test_too_small_image_has_no_patches(self):
        """Test the empty grid below the patch size."""
        self.assertEqual(extract_patches(full_mask(100, 100)).origins, [])

    def test_custom_geometry_and_views(self):
        """Test custom size/stride and zero-copy views."""
        patches = extract_patches(full_mask(8, 8), PatchKind.RGB, size=4, stride=2)
        self.assertEqual(len(patches.origins), 9)
        array = np.arange(64).reshape(8, 8)
        views = list(patches.views(array))
        self.assertEqual(views[1].shape, (4, 4))
        self.assertTrue(np.shares_memory(views[1], array))
        np.testing.assert_array_equal(views[1], array[0:4, 2:6])


class RandomCropTest(SimpleTestCase):
    """Test random_crop."""

    def test_shapes_for_rgb_input(self):
        """Test equal-resolution crops."""
        rng = np.random.default_rng(0)
        noisy, clean = np.zeros((3, 32, 32)), np.zeros((3, 32, 32))
        n, c, m = random_crop(noisy, clean, np.ones((32, 32), bool), 16, rng)
        self.assertEqual(n.shape, (3, 16, 16))
        self.assertEqual(c.shape, (3, 16, 16))
        self.assertEqual(m.shape, (16, 16))

    def test_shapes_for_packed_bayer_input(self):
        """Test that the clean crop is twice the packed noisy crop."""
        rng = np.random.default_rng(1)
        noisy, clean = np.zeros((4, 16, 16)), np.zeros((3, 32, 32))
        n, c, m = random_crop(noisy, clean, np.ones((32, 32), bool), 8, rng)
        self.assertEqual(n.shape, (4, 8, 8))
        self.assertEqual(c.shape, (3, 16, 16))
        self.assertEqual(m.shape, (16, 16))

    def test_crops_stay_aligned(self):
        """Test that noisy and clean crops come from the same place."""
        rng = np.random.default_rng(2)
        yy = np.mgrid[0:16, 0:16][0].astype(float)
        noisy = yy[None, 0::2, 0::2] / 2
        clean = yy[None]
        for _ in range(10):
            n, c, _ = random_crop(noisy, clean, np.ones((16, 16), bool), 4, rng)
            np.testing.assert_array_equal(n[0] * 2, c[0, 0::2, 0::2])

    def test_prefers_unmasked_crops(self):
        """Test that a heavily masked region is avoided when possible."""
        rng = np.random.default_rng(3)
        mask = np.zeros((64, 64), dtype=bool)
        mask[:, 32:] = True
        image = np.zeros((3, 64, 64))
        for _ in range(10):
            _, _, m = random_crop(image, image, mask, 16, rng, attempts=64)
            self.assertGreaterEqual(m.mean(), 0.5)

    def test_too_small(self):
        """Test TooSmall when the crop exceeds the image."""
        with self.assertRaises(TooSmall):
            random_crop(
                np.zeros((3, 8, 8)),
                np.zeros((3, 8, 8)),
                np.ones((8, 8), bool),
                16,
                np.random.default_rng(0),
            )


class RawpatchFileTest(SimpleTestCase):
    """Test the planar float32 export."""

    def test_roundtrip(self):
        """Test that CxHxW arrays read back as float32."""
        data = np.random.default_rng(4).random((4, 5, 6)).astype(np.float32)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "a.rawpatch"
            write_rawpatch(path, data)
            out = read_rawpatch(path)
        np.testing.assert_array_equal(out, data)
        self.assertEqual(out.dtype, np.float32)

    def test_bad_magic(self):
        """Test ParseError for a foreign file."""
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "b.rawpatch"
            path.write_bytes(b"X" * 20 + bytes(4))
            with self.assertRaises(ParseError):
                read_rawpatch(path)
