"""Tests for MS-SSIM, SSIM, L1 and PSNR."""

import math

from django.test import SimpleTestCase

import numpy as np
import torch
from numpy.lib.stride_tricks import sliding_window_view
from scipy import ndimage

from apps.core.exceptions import DegenerateImage, ShapeMismatch, TooSmall
from apps.metrics.quality import (
    MSSSIM_WEIGHTS,
    adaptive_ms_ssim,
    fit_window,
    l1,
    min_side_for,
    ms_ssim,
    ms_ssim_batch,
    psnr,
    ssim,
)


def checkerboard(size: int = 256, square: int = 8) -> np.ndarray:
    yy, xx = np.mgrid[0:size, 0:size]
    plane = np.where(((yy // square) + (xx // square)) % 2, 0.8, 0.2)
    return np.stack([plane] * 3)


def reference_ms_ssim(x: np.ndarray, y: np.ndarray, win_size: int = 11) -> float:
    """Plain numpy rendition of five-scale MS-SSIM for even-sized images."""
    coords = np.arange(win_size) - win_size // 2
    g = np.exp(-(coords**2) / (2 * 1.5**2))
    g /= g.sum()

    def blur(img):
        rows = sliding_window_view(img, win_size, axis=0) @ g
        return sliding_window_view(rows, win_size, axis=1) @ g

    def components(a, b):
        c1, c2 = 0.01**2, 0.03**2
        mu_a, mu_b = blur(a), blur(b)
        var_a = blur(a * a) - mu_a**2
        var_b = blur(b * b) - mu_b**2
        cov = blur(a * b) - mu_a * mu_b
        cs = (2 * cov + c2) / (var_a + var_b + c2)
        lum = (2 * mu_a * mu_b + c1) / (mu_a**2 + mu_b**2 + c1)
        return float((lum * cs).mean()), float(cs.mean())

    def down(img):
        return img.reshape(img.shape[0] // 2, 2, img.shape[1] // 2, 2).mean(axis=(1, 3))

    scores = []
    for a, b in zip(x, y):
        terms = []
        for level in range(len(MSSSIM_WEIGHTS)):
            s, cs = components(a, b)
            if level < len(MSSSIM_WEIGHTS) - 1:
                terms.append(max(cs, 0.0))
                a, b = down(a), down(b)
        terms.append(max(s, 0.0))
        scores.append(np.prod([t**w for t, w in zip(terms, MSSSIM_WEIGHTS)]))
    return float(np.mean(scores))



def distorted_pairs(count: int = 10, size: int = 256):
    """Seeded (clean, distorted) pairs in [0, 1]: noise, blur, gain and shift."""
    pairs = []
    for seed in range(count):
        rng = np.random.default_rng(seed)
        sigma = 1.0 + seed % 4
        texture = ndimage.gaussian_filter(
            rng.random((3, size, size + 4)), sigma=(0, sigma, sigma)
        )
        texture = 0.1 + 0.8 * (texture - texture.min()) / np.ptp(texture)
        clean = texture[:, :, :size]
        kind = seed % 4
        if kind == 0:
            distorted = clean + rng.normal(0, 0.02 + 0.01 * seed, clean.shape)
        elif kind == 1:
            distorted = ndimage.gaussian_filter(clean, sigma=(0, 1.0, 1.0))
        elif kind == 2:
            distorted = 0.8 * clean
        else:
            distorted = texture[:, :, 2 : size + 2]
        pairs.append((clean, np.clip(distorted, 0.0, 1.0)))
    return pairs


class MsSsimTest(SimpleTestCase):
    """Test ms_ssim."""

    def setUp(self):
        """A checkerboard and its blurred copy."""
        self.board = checkerboard()
        self.blurred = ndimage.gaussian_filter(self.board, sigma=(0, 1.5, 1.5))

    def test_identical_images_score_one(self):
        """Test MS-SSIM of an image with itself."""
        self.assertAlmostEqual(ms_ssim(self.board, self.board), 1.0, places=10)

    def test_symmetric(self):
        """Test that argument order does not matter."""
        self.assertEqual(
            ms_ssim(self.board, self.blurred), ms_ssim(self.blurred, self.board)
        )

    def test_matches_reference(self):
        """Test against an independent numpy implementation."""
        expected = reference_ms_ssim(self.board, self.blurred)
        self.assertAlmostEqual(ms_ssim(self.board, self.blurred), expected, delta=1e-4)
        self.assertLess(expected, 1.0)

    def test_matches_reference_on_ten_pairs(self):
        """Test ten fixed textured pairs with assorted distortions."""
        for index, (clean, distorted) in enumerate(distorted_pairs()):
            with self.subTest(pair=index):
                expected = reference_ms_ssim(clean, distorted)
                self.assertAlmostEqual(ms_ssim(clean, distorted), expected, delta=1e-4)

    def test_shift_lowers_score(self):
        """Test that larger misalignment scores lower."""
        texture = ndimage.gaussian_filter(
            np.random.default_rng(0).random((3, 256, 264)), sigma=(0, 2, 2)
        )
        base = texture[:, :, :256]
        one = ms_ssim(base, texture[:, :, 1:257])
        four = ms_ssim(base, texture[:, :, 4:260])
        self.assertLess(one, 1.0)
        self.assertLess(four, one)

    def test_too_small(self):
        """Test TooSmall below the 176 pixel minimum."""
        self.assertEqual(min_side_for(11), 176)
        small = np.zeros((3, 175, 200))
        with self.assertRaises(TooSmall):
            ms_ssim(small, small)

    def test_shape_mismatch(self):
        """Test ShapeMismatch for different sizes."""
        with self.assertRaises(ShapeMismatch):
            ms_ssim(np.zeros((3, 176, 176)), np.zeros((3, 176, 180)))

    def test_batch_is_differentiable(self):
        """Test gradients through the batched form."""
        rng = np.random.default_rng(2)
        texture = ndimage.gaussian_filter(rng.random((1, 3, 192, 192)), sigma=(0, 0, 3, 3))
        y = torch.from_numpy(texture)
        torch.manual_seed(0)
        x = (y + 0.01 * torch.randn(y.shape, dtype=y.dtype)).requires_grad_(True)
        (1 - ms_ssim_batch(x, y)).sum().backward()
        self.assertTrue(torch.isfinite(x.grad).all())
        self.assertGreater(float(x.grad.abs().sum()), 0.0)


class AdaptiveMsSsimTest(SimpleTestCase):
    """Test window fitting for small images."""

    def test_fit_window(self):
        """Test the largest window whose pyramid fits."""
        self.assertEqual(fit_window(256, 300), 11)
        self.assertEqual(fit_window(100, 120), 5)
        with self.assertRaises(TooSmall):
            fit_window(40, 40)

    def test_small_image_uses_smaller_window(self):
        """Test MS-SSIM on a 100x100 pair."""
        board = checkerboard(100, 4)
        self.assertAlmostEqual(adaptive_ms_ssim(board, board), 1.0, places=10)

    def test_tiny_image_falls_back_to_ssim(self):
        """Test the single-scale fallback on a 20x20 pair."""
        rng = np.random.default_rng(1)
        a = rng.random((3, 20, 20))
        score = adaptive_ms_ssim(a, a * 0.5)
        self.assertAlmostEqual(score, min(max(ssim(a, a * 0.5, win_size=11), 0.0), 1.0))
        self.assertGreaterEqual(score, 0.0)
        self.assertLessEqual(score, 1.0)


class PixelMetricsTest(SimpleTestCase):
    """Test l1 and psnr."""

    def test_l1(self):
        """Test zero for identical inputs and the offset for shifted ones."""
        a = np.full((3, 4, 4), 0.3)
        self.assertEqual(l1(a, a), 0.0)
        self.assertAlmostEqual(l1(a, a + 0.1), 0.1)

    def test_psnr_offset(self):
        """Test that a uniform 0.1 error gives 20 dB."""
        a = np.full((3, 4, 4), 0.3)
        self.assertAlmostEqual(psnr(a, a + 0.1), 20.0)

    def test_psnr_identical(self):
        """Test inf, or DegenerateImage when asked to raise."""
        a = np.full((3, 4, 4), 0.3)
        self.assertEqual(psnr(a, a), math.inf)
        with self.assertRaises(DegenerateImage):
            psnr(a, a, raise_on_identical=True)

    def test_accepts_tensors(self):
        """Test that torch tensors are accepted."""
        a = torch.zeros(3, 4, 4)
        self.assertAlmostEqual(l1(a, a + 0.5), 0.5)
