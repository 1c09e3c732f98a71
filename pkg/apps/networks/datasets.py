"""Training pairs: synthetic heteroscedastic noise and manifest-backed crops."""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
from scipy import ndimage

from apps.color.matrices import camrgb_to_rec2020_matrix
from apps.core.enums import ColorSpace, InputKind, PatchKind
from apps.core.exceptions import RawPipelineError
from apps.core.images import LinearRgbImage
from apps.core.mosaic import mosaic_from_rgb, pack_planes
from apps.core.utils import numpy_rng, resolve_ref
from apps.demosaic.interpolation import bilinear_planes
from apps.devproxy.params import sample_dev_params
from apps.devproxy.pipeline import develop_proxy
from apps.pairing.alignment import crop_bayer_pair, overlap_views
from apps.pairing.manifest import read_manifest
from apps.pairing.masks import read_mask
from apps.pairing.patches import PATCH_GEOMETRY, random_crop
from apps.pairing.records import PairRecord
from apps.pairing.services import PairPreparationService

logger = logging.getLogger(__name__)

NOISE_RANGE = (1e-4, 1e-2)
IDENTITY = np.eye(3)


@dataclass(frozen=True, eq=False)
class TrainingItem:
    """One network input with its target.

    ``noisy`` is in the network's input representation; ``clean`` and
    ``mask`` are at output resolution. ``color`` maps the network's
    output to the target's colour space (identity when they agree).
    """

    noisy: np.ndarray
    clean: np.ndarray
    mask: np.ndarray
    color: np.ndarray = IDENTITY


def smooth_scene(size: int, rng: np.random.Generator) -> np.ndarray:
    """Band-limited random 3xSxS image in [0.02, 0.9]."""
    base = rng.random((3, size, size))
    sigma = rng.uniform(1.5, 6.0)
    scene = ndimage.gaussian_filter(base, sigma=(0, sigma, sigma), mode="reflect")
    scene -= scene.min(axis=(1, 2), keepdims=True)
    scene /= np.maximum(scene.max(axis=(1, 2), keepdims=True), 1e-12)
    ramp = np.linspace(0.0, 1.0, size)[None, None, :]
    scene = 0.7 * scene + 0.3 * ramp * rng.random((3, 1, 1))
    return 0.02 + 0.88 * scene


def add_heteroscedastic_noise(
    signal: np.ndarray, a: float, b: float, rng: np.random.Generator
) -> np.ndarray:
    """Gaussian noise with variance ``a * signal + b``."""
    sigma = np.sqrt(a * np.maximum(signal, 0.0) + b)
    return signal + sigma * rng.standard_normal(signal.shape)


def develop_pair(
    noisy: np.ndarray, clean: np.ndarray, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Develop both images with the same seeded proxy parameters."""
    params = sample_dev_params(seed)

    def run(rgb):
        image = LinearRgbImage(rgb, colorspace=ColorSpace.REC2020)
        return develop_proxy(image, params).channels

    return run(noisy), run(clean)


class SyntheticPairDataset:
    """Deterministic noisy/clean pairs generated from per-item seeded streams.

    Noise is added to the linear signal (the mosaic, for Bayer kinds). A
    ``clean_fraction`` of the items are clean->clean pairs. Items are
    generated on ``threads`` workers; each draws only from its own stream,
    so the result does not depend on the worker count.
    """

    def __init__(
        self,
        num_items: int,
        crop_size: int,
        input_kind: InputKind,
        seed: int,
        clean_fraction: float = 0.0,
        threads: int = 1,
    ):
        self.crop_size = crop_size
        self.input_kind = InputKind(input_kind)
        self.seed = seed
        self.clean_fraction = clean_fraction
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                self.items = list(pool.map(self.make_item, range(num_items)))
        else:
            self.items = [self.make_item(index) for index in range(num_items)]

    def make_item(self, index: int) -> TrainingItem:
        rng = numpy_rng(self.seed, "synthetic", index)
        clean = smooth_scene(self.crop_size, rng)
        a, b = rng.uniform(*NOISE_RANGE, size=2)
        keep_clean = rng.random() < self.clean_fraction
        if self.input_kind.outputs_camrgb:
            mosaic = mosaic_from_rgb(clean)
            if not keep_clean:
                mosaic = mosaic.with_data(
                    add_heteroscedastic_noise(mosaic.data, a, b, rng)
                )
            noisy = pack_planes(mosaic).planes
            if self.input_kind == InputKind.BAYER_PREUP:
                noisy = bilinear_planes(noisy)
        else:
            noisy = clean if keep_clean else add_heteroscedastic_noise(clean, a, b, rng)
            if self.input_kind == InputKind.DEVELOPED3:
                noisy, clean = develop_pair(noisy, clean, int(rng.integers(2**63)))
        return TrainingItem(
            noisy=noisy.astype(np.float32),
            clean=clean.astype(np.float32),
            mask=np.ones(clean.shape[1:], dtype=bool),
        )

    def __len__(self) -> int:
        return len(self.items)

    def __getitem__(self, index: int) -> TrainingItem:
        return self.items[index]


class ManifestPairDataset:
    """Random crops from the aligned, non-discarded pairs of a manifest.

    Item ``i`` draws a record, one of its patches and a crop inside it
    from a stream seeded by (seed, i). Images are loaded lazily and cached.
    """

    def __init__(
        self,
        manifest_path: Union[str, Path],
        crop_size: int,
        input_kind: InputKind,
        seed: int,
        num_items: int,
        demosaic_method: str = "edge_aware",
    ):
        self.manifest_path = Path(manifest_path)
        self.crop_size = crop_size
        self.input_kind = InputKind(input_kind)
        self.seed = seed
        self.num_items = num_items
        self.demosaic_method = demosaic_method
        kind = PatchKind.BAYER if self.input_kind == InputKind.BAYER4 else PatchKind.RGB
        self.patch_size = PATCH_GEOMETRY[kind][0]
        self.records = [
            record
            for record in read_manifest(self.manifest_path)
            if not record.discarded and self._patches(record)
        ]
        if not self.records:
            raise RawPipelineError(
                f"{self.manifest_path} has no usable pairs for {self.input_kind.value}"
            )
        self._cache: dict[int, tuple] = {}
        logger.info(
            "Loaded %d usable pairs from %s", len(self.records), self.manifest_path
        )

    def _patches(self, record: PairRecord) -> tuple:
        if self.input_kind == InputKind.BAYER4:
            return record.bayer_patches
        return record.rgb_patches

    def _views(self, index: int) -> tuple:
        """Aligned (noisy, clean, mask) views, colour matrix, patch origin offset."""
        if index in self._cache:
            return self._cache[index]
        record = self.records[index]
        base = self.manifest_path.parent
        noisy = PairPreparationService.load_image(
            resolve_ref(record.noisy_ref, base), self.demosaic_method
        )
        clean = PairPreparationService.load_image(
            resolve_ref(record.clean_ref, base), self.demosaic_method
        )
        mask = read_mask(resolve_ref(record.mask_ref, base)).mask
        shift = (record.shift_y, record.shift_x)
        color = camrgb_to_rec2020_matrix(noisy.packed.meta.xyz_to_camrgb)
        planes = noisy.packed.planes * record.gain
        if self.input_kind == InputKind.BAYER4:
            # Bayer patch origins are relative to these views
            views = crop_bayer_pair(planes, clean.rgb.channels, mask, shift)
            offset = (0, 0)
        else:
            if self.input_kind == InputKind.BAYER_PREUP:
                source = bilinear_planes(planes)
            else:
                source = noisy.rgb.channels * record.gain
                color = IDENTITY
            noisy_view, clean_view = overlap_views(source, clean.rgb.channels, shift)
            _, mask_view = overlap_views(mask, mask, shift)
            views = (noisy_view, clean_view, mask_view)
            # RGB patch origins are in clean coordinates
            offset = (max(0, -shift[0]), max(0, -shift[1]))
        self._cache[index] = (*views, color, offset)
        return self._cache[index]

    def __len__(self) -> int:
        return self.num_items

    def __getitem__(self, index: int) -> TrainingItem:
        rng = numpy_rng(self.seed, "manifest", index)
        record_index = int(rng.integers(len(self.records)))
        noisy, clean, mask, color, offset = self._views(record_index)
        patches = self._patches(self.records[record_index])
        oy, ox = patches[int(rng.integers(len(patches)))]
        scale = clean.shape[-2] // noisy.shape[-2]
        y0, x0 = max(0, oy - offset[0]), max(0, ox - offset[1])
        y1, x1 = y0 + self.patch_size, x0 + self.patch_size
        noisy_crop, clean_crop, mask_crop = random_crop(
            noisy[..., y0:y1, x0:x1],
            clean[..., y0 * scale : y1 * scale, x0 * scale : x1 * scale],
            mask[y0 * scale : y1 * scale, x0 * scale : x1 * scale],
            self.crop_size // scale,
            rng,
        )
        if self.input_kind == InputKind.DEVELOPED3:
            noisy_crop, clean_crop = develop_pair(
                noisy_crop, clean_crop, int(rng.integers(2**63))
            )
        return TrainingItem(
            noisy=np.asarray(noisy_crop, dtype=np.float32),
            clean=np.asarray(clean_crop, dtype=np.float32),
            mask=np.asarray(mask_crop, dtype=bool),
            color=color,
        )


def build_dataset(config, seed: Optional[int] = None, threads: int = 1):
    """The dataset a TrainingConfig asks for, seeded by ``seed``."""
    seed = config.seed if seed is None else seed
    if config.manifest:
        return ManifestPairDataset(
            config.manifest,
            config.crop_size,
            config.input_kind,
            seed,
            num_items=config.num_items,
        )
    return SyntheticPairDataset(
        num_items=config.num_items,
        crop_size=config.crop_size,
        input_kind=config.input_kind,
        seed=seed,
        clean_fraction=config.clean_fraction,
        threads=threads,
    )
