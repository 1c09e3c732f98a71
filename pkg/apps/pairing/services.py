"""Pair preparation services: scene discovery, per-pair pipeline, datasets."""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from django.conf import settings

import numpy as np

from apps.color.matrices import camrgb_to_rec2020
from apps.core.enums import PatchKind
from apps.core.exceptions import RawPipelineError, ShapeMismatch
from apps.core.images import LinearRgbImage, PackedBayer
from apps.core.io import read_mosaic
from apps.core.mosaic import crop_to_rggb, pack_planes
from apps.core.utils import relative_ref
from apps.demosaic.interpolation import demosaic
from apps.metrics.quality import adaptive_ms_ssim

from .alignment import ALIGNERS, crop_bayer_pair, match_gain, overlap_views
from .masks import LossMask, build_loss_mask, write_mask
from .patches import extract_patches
from .records import PairRecord

logger = logging.getLogger(__name__)

CLEAN_DIR = "clean"
NOISY_DIR = "noisy"
MOSAIC_GLOB = "*.pgm"
MASK_SUFFIX = ".mask"


@dataclass(frozen=True)
class PreparationOptions:
    """Thresholds and geometry for pair preparation."""

    max_shift: int = 128
    discard_threshold: float = 0.035
    min_overlap: int = 64
    l1_threshold: float = 0.4
    loss_percentile: float = 99.99
    overexposure_threshold: float = 0.99
    opening_size: int = 3
    max_masked_fraction: float = 0.5
    rgb_patch_size: int = 1024
    rgb_patch_stride: int = 256
    bayer_patch_size: int = 512
    bayer_patch_stride: int = 128
    align_method: str = "hill_climb"
    demosaic_method: str = "edge_aware"

    @classmethod
    def from_settings(cls, **overrides) -> "PreparationOptions":
        """Defaults from Django settings, with explicit overrides applied."""
        values = {
            "max_shift": settings.ALIGN_MAX_SHIFT,
            "discard_threshold": settings.ALIGN_DISCARD_THRESHOLD,
            "min_overlap": settings.ALIGN_MIN_OVERLAP,
            "l1_threshold": settings.MASK_L1_THRESHOLD,
            "loss_percentile": settings.MASK_LOSS_PERCENTILE,
            "overexposure_threshold": settings.MASK_OVEREXPOSURE_THRESHOLD,
            "opening_size": settings.MASK_OPENING_SIZE,
            "max_masked_fraction": settings.PATCH_MAX_MASKED_FRACTION,
            "rgb_patch_size": settings.RGB_PATCH_SIZE,
            "rgb_patch_stride": settings.RGB_PATCH_STRIDE,
            "bayer_patch_size": settings.BAYER_PATCH_SIZE,
            "bayer_patch_stride": settings.BAYER_PATCH_STRIDE,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class LoadedImage:
    """A mosaic prepared for pairing: Rec. 2020 RGB and packed planes."""

    rgb: LinearRgbImage
    packed: PackedBayer
    camera_id: str


@dataclass
class SceneResult:
    scene_id: str
    records: list[PairRecord] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)

    @property
    def total(self) -> int:
        return len(self.records) + len(self.failures)

    def to_dict(self) -> dict:
        return {
            "scene_id": self.scene_id,
            "records": [record.to_dict() for record in self.records],
            "failures": list(self.failures),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SceneResult":
        return cls(
            scene_id=data["scene_id"],
            records=[PairRecord(**record) for record in data["records"]],
            failures=list(data["failures"]),
        )


@dataclass
class PreparationSummary:
    records: list[PairRecord]
    failures: list[str]

    @property
    def total(self) -> int:
        return len(self.records) + len(self.failures)

    @property
    def discarded(self) -> int:
        return sum(1 for record in self.records if record.discarded)

    @property
    def discarded_fraction(self) -> float:
        return self.discarded / len(self.records) if self.records else 0.0

    @property
    def failure_fraction(self) -> float:
        return len(self.failures) / self.total if self.total else 0.0


class PairPreparationService:
    """Runs the normalize -> demosaic -> align -> mask -> patch pipeline."""

    @staticmethod
    def load_image(path: Path, demosaic_method: str = "edge_aware") -> LoadedImage:
        """Read a mosaic and bring it to RGGB planes and Rec. 2020 RGB."""
        mosaic = crop_to_rggb(read_mosaic(path))
        camrgb = demosaic(mosaic, demosaic_method)
        rgb = camrgb_to_rec2020(camrgb, mosaic.meta)
        return LoadedImage(
            rgb=rgb, packed=pack_planes(mosaic), camera_id=mosaic.meta.camera_id
        )

    @staticmethod
    def discover_scenes(input_dir: Path) -> list[Path]:
        """Scene directories holding both clean/ and noisy/ mosaics."""
        input_dir = Path(input_dir)
        if not input_dir.is_dir():
            raise FileNotFoundError(f"input directory {input_dir} does not exist")
        return sorted(
            path
            for path in input_dir.iterdir()
            if (path / CLEAN_DIR).is_dir() and (path / NOISY_DIR).is_dir()
        )

    @staticmethod
    def scene_pairs(scene_dir: Path) -> list[tuple[Path, Path]]:
        """Every (noisy, clean) combination of a scene, in name order."""
        clean = sorted((scene_dir / CLEAN_DIR).glob(MOSAIC_GLOB))
        noisy = sorted((scene_dir / NOISY_DIR).glob(MOSAIC_GLOB))
        return [(n, c) for n in noisy for c in clean]

    @classmethod
    def prepare_pair(
        cls,
        noisy_path: Path,
        clean_path: Path,
        scene_id: str,
        manifest_dir: Path,
        options: PreparationOptions,
        clean: Optional[LoadedImage] = None,
    ) -> PairRecord:
        """Align one pair, write its mask and build its manifest record."""
        noisy = cls.load_image(noisy_path, options.demosaic_method)
        if clean is None:
            clean = cls.load_image(clean_path, options.demosaic_method)
        if noisy.rgb.channels.shape != clean.rgb.channels.shape:
            raise ShapeMismatch(
                f"{noisy_path.name} {noisy.rgb.channels.shape} does not match "
                f"{clean_path.name} {clean.rgb.channels.shape}"
            )

        scaled, gain = match_gain(noisy.rgb, clean.rgb)
        aligner = ALIGNERS[options.align_method]
        extra = (
            {"max_shift": options.max_shift}
            if options.align_method == "hill_climb"
            else {}
        )
        alignment = aligner(
            scaled,
            clean.rgb,
            discard_threshold=options.discard_threshold,
            min_overlap=options.min_overlap,
            **extra,
        )

        noisy_view, clean_view = overlap_views(
            scaled.channels, clean.rgb.channels, alignment.shift
        )
        overlap_mask = build_loss_mask(
            noisy_view,
            clean_view,
            l1_threshold=options.l1_threshold,
            percentile=options.loss_percentile,
            overexposure=options.overexposure_threshold,
            opening_size=options.opening_size,
        )
        # mask lives in clean coordinates; outside the overlap is excluded
        full_mask = np.zeros(clean.rgb.channels.shape[1:], dtype=bool)
        _, mask_view = overlap_views(full_mask, full_mask, alignment.shift)
        mask_view[...] = overlap_mask.mask
        mask = LossMask(full_mask)

        mask_path = (
            manifest_dir
            / "masks"
            / scene_id
            / f"{noisy_path.stem}__{clean_path.stem}{MASK_SUFFIX}"
        )
        mask_path.parent.mkdir(parents=True, exist_ok=True)
        write_mask(mask_path, mask)

        rgb_patches, bayer_patches = [], []
        if not alignment.discarded:
            rgb_patches = extract_patches(
                mask,
                PatchKind.RGB,
                options.rgb_patch_size,
                options.rgb_patch_stride,
                options.max_masked_fraction,
            ).origins
            _, _, bayer_mask = crop_bayer_pair(
                noisy.packed.planes, clean.rgb.channels, full_mask, alignment.shift
            )
            bayer_patches = extract_patches(
                LossMask(bayer_mask),
                PatchKind.BAYER,
                options.bayer_patch_size,
                options.bayer_patch_stride,
                options.max_masked_fraction,
            ).origins

        return PairRecord(
            scene_id=scene_id,
            camera_id=noisy.camera_id,
            shift_y=alignment.shift_y,
            shift_x=alignment.shift_x,
            gain=gain,
            alignment_loss=alignment.loss,
            msssim=adaptive_ms_ssim(noisy_view, clean_view),
            mask_ref=relative_ref(mask_path, manifest_dir),
            discarded=alignment.discarded,
            noisy_ref=relative_ref(noisy_path, manifest_dir),
            clean_ref=relative_ref(clean_path, manifest_dir),
            rgb_patches=tuple(rgb_patches),
            bayer_patches=tuple(bayer_patches),
        )

    @classmethod
    def prepare_scene(
        cls, scene_dir: Path, manifest_dir: Path, options: PreparationOptions
    ) -> SceneResult:
        """Prepare every pair of one scene; pair failures are logged and kept."""
        scene_dir, manifest_dir = Path(scene_dir), Path(manifest_dir)
        result = SceneResult(scene_id=scene_dir.name)
        clean_cache: dict[Path, LoadedImage] = {}
        for noisy_path, clean_path in cls.scene_pairs(scene_dir):
            label = f"{scene_dir.name}/{noisy_path.name}~{clean_path.name}"
            try:
                if clean_path not in clean_cache:
                    clean_cache[clean_path] = cls.load_image(
                        clean_path, options.demosaic_method
                    )
                record = cls.prepare_pair(
                    noisy_path,
                    clean_path,
                    scene_dir.name,
                    manifest_dir,
                    options,
                    clean=clean_cache[clean_path],
                )
            except (RawPipelineError, OSError) as exc:
                logger.warning("Skipping pair %s: %s", label, exc)
                result.failures.append(f"{label}: {exc}")
                continue
            logger.info(
                "Prepared %s shift=(%d,%d) loss=%.4f discarded=%s",
                label,
                record.shift_y,
                record.shift_x,
                record.alignment_loss,
                record.discarded,
            )
            result.records.append(record)
        return result

    @classmethod
    def prepare_dataset(
        cls,
        input_dir: Path,
        manifest_dir: Path,
        options: PreparationOptions,
        threads: int = 1,
        use_celery: bool = False,
    ) -> PreparationSummary:
        """Prepare every scene; output order is by scene id for any worker count."""
        scenes = cls.discover_scenes(input_dir)
        logger.info("Preparing %d scenes from %s", len(scenes), input_dir)
        if use_celery:
            from .tasks import prepare_scene_task

            pending = [
                prepare_scene_task.delay(
                    str(scene), str(manifest_dir), options.to_dict()
                )
                for scene in scenes
            ]
            results = [SceneResult.from_dict(job.get()) for job in pending]
        elif threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(
                    pool.map(
                        lambda scene: cls.prepare_scene(scene, manifest_dir, options),
                        scenes,
                    )
                )
        else:
            results = [cls.prepare_scene(s, manifest_dir, options) for s in scenes]

        results.sort(key=lambda r: r.scene_id)
        return PreparationSummary(
            records=[record for r in results for record in r.records],
            failures=[failure for r in results for failure in r.failures],
        )
