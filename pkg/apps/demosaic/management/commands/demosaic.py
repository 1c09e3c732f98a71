"""Management command demosaicing a single mosaic."""

from pathlib import Path

import numpy as np
from PIL import Image

from apps.color.matrices import camrgb_to_rec2020
from apps.core.enums import ColorSpace
from apps.core.io import read_mosaic
from apps.core.management.base import PipelineCommand
from apps.core.mosaic import crop_to_rggb
from apps.demosaic.interpolation import DEMOSAICERS, demosaic
from apps.pairing.patches import write_rawpatch


class Command(PipelineCommand):
    """Demosaic a mosaic to a planar float32 .rawpatch file."""

    help = "Demosaic one mosaic (PGM + sidecar) to linear RGB"

    def add_command_arguments(self, parser):
        """Add command-line arguments."""
        parser.add_argument("--input", required=True, help="Mosaic (.pgm)")
        parser.add_argument("--output", required=True, help=".rawpatch output path")
        parser.add_argument(
            "--method",
            choices=sorted(DEMOSAICERS),
            default="edge_aware",
            help="Interpolation method (default: edge_aware)",
        )
        parser.add_argument(
            "--colorspace",
            choices=ColorSpace.values,
            default=ColorSpace.REC2020,
            help="Output colour space (default: rec2020)",
        )
        parser.add_argument(
            "--preview", help="Also write a clipped, gamma 2.2 PNG preview here"
        )

    def run(self, **options):
        """Execute the demosaic."""
        mosaic = crop_to_rggb(read_mosaic(Path(options["input"])))
        image = demosaic(mosaic, options["method"])
        if options["colorspace"] == ColorSpace.REC2020:
            image = camrgb_to_rec2020(image, mosaic.meta)

        output = Path(options["output"])
        output.parent.mkdir(parents=True, exist_ok=True)
        write_rawpatch(output, image.channels)
        if options["preview"]:
            preview = np.clip(image.channels, 0.0, 1.0) ** (1 / 2.2)
            pixels = np.round(preview.transpose(1, 2, 0) * 255).astype(np.uint8)
            Image.fromarray(pixels).save(options["preview"], format="PNG")
        self.success(
            f"Wrote {output}: {image.height}x{image.width} {image.colorspace}"
        )
