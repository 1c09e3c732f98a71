"""Management command developing a mosaic through the proxy pipeline."""

from pathlib import Path

from PIL import Image

from apps.core.management.base import PipelineCommand
from apps.devproxy.params import (
    dev_params_from_json,
    dev_params_to_json,
    sample_dev_params,
)
from apps.devproxy.pipeline import develop_proxy
from apps.pairing.services import PairPreparationService


class Command(PipelineCommand):
    """Develop one mosaic to an 8-bit PNG with seeded random parameters."""

    help = "Develop a mosaic with the proxy pipeline and write an 8-bit PNG"

    def add_command_arguments(self, parser):
        """Add command-line arguments."""
        parser.add_argument("--input", required=True, help="Mosaic (.pgm)")
        parser.add_argument("--output", required=True, help="PNG output path")
        parser.add_argument(
            "--params",
            help="JSON parameter file to use instead of sampling from --seed",
        )
        parser.add_argument(
            "--params-out", help="Write the parameters used as JSON to this path"
        )

    def run(self, **options):
        """Execute the development."""
        if options["params"]:
            params = dev_params_from_json(Path(options["params"]).read_text())
        else:
            params = sample_dev_params(options["seed"])
        image = PairPreparationService.load_image(Path(options["input"]))
        developed = develop_proxy(image.rgb, params)

        output = Path(options["output"])
        output.parent.mkdir(parents=True, exist_ok=True)
        Image.fromarray(developed.to_uint8()).save(output, format="PNG")
        if options["params_out"]:
            Path(options["params_out"]).write_text(dev_params_to_json(params) + "\n")
        self.stdout.write(dev_params_to_json(params))
        self.success(f"Wrote {output}")
