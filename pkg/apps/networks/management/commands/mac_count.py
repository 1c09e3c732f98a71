"""Management command reporting model complexity in GMAC per megapixel."""

import json

from apps.core.enums import InputKind
from apps.core.management.base import PipelineCommand
from apps.networks.complexity import count_macs
from apps.networks.configs import JddcConfig, UNetConfig

GIGA = 1e9


class Command(PipelineCommand):
    """Print GMAC/MP of the U-Net and JDDC variants and their Bayer:RGB ratios."""

    help = (
        "Count multiply-accumulates per megapixel for Bayer and RGB variants "
        "of the denoiser and compression models"
    )

    def add_command_arguments(self, parser):
        """Add command-line arguments."""
        parser.add_argument(
            "--base-channels",
            type=int,
            default=32,
            help="U-Net width (default: 32, half of the usual 64)",
        )
        parser.add_argument("--depth", type=int, default=4, help="U-Net depth")
        parser.add_argument("--enc-channels", type=int, default=64)
        parser.add_argument("--latent-channels", type=int, default=96)
        parser.add_argument(
            "--megapixels", type=float, default=1.0, help="Output image size"
        )
        parser.add_argument("--json", action="store_true", help="Print JSON")

    def run(self, **options):
        """Execute the count."""
        mp = options["megapixels"]

        def unet(kind):
            return UNetConfig(
                base_channels=options["base_channels"],
                depth=options["depth"],
                input_kind=kind,
            )

        def jddc(kind):
            return JddcConfig(
                enc_channels=options["enc_channels"],
                latent_channels=options["latent_channels"],
                input_kind=kind,
            )

        rows = {
            "unet_bayer": count_macs(unet(InputKind.BAYER4), mp),
            "unet_rgb": count_macs(unet(InputKind.RGB3), mp),
            "jddc_bayer_encoder": count_macs(jddc(InputKind.BAYER4), mp, "encoder"),
            "jdc_rgb_encoder": count_macs(jddc(InputKind.RGB3), mp, "encoder"),
            "jddc_bayer_decoder": count_macs(jddc(InputKind.BAYER4), mp, "decoder"),
            "jdc_rgb_decoder": count_macs(jddc(InputKind.RGB3), mp, "decoder"),
            "denoise_then_compress": count_macs(
                [unet(InputKind.BAYER4), jddc(InputKind.RGB3)], mp
            ),
        }
        ratios = {
            "unet_bayer_to_rgb": rows["unet_bayer"] / rows["unet_rgb"],
            "encoder_bayer_to_rgb": rows["jddc_bayer_encoder"]
            / rows["jdc_rgb_encoder"],
            "decoder_bayer_to_rgb": rows["jddc_bayer_decoder"]
            / rows["jdc_rgb_decoder"],
        }
        if options["json"]:
            self.stdout.write(json.dumps({"macs": rows, "ratios": ratios}, indent=2))
            return
        for name, macs in rows.items():
            self.stdout.write(f"{name:<24} {macs / GIGA:10.2f} GMAC/{mp:g}MP")
        for name, ratio in ratios.items():
            self.stdout.write(f"{name:<24} {ratio:10.4f}")
