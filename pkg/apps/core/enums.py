"""Core enumeration classes shared by the raw pipeline apps."""

from django.db import models


class CfaPattern(models.TextChoices):
    """Bayer colour filter array phase, named by the 2x2 top-left block."""

    RGGB = "RGGB", "RGGB"
    GRBG = "GRBG", "GRBG"
    GBRG = "GBRG", "GBRG"
    BGGR = "BGGR", "BGGR"

    @property
    def offset(self) -> tuple[int, int]:
        """Row/column offset of the first red site."""
        return {
            "RGGB": (0, 0),
            "GRBG": (0, 1),
            "GBRG": (1, 0),
            "BGGR": (1, 1),
        }[self.value]


class ColorSpace(models.TextChoices):
    """Colour space tag carried by linear RGB images."""

    CAMRGB = "camrgb", "Camera RGB"
    REC2020 = "rec2020", "Linear Rec. 2020"


class InputKind(models.TextChoices):
    """Representation a network consumes."""

    BAYER4 = "bayer4", "Packed Bayer (4 planes)"
    BAYER_PREUP = "bayer_preup", "Bilinear pre-upsampled Bayer"
    RGB3 = "rgb3", "Linear Rec. 2020"
    DEVELOPED3 = "developed3", "Developed image"

    @property
    def channels(self) -> int:
        """Number of input channels."""
        return 4 if self == InputKind.BAYER4 else 3

    @property
    def outputs_camrgb(self) -> bool:
        """Whether the network output is camera RGB and needs colour conversion."""
        return self in (InputKind.BAYER4, InputKind.BAYER_PREUP)


class PatchKind(models.TextChoices):
    """Patch grid flavour."""

    RGB = "rgb", "RGB"
    BAYER = "bayer", "Bayer"


class UpscaleMode(models.TextChoices):
    """Output head upscaling."""

    NONE = "none", "None"
    PIXEL_SHUFFLE_2X = "pixel_shuffle_2x", "PixelShuffle x2"
