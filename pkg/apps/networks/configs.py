"""Model and training configuration records."""

from dataclasses import asdict, dataclass
from typing import Optional

from apps.core.enums import InputKind, UpscaleMode

NEGATIVE_SLOPE = 0.2
DEFAULT_LAMBDA = 0.005
RGB_CROP_SIZE = 256
# packed-plane side; the clean target is twice as large
BAYER_CROP_SIZE = 128


def default_crop_size(
    input_kind: InputKind,
    rgb_crop: int = RGB_CROP_SIZE,
    bayer_crop: int = BAYER_CROP_SIZE,
) -> int:
    """Training crop side, in clean-image pixels, for an input kind."""
    if InputKind(input_kind) == InputKind.BAYER4:
        return 2 * bayer_crop
    return rgb_crop


@dataclass(frozen=True)
class UNetConfig:
    """Halved-channel U-Net denoiser.

    ``output_upscale`` is derived from ``input_kind`` when omitted; packed
    Bayer input always needs the PixelShuffle head.
    """

    base_channels: int = 32
    depth: int = 4
    negative_slope: float = NEGATIVE_SLOPE
    input_kind: InputKind = InputKind.RGB3
    output_upscale: Optional[UpscaleMode] = None
    gamma_before_loss: bool = False

    def __post_init__(self):
        kind = InputKind(self.input_kind)
        object.__setattr__(self, "input_kind", kind)
        upscale = self.output_upscale
        if upscale is None:
            upscale = (
                UpscaleMode.PIXEL_SHUFFLE_2X
                if kind == InputKind.BAYER4
                else UpscaleMode.NONE
            )
        upscale = UpscaleMode(upscale)
        if kind == InputKind.BAYER4 and upscale != UpscaleMode.PIXEL_SHUFFLE_2X:
            raise ValueError("bayer4 input requires the pixel_shuffle_2x head")
        object.__setattr__(self, "output_upscale", upscale)
        if self.base_channels < 1 or self.depth < 1:
            raise ValueError("base_channels and depth must be positive")

    @property
    def divisor(self) -> int:
        """Input sides must be multiples of this."""
        return 2**self.depth


@dataclass(frozen=True)
class JddcConfig:
    """Joint denoising (demosaicing) and compression autoencoder."""

    enc_channels: int = 64
    latent_channels: int = 96
    input_kind: InputKind = InputKind.RGB3
    bayer_head: Optional[bool] = None
    lam: float = DEFAULT_LAMBDA
    stages: int = 4

    def __post_init__(self):
        kind = InputKind(self.input_kind)
        object.__setattr__(self, "input_kind", kind)
        head = self.bayer_head
        if head is None:
            head = kind == InputKind.BAYER4
        if kind == InputKind.BAYER4 and not head:
            raise ValueError("bayer4 input requires the Bayer decoder head")
        object.__setattr__(self, "bayer_head", bool(head))
        if self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if min(self.enc_channels, self.latent_channels, self.stages) < 1:
            raise ValueError("channel counts and stages must be positive")

    @property
    def divisor(self) -> int:
        return 2**self.stages


@dataclass(frozen=True)
class TrainingConfig:
    """Everything a training run depends on.

    The on-disk form is JSON validated by ``TrainingConfigSerializer``;
    ``lambda`` is spelled ``lam`` here.
    """

    model: str = "jddc"
    input_kind: InputKind = InputKind.RGB3
    lam: float = DEFAULT_LAMBDA
    lr: float = 1e-4
    steps: int = 2000
    seed: int = 0
    batch_size: int = 4
    crop_size: Optional[int] = None
    base_channels: int = 32
    depth: int = 4
    enc_channels: int = 64
    latent_channels: int = 96
    gamma_before_loss: bool = False
    clean_fraction: float = 0.0
    num_items: int = 64
    log_every: int = 100
    manifest: Optional[str] = None
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "input_kind", InputKind(self.input_kind))
        if self.model not in ("jddc", "unet"):
            raise ValueError(f"unknown model {self.model!r}")
        if not self.label:
            object.__setattr__(self, "label", f"{self.model}-{self.input_kind.value}")
        if self.crop_size is None:
            object.__setattr__(self, "crop_size", default_crop_size(self.input_kind))
        divisor = 2 ** (self.depth if self.model == "unet" else 4)
        # Bayer models see the crop at half resolution
        side = self.crop_size
        if self.input_kind == InputKind.BAYER4:
            side //= 2
        if self.crop_size % 2 or side % divisor:
            raise ValueError(
                f"crop_size {self.crop_size} does not fit the {self.model} "
                f"downsampling factor {divisor} for {self.input_kind.value} input"
            )

    def model_config(self):
        """The UNetConfig or JddcConfig this run trains."""
        if self.model == "unet":
            return UNetConfig(
                base_channels=self.base_channels,
                depth=self.depth,
                input_kind=self.input_kind,
                gamma_before_loss=self.gamma_before_loss,
            )
        return JddcConfig(
            enc_channels=self.enc_channels,
            latent_channels=self.latent_channels,
            input_kind=self.input_kind,
            lam=self.lam,
        )

    def to_dict(self) -> dict:
        data = asdict(self)
        data["input_kind"] = self.input_kind.value
        data["lambda"] = data.pop("lam")
        return data
