"""Manifest record binding one noisy/clean pair."""

from dataclasses import dataclass, field, fields


@dataclass(frozen=True)
class PairRecord:
    """One manifest row. Paths are relative to the manifest directory.

    Field declaration order is the manifest's field order.
    """

    scene_id: str
    camera_id: str
    shift_y: int
    shift_x: int
    gain: float
    alignment_loss: float
    msssim: float
    mask_ref: str
    discarded: bool
    noisy_ref: str = ""
    clean_ref: str = ""
    rgb_patches: tuple[tuple[int, int], ...] = field(default_factory=tuple)
    bayer_patches: tuple[tuple[int, int], ...] = field(default_factory=tuple)

    def __post_init__(self):
        for name in ("rgb_patches", "bayer_patches"):
            origins = tuple((int(y), int(x)) for y, x in getattr(self, name))
            object.__setattr__(self, name, origins)

    def to_dict(self) -> dict:
        """Plain dict in the fixed manifest field order."""
        data = {}
        for name in MANIFEST_FIELDS:
            value = getattr(self, name)
            if name.endswith("_patches"):
                value = [list(origin) for origin in value]
            data[name] = value
        return data


MANIFEST_FIELDS = tuple(f.name for f in fields(PairRecord))
