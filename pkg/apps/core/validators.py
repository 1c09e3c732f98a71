"""Validation functions for sensor metadata and sidecar fields."""

import numpy as np

from rest_framework import serializers

from .enums import CfaPattern
from .exceptions import MetaInvalid
from .images import SensorMeta

# Minimum |det| for a colour matrix to count as invertible.
MIN_DETERMINANT = 1e-12


def validate_levels(black_level: np.ndarray, white_level: float) -> None:
    """White level must exceed the black level of every plane."""
    black = np.asarray(black_level, dtype=np.float64)
    if not np.all(np.isfinite(black)) or not np.isfinite(white_level):
        raise MetaInvalid("black_level and white_level must be finite")
    if np.any(white_level <= black):
        raise MetaInvalid(
            f"white_level {white_level} must exceed black_level {black.tolist()}"
        )


def validate_color_matrix(matrix: np.ndarray) -> None:
    """Matrix must be finite and invertible."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.shape != (3, 3) or not np.all(np.isfinite(matrix)):
        raise MetaInvalid("xyz_to_camrgb must be a finite 3x3 matrix")
    det = np.linalg.det(matrix)
    if not np.isfinite(det) or abs(det) <= MIN_DETERMINANT:
        raise MetaInvalid(f"xyz_to_camrgb is not invertible (det={det:.3g})")


def validate_sensor_meta(meta: SensorMeta) -> SensorMeta:
    """Check every SensorMeta invariant and return the metadata unchanged."""
    validate_levels(meta.black_level, meta.white_level)
    validate_color_matrix(meta.xyz_to_camrgb)
    return meta


class RealListField(serializers.CharField):
    """Whitespace-separated list of reals with an allowed set of lengths."""

    default_error_messages = {
        "not_real": "Expected whitespace-separated real numbers.",
        "bad_length": "Expected {lengths} values, got {count}.",
    }

    def __init__(self, lengths: tuple[int, ...], **kwargs):
        self.lengths = lengths
        super().__init__(**kwargs)

    def to_internal_value(self, data):
        text = super().to_internal_value(data)
        try:
            values = [float(token) for token in text.split()]
        except ValueError:
            self.fail("not_real")
        if len(values) not in self.lengths:
            self.fail(
                "bad_length",
                lengths=" or ".join(str(n) for n in self.lengths),
                count=len(values),
            )
        return values


class SensorMetaSerializer(serializers.Serializer):
    """Validates the key=value sidecar that accompanies every mosaic."""

    cfa = serializers.ChoiceField(choices=CfaPattern.choices)
    black_level = RealListField(lengths=(1, 4))
    white_level = serializers.FloatField()
    xyz_to_camrgb = RealListField(lengths=(9,))
    camera_id = serializers.CharField(required=False, default="unknown")

    def validate(self, attrs):
        try:
            validate_levels(np.asarray(attrs["black_level"]), attrs["white_level"])
            validate_color_matrix(np.asarray(attrs["xyz_to_camrgb"]).reshape(3, 3))
        except MetaInvalid as exc:
            raise serializers.ValidationError(str(exc))
        return attrs

    def to_meta(self) -> tuple[CfaPattern, SensorMeta]:
        """Build domain objects from validated data."""
        data = self.validated_data
        meta = SensorMeta(
            black_level=np.asarray(data["black_level"]),
            white_level=data["white_level"],
            xyz_to_camrgb=np.asarray(data["xyz_to_camrgb"]).reshape(3, 3),
            camera_id=data["camera_id"],
        )
        return CfaPattern(data["cfa"]), meta
