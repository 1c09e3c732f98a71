"""Serializers validating manifest rows."""

from rest_framework import serializers

from .records import MANIFEST_FIELDS, PairRecord


class PatchOriginField(serializers.ListField):
    """``[origin_y, origin_x]`` pair of non-negative integers."""

    child = serializers.IntegerField(min_value=0)

    def __init__(self, **kwargs):
        kwargs.setdefault("min_length", 2)
        kwargs.setdefault("max_length", 2)
        super().__init__(**kwargs)


class PairRecordSerializer(serializers.Serializer):
    """Serializer for one PairRecord manifest row."""

    scene_id = serializers.CharField(allow_blank=False, trim_whitespace=False)
    camera_id = serializers.CharField(allow_blank=False, trim_whitespace=False)
    shift_y = serializers.IntegerField()
    shift_x = serializers.IntegerField()
    gain = serializers.FloatField()
    alignment_loss = serializers.FloatField(min_value=0.0)
    msssim = serializers.FloatField(min_value=0.0, max_value=1.0)
    mask_ref = serializers.CharField(allow_blank=True, trim_whitespace=False)
    discarded = serializers.BooleanField()
    noisy_ref = serializers.CharField(
        allow_blank=True, trim_whitespace=False, required=False, default=""
    )
    clean_ref = serializers.CharField(
        allow_blank=True, trim_whitespace=False, required=False, default=""
    )
    rgb_patches = serializers.ListField(
        child=PatchOriginField(), required=False, default=list
    )
    bayer_patches = serializers.ListField(
        child=PatchOriginField(), required=False, default=list
    )

    def validate_gain(self, value):
        """Gain must be strictly positive."""
        if not value > 0:
            raise serializers.ValidationError("gain must be > 0")
        return value

    def validate(self, attrs):
        unknown = set(self.initial_data) - set(MANIFEST_FIELDS)
        if unknown:
            raise serializers.ValidationError(
                f"unknown fields: {', '.join(sorted(unknown))}"
            )
        return attrs

    def create(self, validated_data):
        return PairRecord(**validated_data)
