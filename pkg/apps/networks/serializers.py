"""Validation of on-disk training configurations."""

import json
from pathlib import Path
from typing import Optional, Union

from rest_framework import serializers

from apps.core.enums import InputKind
from apps.core.exceptions import ParseError

from .configs import TrainingConfig, default_crop_size


class TrainingConfigSerializer(serializers.Serializer):
    """JSON training config; unknown keys are rejected."""

    model = serializers.ChoiceField(choices=["jddc", "unet"], default="jddc")
    input_kind = serializers.ChoiceField(
        choices=InputKind.choices, default=InputKind.RGB3
    )
    # "lambda" is a keyword, mapped onto the ``lam`` field
    lam = serializers.FloatField(min_value=0.0, default=0.005)
    lr = serializers.FloatField(min_value=0.0, default=1e-4)
    steps = serializers.IntegerField(min_value=0, default=2000)
    seed = serializers.IntegerField(min_value=0, max_value=2**63 - 1, default=0)
    batch_size = serializers.IntegerField(min_value=1, default=4)
    # None picks the per-kind default crop
    crop_size = serializers.IntegerField(min_value=2, allow_null=True, default=None)
    base_channels = serializers.IntegerField(min_value=1, default=32)
    depth = serializers.IntegerField(min_value=1, max_value=6, default=4)
    enc_channels = serializers.IntegerField(min_value=1, default=64)
    latent_channels = serializers.IntegerField(min_value=1, default=96)
    gamma_before_loss = serializers.BooleanField(default=False)
    clean_fraction = serializers.FloatField(min_value=0.0, max_value=1.0, default=0.0)
    num_items = serializers.IntegerField(min_value=1, default=64)
    log_every = serializers.IntegerField(min_value=1, default=100)
    manifest = serializers.CharField(required=False, allow_null=True, default=None)
    label = serializers.CharField(required=False, allow_blank=True, default="")

    def to_internal_value(self, data):
        if isinstance(data, dict) and "lambda" in data:
            data = {**data, "lam": data["lambda"]}
            del data["lambda"]
        if isinstance(data, dict):
            unknown = sorted(set(data) - set(self.fields))
            if unknown:
                raise serializers.ValidationError(
                    {key: ["Unknown field."] for key in unknown}
                )
        return super().to_internal_value(data)

    def validate(self, attrs):
        try:
            TrainingConfig(**attrs)
        except ValueError as exc:
            raise serializers.ValidationError(str(exc))
        return attrs

    def create(self, validated_data):
        return TrainingConfig(**validated_data)


def training_config_from_dict(data: dict) -> TrainingConfig:
    serializer = TrainingConfigSerializer(data=data)
    if not serializer.is_valid():
        raise ParseError(f"invalid training config: {serializer.errors}")
    return serializer.save()


def read_training_config_data(path: Union[str, Path]) -> dict:
    """The JSON object of a training config file, not yet validated."""
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc.msg}", line_number=exc.lineno)
    if not isinstance(data, dict):
        raise ParseError(f"{path}: training config must be a JSON object")
    return data


def load_training_config(path: Union[str, Path]) -> TrainingConfig:
    """Read and validate a JSON training config."""
    return training_config_from_dict(read_training_config_data(path))


def build_training_config(
    path: Optional[Union[str, Path]] = None,
    crop_sizes: Optional[tuple[int, int]] = None,
    **overrides,
) -> TrainingConfig:
    """Config from ``path`` (or defaults) with non-None overrides applied.

    ``crop_sizes`` is the (RGB, packed Bayer) crop used when neither the
    file nor the overrides set ``crop_size``.
    """
    data = read_training_config_data(path) if path else {}
    derived = f"{data.get('model', 'jddc')}-{data.get('input_kind', 'rgb3')}"
    if data.get("label") == derived:
        # derived label, re-derive after overrides
        del data["label"]
    if overrides.get("lam") is not None:
        data["lambda"] = overrides.pop("lam")
    data.update({k: v for k, v in overrides.items() if v is not None})
    kind = data.get("input_kind", InputKind.RGB3)
    if data.get("crop_size") is None and crop_sizes and kind in InputKind.values:
        data["crop_size"] = default_crop_size(kind, *crop_sizes)
    return training_config_from_dict(data)
