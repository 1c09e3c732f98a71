"""Seeded parameters of the proxy development pipeline."""

import json
from dataclasses import asdict, dataclass

from rest_framework import serializers

from apps.core.exceptions import ParseError
from apps.core.utils import SplitMix64

# name -> (low, high); sampled uniformly in this order.
PARAM_RANGES = {
    "log_tonemap_strength": (0.0, 8.0),
    "laplacian_gain": (0.0, 0.5),
    "gamma": (1.8, 2.6),
    "sigmoid_gain": (0.0, 10.0),
    "sigmoid_midpoint": (0.3, 0.7),
    "unsharp_sigma": (0.5, 2.0),
    "unsharp_amount": (0.0, 1.5),
}
OPERATIONS = ("log_tonemap", "laplacian", "gamma", "sigmoid", "unsharp")
OP_PROBABILITY = 0.8


@dataclass(frozen=True)
class DevParams:
    log_tonemap_strength: float
    laplacian_gain: float
    gamma: float
    sigmoid_gain: float
    sigmoid_midpoint: float
    unsharp_sigma: float
    unsharp_amount: float
    op_enabled: tuple[bool, bool, bool, bool, bool]
    seed: int

    def enabled(self, operation: str) -> bool:
        return self.op_enabled[OPERATIONS.index(operation)]

    @classmethod
    def disabled(cls, seed: int = 0) -> "DevParams":
        """Every stage switched off (clamp only)."""
        return cls(
            log_tonemap_strength=0.0,
            laplacian_gain=0.0,
            gamma=2.2,
            sigmoid_gain=0.0,
            sigmoid_midpoint=0.5,
            unsharp_sigma=1.0,
            unsharp_amount=0.0,
            op_enabled=(False,) * len(OPERATIONS),
            seed=seed,
        )


def sample_dev_params(seed: int) -> DevParams:
    """Deterministic draw of every parameter and stage switch from ``seed``."""
    rng = SplitMix64(seed)
    values = {name: rng.uniform(low, high) for name, (low, high) in PARAM_RANGES.items()}
    enabled = tuple(rng.bernoulli(OP_PROBABILITY) for _ in OPERATIONS)
    return DevParams(**values, op_enabled=enabled, seed=seed)


class DevParamsSerializer(serializers.Serializer):
    """Range-checked DevParams record."""

    log_tonemap_strength = serializers.FloatField(min_value=0.0)
    laplacian_gain = serializers.FloatField(min_value=0.0)
    gamma = serializers.FloatField()
    sigmoid_gain = serializers.FloatField(min_value=0.0)
    sigmoid_midpoint = serializers.FloatField()
    unsharp_sigma = serializers.FloatField()
    unsharp_amount = serializers.FloatField(min_value=0.0)
    op_enabled = serializers.ListField(
        child=serializers.BooleanField(),
        min_length=len(OPERATIONS),
        max_length=len(OPERATIONS),
    )
    seed = serializers.IntegerField(min_value=0, max_value=2**64 - 1)

    def validate_gamma(self, value):
        if value <= 0:
            raise serializers.ValidationError("gamma must be > 0")
        return value

    def validate_sigmoid_midpoint(self, value):
        if not 0.0 < value < 1.0:
            raise serializers.ValidationError("sigmoid_midpoint must be in (0, 1)")
        return value

    def validate_unsharp_sigma(self, value):
        if value <= 0:
            raise serializers.ValidationError("unsharp_sigma must be > 0")
        return value

    def create(self, validated_data):
        validated_data["op_enabled"] = tuple(validated_data["op_enabled"])
        return DevParams(**validated_data)


def dev_params_to_json(params: DevParams) -> str:
    data = asdict(params)
    data["op_enabled"] = list(params.op_enabled)
    return json.dumps(data, separators=(", ", ": "))


def dev_params_from_json(text: str) -> DevParams:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line_number=exc.lineno)
    serializer = DevParamsSerializer(data=data)
    if not serializer.is_valid():
        raise ParseError(f"invalid development parameters: {serializer.errors}")
    return serializer.save()
