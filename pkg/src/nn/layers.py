"""Layer specifications and shape resolution."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any

from ..config import ConfigError
from ..errors import DimensionError
from ..tensor.core import conv_output_size

DENSE = "dense"
CONV2D = "conv2d"
RELU = "relu"
MAXPOOL2 = "maxpool2"
FLATTEN = "flatten"
SOFTMAX = "softmax"

LAYER_KINDS = (DENSE, CONV2D, RELU, MAXPOOL2, FLATTEN, SOFTMAX)
WEIGHT_KINDS = frozenset({DENSE, CONV2D})

# Keys accepted in a layer dict, per kind (besides "kind")
_ALLOWED_KEYS = {
    DENSE: {"in_features", "out_features"},
    CONV2D: {"in_channels", "out_channels", "kernel_size", "stride", "pad"},
    RELU: set(),
    MAXPOOL2: set(),
    FLATTEN: set(),
    SOFTMAX: set(),
}


@dataclass(frozen=True)
class LayerSpec:
    """One layer of a feed-forward network.

    Dense layers use ``in_features``/``out_features``; conv layers use the
    channel counts, a square ``kernel_size``, ``stride`` and ``pad``.
    ``in_shape``/``out_shape`` are per-example shapes filled in by
    :func:`resolve_layers`.
    """

    kind: str
    in_features: int = 0
    out_features: int = 0
    in_channels: int = 0
    out_channels: int = 0
    kernel_size: int = 0
    stride: int = 1
    pad: int = 0
    in_shape: tuple[int, ...] | None = None
    out_shape: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if self.kind not in LAYER_KINDS:
            raise ConfigError(f"unknown layer kind {self.kind!r}; expected one of {', '.join(LAYER_KINDS)}")

    @property
    def weight_bearing(self) -> bool:
        return self.kind in WEIGHT_KINDS

    @property
    def weight_shape(self) -> tuple[int, ...]:
        if self.kind == DENSE:
            return (self.in_features, self.out_features)
        if self.kind == CONV2D:
            return (self.out_channels, self.in_channels, self.kernel_size, self.kernel_size)
        raise ConfigError(f"{self.kind} layers carry no weights")

    @property
    def bias_shape(self) -> tuple[int]:
        return (self.out_features,) if self.kind == DENSE else (self.out_channels,)

    @property
    def fan_in(self) -> int:
        if self.kind == DENSE:
            return self.in_features
        return self.in_channels * self.kernel_size * self.kernel_size

    @property
    def resolved(self) -> bool:
        return self.in_shape is not None and self.out_shape is not None


def layer_from_dict(raw: dict[str, Any]) -> LayerSpec:
    """Build an unresolved LayerSpec from a config dict, rejecting unknown keys."""
    if not isinstance(raw, dict) or "kind" not in raw:
        raise ConfigError(f"layer entry must be an object with a 'kind', got: {raw!r}")
    kind = raw["kind"]
    if kind not in _ALLOWED_KEYS:
        raise ConfigError(f"unknown layer kind {kind!r}")
    unknown = set(raw) - _ALLOWED_KEYS[kind] - {"kind"}
    if unknown:
        raise ConfigError(f"unknown keys for {kind} layer: {', '.join(sorted(unknown))}")
    params = {k: v for k, v in raw.items() if k != "kind"}
    for key, value in params.items():
        if not isinstance(value, int) or isinstance(value, bool) or value < 0:
            raise ConfigError(f"{kind}.{key} must be a non-negative integer, got: {value!r}")
    if kind == CONV2D and params.get("stride", 1) < 1:
        raise ConfigError("conv2d.stride must be >= 1")
    return LayerSpec(kind=kind, **params)


def resolve_layers(layers: list[LayerSpec], input_shape: tuple[int, ...]) -> list[LayerSpec]:
    """Infer missing fan-ins and fill per-example input/output shapes.

    Raises:
        DimensionError: If consecutive layer shapes are incompatible.
        ConfigError: If a weight layer has no output width.
    """
    shape = tuple(input_shape)
    resolved: list[LayerSpec] = []
    for pos, spec in enumerate(layers):
        where = f"layer {pos} ({spec.kind})"
        if spec.kind == DENSE:
            if len(shape) != 1:
                raise DimensionError(f"{where} needs a flat input, got shape {shape}; add a flatten layer")
            if spec.out_features < 1:
                raise ConfigError(f"{where} needs out_features >= 1")
            if spec.in_features and spec.in_features != shape[0]:
                raise DimensionError(f"{where} declares in_features={spec.in_features} but receives {shape[0]}")
            spec = replace(spec, in_features=shape[0])
            out = (spec.out_features,)
        elif spec.kind == CONV2D:
            if len(shape) != 3:
                raise DimensionError(f"{where} needs a (C, H, W) input, got shape {shape}")
            if spec.out_channels < 1 or spec.kernel_size < 1:
                raise ConfigError(f"{where} needs out_channels and kernel_size >= 1")
            if spec.in_channels and spec.in_channels != shape[0]:
                raise DimensionError(f"{where} declares in_channels={spec.in_channels} but receives {shape[0]}")
            spec = replace(spec, in_channels=shape[0])
            out = (
                spec.out_channels,
                conv_output_size(shape[1], spec.kernel_size, spec.stride, spec.pad),
                conv_output_size(shape[2], spec.kernel_size, spec.stride, spec.pad),
            )
        elif spec.kind == MAXPOOL2:
            if len(shape) != 3 or shape[1] < 2 or shape[2] < 2:
                raise DimensionError(f"{where} needs a (C, H>=2, W>=2) input, got shape {shape}")
            out = (shape[0], shape[1] // 2, shape[2] // 2)
        elif spec.kind == FLATTEN:
            size = 1
            for dim in shape:
                size *= dim
            out = (size,)
        elif spec.kind == SOFTMAX:
            if len(shape) != 1:
                raise DimensionError(f"{where} needs a flat input, got shape {shape}")
            out = shape
        else:
            out = shape
        resolved.append(replace(spec, in_shape=shape, out_shape=out))
        shape = out
    return resolved


def default_architecture(num_classes: int = 10) -> list[dict[str, Any]]:
    """The desk-scale CNN: two conv blocks and two dense layers (4 weight layers)."""
    return [
        {"kind": CONV2D, "out_channels": 16, "kernel_size": 3},
        {"kind": RELU},
        {"kind": MAXPOOL2},
        {"kind": CONV2D, "out_channels": 32, "kernel_size": 3},
        {"kind": RELU},
        {"kind": MAXPOOL2},
        {"kind": FLATTEN},
        {"kind": DENSE, "out_features": 128},
        {"kind": RELU},
        {"kind": DENSE, "out_features": num_classes},
        {"kind": SOFTMAX},
    ]
