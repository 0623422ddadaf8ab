"""Mask plans, mask sampling and the DropConnect / Dropout layer forwards."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..config import ConfigError
from ..errors import DimensionError
from ..tensor.core import Tensor, check_finite, conv2d, matmul
from ..tensor.rng import RngStream

DROPCONNECT = "dropconnect"
DROPOUT = "dropout"
DETERMINISTIC = "deterministic"
MODES = (DROPCONNECT, DROPOUT, DETERMINISTIC)

INVERTED = "inverted"
NO_SCALE = "none"
SCALE_MODES = (INVERTED, NO_SCALE)

Activation = Callable[[Tensor], Tensor]


def identity(x: Tensor) -> Tensor:
    return x


def validate_drop_prob(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise ConfigError(f"drop_prob must be in [0, 1], got: {p!r}")
    return float(p)


@dataclass(frozen=True)
class MaskPlan:
    """Stochastic configuration of a forward pass.

    ``drop_prob`` is the probability that a weight (or neuron) is zeroed;
    ``lambda_frozen`` counts the leading weight-bearing layers run without masks.
    """

    drop_prob: float = 0.0
    lambda_frozen: int = 0
    mode: str = DROPCONNECT
    scale_mode: str = INVERTED

    def __post_init__(self) -> None:
        validate_drop_prob(self.drop_prob)
        if isinstance(self.lambda_frozen, bool) or not isinstance(self.lambda_frozen, int) or self.lambda_frozen < 0:
            raise ConfigError(f"lambda_frozen must be a non-negative integer, got: {self.lambda_frozen!r}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {', '.join(MODES)}, got: {self.mode!r}")
        if self.scale_mode not in SCALE_MODES:
            raise ConfigError(f"scale_mode must be one of {', '.join(SCALE_MODES)}, got: {self.scale_mode!r}")

    @property
    def stochastic(self) -> bool:
        return self.mode != DETERMINISTIC

    @property
    def scale(self) -> float:
        """Multiplier applied to masked layers (1/(1-p) when inverted)."""
        if self.scale_mode == INVERTED and self.drop_prob < 1.0:
            return 1.0 / (1.0 - self.drop_prob)
        return 1.0

    def check_lambda(self, n_weight_layers: int) -> None:
        if self.lambda_frozen > n_weight_layers:
            raise ConfigError(
                f"lambda_frozen={self.lambda_frozen} exceeds the network's {n_weight_layers} weight layers"
            )

    def is_masked(self, weight_index: int) -> bool:
        return self.stochastic and weight_index >= self.lambda_frozen


def sample_mask(shape: tuple[int, ...], p: float, stream: RngStream) -> Tensor:
    """Binary float32 mask: each element is 0 with probability ``p``, else 1."""
    validate_drop_prob(p)
    size = int(np.prod(shape)) if shape else 1
    keep = stream.uniform(size) >= p
    return keep.astype(np.float32).reshape(shape)


def apply_weights(x: Tensor, w: Tensor, stride: int = 1, pad: int = 0) -> Tensor:
    """x·w for dense weights (in×out) or the convolution for 4-D kernels."""
    if w.ndim == 4:
        return conv2d(x, w, stride=stride, pad=pad)
    if x.ndim == 1:
        return matmul(x[None, :], w)[0]
    return matmul(x, w)


def add_bias(y: Tensor, bias: Tensor, conv: bool) -> Tensor:
    if conv:
        return y + bias.reshape(-1, 1, 1)
    return y + bias


def dropconnect_forward(
    x: Tensor,
    w: Tensor,
    bias: Tensor,
    mask: Tensor,
    scale: float = 1.0,
    activation: Activation = identity,
    stride: int = 1,
    pad: int = 0,
) -> Tensor:
    """σ(scale · (x · (w ⊙ mask)) + bias); the bias is never masked."""
    if mask.shape != w.shape:
        raise DimensionError(f"DropConnect mask shape {mask.shape} differs from weight shape {w.shape}")
    y = apply_weights(x, w * mask, stride, pad)
    if scale != 1.0:
        y = y * y.dtype.type(scale)
    return check_finite(activation(add_bias(y, bias, w.ndim == 4)), "dropconnect_forward")


def dropout_forward(
    x: Tensor,
    w: Tensor,
    bias: Tensor,
    neuron_mask: Tensor,
    scale: float = 1.0,
    activation: Activation = identity,
    stride: int = 1,
    pad: int = 0,
) -> Tensor:
    """σ(scale · ((x·w + bias) ⊙ neuron_mask)); zeroes whole neurons/channels."""
    conv = w.ndim == 4
    width = w.shape[0] if conv else w.shape[1]
    if neuron_mask.shape != (width,):
        raise DimensionError(f"Dropout mask shape {neuron_mask.shape} does not match {width} output units")
    y = add_bias(apply_weights(x, w, stride, pad), bias, conv)
    y = y * (neuron_mask.reshape(-1, 1, 1) if conv else neuron_mask)
    if scale != 1.0:
        y = y * y.dtype.type(scale)
    return check_finite(activation(y), "dropout_forward")


def deterministic_forward(x: Tensor, w: Tensor, bias: Tensor, stride: int = 1, pad: int = 0) -> Tensor:
    """x·w + bias with the full, unscaled weights."""
    return check_finite(add_bias(apply_weights(x, w, stride, pad), bias, w.ndim == 4), "deterministic_forward")
