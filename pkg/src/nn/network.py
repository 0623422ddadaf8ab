"""Network assembly, weight initialisation and the stochastic forward pass."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..config import ConfigError
from ..errors import DimensionError
from ..tensor.core import DEFAULT_DTYPE, Tensor, check_finite, maxpool2, relu, softmax
from ..tensor.rng import mix_seed, rng_stream
from .layers import CONV2D, FLATTEN, MAXPOOL2, RELU, SOFTMAX, LayerSpec, layer_from_dict, resolve_layers
from .masks import DROPOUT, MaskPlan, deterministic_forward, dropconnect_forward, dropout_forward, sample_mask

logger = logging.getLogger(__name__)

# Salt mixed into the seed used for weight initialisation
_INIT_SALT = 0x1A17


@dataclass
class LayerTrace:
    """What one layer saw during a traced forward pass (used by backprop)."""

    position: int
    inputs: Tensor
    pool_index: Tensor | None = None


@dataclass
class Network:
    """An ordered stack of layers plus one weight/bias pair per weight layer.

    ``layers`` must be resolved against ``input_shape`` (see
    :func:`src.nn.layers.resolve_layers`) and end with a softmax layer.
    """

    layers: list[LayerSpec]
    input_shape: tuple[int, ...]
    weights: list[Tensor]
    biases: list[Tensor]
    weight_positions: list[int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.input_shape = tuple(self.input_shape)
        check = resolve_layers(self.layers, self.input_shape)
        if [(s.in_shape, s.out_shape) for s in check] != [(s.in_shape, s.out_shape) for s in self.layers]:
            raise DimensionError("layer shapes are not resolved against the declared input shape")
        if not self.layers or self.layers[-1].kind != SOFTMAX:
            raise ConfigError("a network must end with a softmax layer")
        if any(s.kind == SOFTMAX for s in self.layers[:-1]):
            raise ConfigError("softmax may only appear as the final layer")
        self.weight_positions = [i for i, s in enumerate(self.layers) if s.weight_bearing]
        if len(self.weights) != len(self.weight_positions) or len(self.biases) != len(self.weight_positions):
            raise ConfigError(
                f"expected {len(self.weight_positions)} weight/bias pairs, got "
                f"{len(self.weights)}/{len(self.biases)}"
            )
        for j, pos in enumerate(self.weight_positions):
            spec = self.layers[pos]
            if self.weights[j].shape != spec.weight_shape or self.biases[j].shape != spec.bias_shape:
                raise DimensionError(
                    f"weight layer {j}: expected {spec.weight_shape}/{spec.bias_shape}, got "
                    f"{self.weights[j].shape}/{self.biases[j].shape}"
                )

    @property
    def n_weight_layers(self) -> int:
        return len(self.weight_positions)

    @property
    def num_classes(self) -> int:
        return self.layers[-1].out_shape[0]

    @property
    def dtype(self) -> np.dtype:
        return self.weights[0].dtype if self.weights else np.dtype(DEFAULT_DTYPE)

    def weight_index_at(self, position: int) -> int | None:
        """Weight-layer index of the layer at ``position`` (None for non-weight layers)."""
        try:
            return self.weight_positions.index(position)
        except ValueError:
            return None

    def boundary(self, lambda_frozen: int) -> int:
        """Layer position where the stochastic tail starts for a given λ.

        λ=0 gives 0; otherwise the frozen block runs up to (not including) weight
        layer λ+1, so trailing non-weight layers stay with the preceding block.
        """
        if not 0 <= lambda_frozen <= self.n_weight_layers:
            raise ConfigError(
                f"lambda_frozen must be in [0, {self.n_weight_layers}], got: {lambda_frozen}"
            )
        if lambda_frozen == 0:
            return 0
        if lambda_frozen == self.n_weight_layers:
            return len(self.layers)
        return self.weight_positions[lambda_frozen]

    def astype(self, dtype: Any) -> Network:
        """Copy of the network with weights in another float dtype (e.g. float64)."""
        return Network(
            layers=list(self.layers),
            input_shape=self.input_shape,
            weights=[w.astype(dtype) for w in self.weights],
            biases=[b.astype(dtype) for b in self.biases],
        )

    def copy(self) -> Network:
        return self.astype(self.dtype)


def build_network(
    architecture: list[dict[str, Any]] | list[LayerSpec],
    input_shape: tuple[int, ...],
    seed: int = 0,
    dtype: Any = DEFAULT_DTYPE,
) -> Network:
    """Resolve an architecture and initialise its weights.

    Weights are He-uniform, U(-sqrt(6/fan_in), +sqrt(6/fan_in)), drawn from
    per-layer streams derived from ``seed``; biases start at zero.
    """
    specs = [s if isinstance(s, LayerSpec) else layer_from_dict(s) for s in architecture]
    layers = resolve_layers(specs, tuple(input_shape))
    init_seed = mix_seed(seed, _INIT_SALT)
    weights: list[Tensor] = []
    biases: list[Tensor] = []
    for j, spec in enumerate(s for s in layers if s.weight_bearing):
        bound = np.sqrt(6.0 / max(spec.fan_in, 1))
        size = int(np.prod(spec.weight_shape))
        u = rng_stream(init_seed, 0, j).uniform(size)
        weights.append(((2.0 * u - 1.0) * bound).astype(dtype).reshape(spec.weight_shape))
        biases.append(np.zeros(spec.bias_shape, dtype=dtype))
    net = Network(layers=layers, input_shape=tuple(input_shape), weights=weights, biases=biases)
    logger.debug(
        "Built network: %d layers, %d weight layers, %d parameters",
        len(layers), net.n_weight_layers, sum(w.size + b.size for w, b in zip(weights, biases)),
    )
    return net


def sample_masks(net: Network, plan: MaskPlan, root_seed: int, pass_index: int) -> dict[int, Tensor]:
    """Fresh masks for every masked weight layer of one pass, keyed by weight index.

    Each layer ``j`` draws from ``rng_stream(root_seed, pass_index, j)``, the
    absolute weight-layer index, so the masks of a layer do not depend on λ.
    """
    plan.check_lambda(net.n_weight_layers)
    masks: dict[int, Tensor] = {}
    if not plan.stochastic:
        return masks
    for j in range(plan.lambda_frozen, net.n_weight_layers):
        spec = net.layers[net.weight_positions[j]]
        shape = spec.bias_shape if plan.mode == DROPOUT else spec.weight_shape
        masks[j] = sample_mask(shape, plan.drop_prob, rng_stream(root_seed, pass_index, j))
    return masks


def forward_range(
    net: Network,
    x: Tensor,
    start: int,
    stop: int,
    plan: MaskPlan,
    masks: dict[int, Tensor],
    trace: list[LayerTrace] | None = None,
) -> Tensor:
    """Run layers ``[start, stop)`` on a batch ``x``.

    Weight layers with an entry in ``masks`` run stochastically per ``plan``;
    all others use their full, unscaled weights. When ``trace`` is a list, each
    layer's input (and pooling argmax) is appended for the backward pass.
    """
    for pos in range(start, stop):
        spec = net.layers[pos]
        record = LayerTrace(pos, x) if trace is not None else None
        if spec.weight_bearing:
            j = net.weight_index_at(pos)
            w, b = net.weights[j], net.biases[j]
            stride, pad = (spec.stride, spec.pad) if spec.kind == CONV2D else (1, 0)
            mask = masks.get(j)
            if mask is None:
                x = deterministic_forward(x, w, b, stride, pad)
            elif plan.mode == DROPOUT:
                x = dropout_forward(x, w, b, mask, plan.scale, stride=stride, pad=pad)
            else:
                x = dropconnect_forward(x, w, b, mask, plan.scale, stride=stride, pad=pad)
        elif spec.kind == RELU:
            x = relu(x)
        elif spec.kind == MAXPOOL2:
            x, idx = maxpool2(x)
            if record is not None:
                record.pool_index = idx
        elif spec.kind == FLATTEN:
            x = x.reshape(x.shape[0], -1)
        elif spec.kind == SOFTMAX:
            x = softmax(x)
        if record is not None:
            trace.append(record)
    return x


def as_batch(net: Network, x: Tensor) -> tuple[Tensor, bool]:
    """Promote a single example to a batch of one; reports whether it did."""
    x = np.asarray(x)
    if x.shape == net.input_shape:
        return x[None].astype(net.dtype, copy=False), True
    if x.shape[1:] != net.input_shape:
        raise DimensionError(f"input shape {x.shape} does not match network input {net.input_shape}")
    return x.astype(net.dtype, copy=False), False


def network_forward(net: Network, x: Tensor, plan: MaskPlan, root_seed: int, pass_index: int) -> Tensor:
    """One stochastic forward pass; returns softmax probabilities.

    The first λ weight layers run deterministically; every later weight layer
    samples a fresh mask from ``rng_stream(root_seed, pass_index, j)``. All
    inputs of a batch share the pass's masks.
    """
    batch, single = as_batch(net, x)
    masks = sample_masks(net, plan, root_seed, pass_index)
    probs = forward_range(net, batch, 0, len(net.layers), plan, masks)
    return probs[0] if single else probs


def predict_deterministic(net: Network, x: Tensor, batch_size: int = 1000) -> Tensor:
    """Deterministic (mask-free) probabilities for a batch, computed in chunks."""
    batch, single = as_batch(net, x)
    plan = MaskPlan(mode="deterministic")
    chunks = [
        forward_range(net, batch[i:i + batch_size], 0, len(net.layers), plan, {})
        for i in range(0, batch.shape[0], batch_size)
    ]
    probs = np.concatenate(chunks, axis=0) if chunks else np.zeros((0, net.num_classes), dtype=net.dtype)
    return check_finite(probs[0] if single else probs, "predict_deterministic")
