"""Monte Carlo predictive inference: naive MCDC and Select-DC with a frozen cache.

Select-DC runs the frozen prefix (the first λ weight layers) once per batch
and reuses its activations for all K stochastic tail passes. Masks are keyed
by absolute weight-layer index, so the result is bit-identical to running K
full stochastic passes.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..config import ConfigError
from ..nn.masks import DETERMINISTIC, MaskPlan
from ..nn.network import Network, as_batch, forward_range, sample_masks
from ..tensor.core import Tensor
from .entropy import entropy_rows

logger = logging.getLogger(__name__)

_DETERMINISTIC_PLAN = MaskPlan(mode=DETERMINISTIC)


@dataclass(frozen=True)
class NetworkSegment:
    """A contiguous slice ``[start, stop)`` of a network's layers."""

    net: Network
    start: int
    stop: int

    @property
    def layers(self) -> list:
        return self.net.layers[self.start:self.stop]

    @property
    def empty(self) -> bool:
        return self.start == self.stop

    def forward(self, x: Tensor, plan: MaskPlan = _DETERMINISTIC_PLAN, masks: dict | None = None) -> Tensor:
        return forward_range(self.net, x, self.start, self.stop, plan, masks or {})


@dataclass
class FrozenCache:
    """Boundary activations of the frozen prefix for one input batch."""

    boundary_layer_index: int
    lambda_frozen: int
    activations: Tensor


@dataclass
class PredictiveSummary:
    mean_probs: np.ndarray
    entropy: np.ndarray
    passes: int
    lambda_frozen: int
    drop_prob: float
    seed: int
    mode: str
    scale_mode: str
    per_pass_probs: np.ndarray | None = field(default=None, repr=False)

    @property
    def mean_entropy(self) -> float:
        return float(np.mean(self.entropy)) if self.entropy.size else 0.0


def split_network(net: Network, lambda_frozen: int) -> tuple[NetworkSegment, NetworkSegment]:
    """Split into the frozen prefix and the stochastic tail.

    The prefix holds the first λ weight layers and every non-weight layer up to
    (not including) weight layer λ+1; λ=0 gives an empty prefix.
    """
    boundary = net.boundary(lambda_frozen)
    return NetworkSegment(net, 0, boundary), NetworkSegment(net, boundary, len(net.layers))


def build_frozen_cache(net: Network, x_batch: Tensor, lambda_frozen: int) -> FrozenCache:
    prefix, _ = split_network(net, lambda_frozen)
    return FrozenCache(
        boundary_layer_index=prefix.stop,
        lambda_frozen=lambda_frozen,
        activations=prefix.forward(x_batch),
    )


def _check_passes(passes: int) -> None:
    if isinstance(passes, bool) or not isinstance(passes, int) or passes < 1:
        raise ConfigError(f"number of MC passes must be an integer >= 1, got: {passes!r}")


def _run_passes(run_pass: Callable[[int], Tensor], passes: int, max_workers: int) -> list[Tensor]:
    if max_workers > 1 and passes > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            return list(pool.map(run_pass, range(passes)))
    return [run_pass(k) for k in range(passes)]


def _summarize(
    pass_probs: list[Tensor],
    plan: MaskPlan,
    seed: int,
    keep_passes: bool,
) -> PredictiveSummary:
    # Ascending pass order keeps the reduction bit-reproducible
    total = np.zeros(pass_probs[0].shape, dtype=np.float64)
    for probs in pass_probs:
        total += probs
    mean = total / len(pass_probs)
    return PredictiveSummary(
        mean_probs=mean,
        entropy=entropy_rows(mean),
        passes=len(pass_probs),
        lambda_frozen=plan.lambda_frozen,
        drop_prob=plan.drop_prob,
        seed=seed,
        mode=plan.mode,
        scale_mode=plan.scale_mode,
        per_pass_probs=np.stack(pass_probs) if keep_passes else None,
    )


def mc_predict_naive(
    net: Network,
    x_batch: Tensor,
    passes: int,
    plan: MaskPlan,
    seed: int,
    keep_passes: bool = False,
    max_workers: int = 1,
) -> PredictiveSummary:
    """Average ``passes`` full stochastic forward passes (pass_index 0..K−1)."""
    _check_passes(passes)
    plan.check_lambda(net.n_weight_layers)
    batch, _ = as_batch(net, x_batch)

    def run_pass(k: int) -> Tensor:
        masks = sample_masks(net, plan, seed, k)
        return forward_range(net, batch, 0, len(net.layers), plan, masks)

    return _summarize(_run_passes(run_pass, passes, max_workers), plan, seed, keep_passes)


def select_dc_predict(
    net: Network,
    x_batch: Tensor,
    passes: int,
    lambda_frozen: int,
    drop_prob: float,
    mode: str = "dropconnect",
    scale_mode: str = "inverted",
    seed: int = 0,
    keep_passes: bool = False,
    max_workers: int = 1,
) -> PredictiveSummary:
    """MC prediction with the frozen prefix computed once and cached.

    Output is bit-identical to :func:`mc_predict_naive` with the same network,
    inputs, pass count, plan and seed.
    """
    _check_passes(passes)
    plan = MaskPlan(drop_prob=drop_prob, lambda_frozen=lambda_frozen, mode=mode, scale_mode=scale_mode)
    plan.check_lambda(net.n_weight_layers)
    batch, _ = as_batch(net, x_batch)
    cache = build_frozen_cache(net, batch, lambda_frozen)
    _, tail = split_network(net, lambda_frozen)
    logger.debug(
        "Select-DC: batch=%d, lambda=%d, boundary=%d, tail layers=%d, K=%d",
        batch.shape[0], lambda_frozen, cache.boundary_layer_index, len(tail.layers), passes,
    )

    def run_pass(k: int) -> Tensor:
        masks = sample_masks(net, plan, seed, k)
        return tail.forward(cache.activations, plan, masks)

    return _summarize(_run_passes(run_pass, passes, max_workers), plan, seed, keep_passes)


def predict_dataset(
    net: Network,
    images: Tensor,
    passes: int,
    plan: MaskPlan,
    seed: int,
    batch_size: int = 500,
    keep_passes: bool = False,
    max_workers: int = 1,
) -> PredictiveSummary:
    """Select-DC over a whole dataset in memory-sized chunks.

    Every chunk draws the same masks for a given pass (streams are keyed by
    seed, pass and layer only). The matrix products are blocked by chunk
    size, so probabilities can differ in the last float32 bits between
    batch sizes; the result is bit-reproducible for a fixed ``batch_size``,
    which is why result records echo it.
    """
    if batch_size < 1:
        raise ConfigError(f"batch_size must be >= 1, got: {batch_size}")
    parts = [
        select_dc_predict(
            net, images[i:i + batch_size], passes, plan.lambda_frozen, plan.drop_prob,
            plan.mode, plan.scale_mode, seed, keep_passes, max_workers,
        )
        for i in range(0, images.shape[0], batch_size)
    ]
    if not parts:
        raise ConfigError("cannot predict on an empty dataset")
    return PredictiveSummary(
        mean_probs=np.concatenate([p.mean_probs for p in parts]),
        entropy=np.concatenate([p.entropy for p in parts]),
        passes=passes,
        lambda_frozen=plan.lambda_frozen,
        drop_prob=plan.drop_prob,
        seed=seed,
        mode=plan.mode,
        scale_mode=plan.scale_mode,
        per_pass_probs=np.concatenate([p.per_pass_probs for p in parts], axis=1) if keep_passes else None,
    )
