"""The Monte Carlo training objective: NLL of masked passes plus an L2 term."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..errors import DataError
from ..tensor.core import Tensor

PROB_FLOOR = 1e-12


def check_labels(labels: np.ndarray, num_classes: int) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.ndim != 1 or not np.issubdtype(labels.dtype, np.integer):
        raise DataError(f"labels must be a 1-D integer array, got {labels.dtype} {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise DataError(f"labels out of range [0, {num_classes}): min={labels.min()}, max={labels.max()}")
    return labels


def nll_term(probs: Tensor, labels: np.ndarray) -> float:
    """Mean −ln p(y|x) over the batch, probabilities clamped at 1e-12."""
    labels = check_labels(labels, probs.shape[1])
    picked = probs[np.arange(labels.size), labels].astype(np.float64)
    return float(-np.mean(np.log(np.maximum(picked, PROB_FLOOR))))


def l2_term(weights: Sequence[Tensor], weight_decay: float) -> float:
    """weight_decay · Σ‖W‖² over the weight kernels."""
    if weight_decay == 0.0:
        return 0.0
    return float(weight_decay * sum(np.sum(np.square(w, dtype=np.float64)) for w in weights))


def l2_gradient(weights: Sequence[Tensor], weight_decay: float) -> list[Tensor]:
    """Gradient of :func:`l2_term` for each kernel: 2 · weight_decay · W."""
    return [w * w.dtype.type(2.0 * weight_decay) for w in weights]


def loss_mc(probs: Tensor, labels: np.ndarray, weights: Sequence[Tensor], weight_decay: float) -> float:
    """Training loss of one stochastic pass.

    Args:
        probs: (N, C) softmax outputs computed with the pass's masked weights.
        labels: (N,) class indices.
        weights: Weight kernels of every weight-bearing layer (unmasked θ).
        weight_decay: L2 coefficient.
    """
    return nll_term(probs, labels) + l2_term(weights, weight_decay)
