"""SGD with Nesterov momentum."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import DimensionError
from ..tensor.core import Tensor


@dataclass
class OptimizerState:
    """One velocity tensor per parameter tensor, zero-initialised."""

    velocities: list[Tensor]

    @classmethod
    def zeros_like(cls, params: Sequence[Tensor]) -> OptimizerState:
        return cls([np.zeros_like(p) for p in params])


def sgd_nesterov_step(
    weights: list[Tensor],
    grads: Sequence[Tensor],
    state: OptimizerState,
    lr: float,
    momentum: float,
) -> tuple[list[Tensor], OptimizerState]:
    """Update parameters in place and return them with the updated state.

    v ← momentum·v − lr·g;  w ← w + momentum·v − lr·g
    """
    if len(weights) != len(grads) or len(weights) != len(state.velocities):
        raise DimensionError("weights, gradients and velocities differ in count")
    for w, g, v in zip(weights, grads, state.velocities):
        if w.shape != g.shape or w.shape != v.shape:
            raise DimensionError(f"parameter {w.shape}, gradient {g.shape}, velocity {v.shape} differ")
        step = g * w.dtype.type(lr)
        v *= w.dtype.type(momentum)
        v -= step
        w += v * w.dtype.type(momentum) - step
    return weights, state
