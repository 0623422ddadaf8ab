"""Analytic FLOPs cost model for Select-DC inference.

The frozen prefix is paid once per batch element, the stochastic tail K times:
``grand_total = frozen_total + K * stochastic_total``. With a uniform cost M per
weight layer and free non-weight layers this is ``(N - L)M + L*M*K`` for
``L = N - λ`` stochastic layers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..config import ConfigError
from ..nn.layers import CONV2D, DENSE, LayerSpec
from ..nn.network import Network


@dataclass(frozen=True)
class FlopsReport:
    per_layer_flops: list[int]
    n_weight_layers: int
    lambda_frozen: int
    passes: int
    frozen_total: int
    stochastic_total: int
    grand_total: int

    @property
    def gflops(self) -> float:
        return self.grand_total / 1e9

    @property
    def saving(self) -> float:
        """Fraction of the all-stochastic cost (K·Σ costs) avoided by freezing."""
        naive = self.passes * (self.frozen_total + self.stochastic_total)
        return 1.0 - self.grand_total / naive if naive else 0.0


def layer_cost(spec: LayerSpec) -> int:
    """FLOPs of one layer for one input; a multiply-accumulate counts as 2."""
    if not spec.resolved:
        raise ConfigError(f"cannot cost an unresolved {spec.kind} layer")
    if spec.kind == DENSE:
        return 2 * spec.in_features * spec.out_features
    if spec.kind == CONV2D:
        _, out_h, out_w = spec.out_shape
        k = spec.kernel_size
        return 2 * k * k * spec.in_channels * spec.out_channels * out_h * out_w
    return int(np.prod(spec.out_shape))


def _check_passes(passes: int) -> None:
    if isinstance(passes, bool) or not isinstance(passes, int) or passes < 1:
        raise ConfigError(f"passes must be an integer >= 1, got: {passes!r}")


def total_flops(net: Network, lambda_frozen: int, passes: int, uniform_cost: int | None = None) -> FlopsReport:
    """Cost of K-pass Select-DC inference at a given λ.

    With ``uniform_cost`` every weight layer costs that many units and
    non-weight layers are free.
    """
    _check_passes(passes)
    boundary = net.boundary(lambda_frozen)
    if uniform_cost is None:
        per_layer = [layer_cost(spec) for spec in net.layers]
    else:
        if uniform_cost < 0:
            raise ConfigError(f"uniform_cost must be >= 0, got: {uniform_cost}")
        per_layer = [uniform_cost if spec.weight_bearing else 0 for spec in net.layers]
    frozen = sum(per_layer[:boundary])
    stochastic = sum(per_layer[boundary:])
    return FlopsReport(
        per_layer_flops=per_layer,
        n_weight_layers=net.n_weight_layers,
        lambda_frozen=lambda_frozen,
        passes=passes,
        frozen_total=frozen,
        stochastic_total=stochastic,
        grand_total=frozen + passes * stochastic,
    )


def uniform_layer_cost(n_layers: int, lambda_frozen: int, passes: int, layer_cost_units: int = 1) -> int:
    """Closed form ``(N - L)M + L*M*K`` with ``L = N - λ`` stochastic layers."""
    if not 0 <= lambda_frozen <= n_layers:
        raise ConfigError(f"lambda_frozen must be in [0, {n_layers}], got: {lambda_frozen}")
    _check_passes(passes)
    stochastic = n_layers - lambda_frozen
    return (n_layers - stochastic) * layer_cost_units + stochastic * layer_cost_units * passes


def flops_table(
    net: Network, lambdas: list[int], passes: int, uniform_cost: int | None = None,
) -> list[FlopsReport]:
    return [total_flops(net, lam, passes, uniform_cost) for lam in lambdas]
