"""Training configuration and the piecewise learning-rate schedule."""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Any

from ..config import ConfigError
from ..nn.masks import DROPCONNECT, MaskPlan


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    batch_size: int = 100
    lr_peak: float = 0.5
    lr_floor: float = 0.0005
    phase1_frac: float = 0.5
    phase2_frac: float = 0.9
    momentum: float = 0.9
    # L2 coefficient on the weight kernels (biases are not decayed)
    weight_decay: float = 5e-4
    drop_prob: float = 0.1
    lambda_frozen_train: int = 0
    mode: str = DROPCONNECT
    scale_mode: str = "inverted"
    seed: int = 0
    shift_max: int = 4
    flip_prob: float = 0.5

    def __post_init__(self) -> None:
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got: {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got: {self.batch_size}")
        if not 0.0 < self.phase1_frac < self.phase2_frac <= 1.0:
            raise ConfigError(
                f"need 0 < phase1_frac < phase2_frac <= 1, got {self.phase1_frac}, {self.phase2_frac}"
            )
        if not 0.0 < self.lr_floor <= self.lr_peak:
            raise ConfigError(f"need 0 < lr_floor <= lr_peak, got {self.lr_floor}, {self.lr_peak}")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError(f"momentum must be in [0, 1), got: {self.momentum}")
        if self.weight_decay < 0.0:
            raise ConfigError(f"weight_decay must be >= 0, got: {self.weight_decay}")
        if self.shift_max < 0:
            raise ConfigError(f"shift_max must be >= 0, got: {self.shift_max}")
        if not 0.0 <= self.flip_prob <= 1.0:
            raise ConfigError(f"flip_prob must be in [0, 1], got: {self.flip_prob}")
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got: {self.seed}")
        # Validates drop_prob, lambda_frozen_train, mode and scale_mode
        self.mask_plan()

    def mask_plan(self) -> MaskPlan:
        return MaskPlan(
            drop_prob=self.drop_prob,
            lambda_frozen=self.lambda_frozen_train,
            mode=self.mode,
            scale_mode=self.scale_mode,
        )

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> TrainConfig:
        """Build from a config mapping, rejecting unknown keys."""
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown train keys: {', '.join(sorted(unknown))}")
        defaults = cls()
        values: dict[str, Any] = {}
        for key, value in raw.items():
            expected = type(getattr(defaults, key))
            if isinstance(value, bool) or (
                not isinstance(value, expected) and not (expected is float and isinstance(value, int))
            ):
                raise ConfigError(f"train.{key} must be {expected.__name__}, got: {value!r}")
            values[key] = float(value) if expected is float else value
        return cls(**values)


def lr_at(step: int, total_steps: int, cfg: TrainConfig) -> float:
    """Learning rate for ``step`` of ``total_steps``.

    Holds ``lr_peak`` until ``phase1_frac`` of training, ramps linearly down to
    ``lr_floor`` by ``phase2_frac`` and holds the floor afterwards.
    """
    if total_steps <= 0:
        raise ConfigError(f"total_steps must be positive, got: {total_steps}")
    frac = step / total_steps
    if frac < cfg.phase1_frac:
        return cfg.lr_peak
    if frac < cfg.phase2_frac:
        t = (frac - cfg.phase1_frac) / (cfg.phase2_frac - cfg.phase1_frac)
        return cfg.lr_peak + t * (cfg.lr_floor - cfg.lr_peak)
    return cfg.lr_floor
