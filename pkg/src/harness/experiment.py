"""Experiment configuration (strict JSON) and the emitted result record."""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

from ..config import ConfigError
from ..nn.layers import layer_from_dict
from ..nn.masks import DROPCONNECT, INVERTED, MaskPlan
from ..training.schedule import TrainConfig

logger = logging.getLogger(__name__)

RESULT_FORMATS = ("json", "csv")


def _reject_unknown(raw: dict[str, Any], allowed: set[str], path: str) -> None:
    unknown = sorted(set(raw) - allowed)
    if unknown:
        dotted = ", ".join(f"{path}.{key}" if path else key for key in unknown)
        raise ConfigError(f"unknown config keys: {dotted}")


def _expect(value: Any, kind: type | tuple[type, ...], path: str) -> Any:
    if isinstance(value, bool) and kind is not bool:
        raise ConfigError(f"{path} must not be a boolean")
    if not isinstance(value, kind):
        names = kind.__name__ if isinstance(kind, type) else " or ".join(k.__name__ for k in kind)
        raise ConfigError(f"{path} must be {names}, got: {value!r}")
    return value


def _int_list(raw: Any, path: str) -> list[int]:
    _expect(raw, list, path)
    return [_expect(v, int, f"{path}[{i}]") for i, v in enumerate(raw)]


def _float_list(raw: Any, path: str) -> list[float]:
    _expect(raw, list, path)
    return [float(_expect(v, (int, float), f"{path}[{i}]")) for i, v in enumerate(raw)]


@dataclass
class InferenceConfig:
    passes: int = 25
    lambdas: list[int] = field(default_factory=lambda: [0])
    drop_probs: list[float] = field(default_factory=lambda: [0.1])
    seed: int = 0
    mode: str = DROPCONNECT
    scale_mode: str = INVERTED
    batch_size: int = 500
    max_workers: int | None = None
    angles: list[float] = field(default_factory=lambda: [0.0, 30.0, 60.0, 90.0, 120.0, 150.0, 180.0])

    def __post_init__(self) -> None:
        if self.passes < 1:
            raise ConfigError(f"inference.passes must be >= 1, got: {self.passes}")
        if not self.lambdas or not self.drop_probs:
            raise ConfigError("inference.lambdas and inference.drop_probs must be non-empty")
        if self.seed < 0:
            raise ConfigError(f"inference.seed must be >= 0, got: {self.seed}")
        if self.batch_size < 1 or (self.max_workers is not None and self.max_workers < 1):
            raise ConfigError("inference.batch_size and inference.max_workers must be >= 1")
        for lam in self.lambdas:
            for p in self.drop_probs:
                MaskPlan(drop_prob=p, lambda_frozen=lam, mode=self.mode, scale_mode=self.scale_mode)

    @classmethod
    def from_dict(cls, raw: dict[str, Any], path: str = "inference") -> InferenceConfig:
        _expect(raw, dict, path)
        _reject_unknown(raw, {f.name for f in fields(cls)}, path)
        values: dict[str, Any] = {}
        for key in ("passes", "seed", "batch_size", "max_workers"):
            if key in raw:
                values[key] = _expect(raw[key], int, f"{path}.{key}")
        for key in ("mode", "scale_mode"):
            if key in raw:
                values[key] = _expect(raw[key], str, f"{path}.{key}")
        if "lambdas" in raw:
            values["lambdas"] = _int_list(raw["lambdas"], f"{path}.lambdas")
        if "drop_probs" in raw:
            values["drop_probs"] = _float_list(raw["drop_probs"], f"{path}.drop_probs")
        if "angles" in raw:
            values["angles"] = _float_list(raw["angles"], f"{path}.angles")
        return cls(**values)


@dataclass
class OutputConfig:
    model: str = "model.sdcm"
    results: str = "results.json"
    format: str = "json"
    table: str | None = None
    plot: str | None = None

    def __post_init__(self) -> None:
        if self.format not in RESULT_FORMATS:
            raise ConfigError(f"output.format must be one of {', '.join(RESULT_FORMATS)}, got: {self.format!r}")

    @classmethod
    def from_dict(cls, raw: dict[str, Any], path: str = "output") -> OutputConfig:
        _expect(raw, dict, path)
        _reject_unknown(raw, {f.name for f in fields(cls)}, path)
        return cls(**{k: _expect(v, str, f"{path}.{k}") for k, v in raw.items()})


@dataclass
class ExperimentConfig:
    """Declarative description of one experiment.

    Dataset sources use the forms accepted by
    :func:`src.harness.datasets.parse_source`; ``architecture`` defaults to the
    desk-scale CNN when omitted.
    """

    dataset: str | dict[str, Any] | None = None
    test_dataset: str | dict[str, Any] | None = None
    ood_dataset: str | dict[str, Any] | None = None
    architecture: list[dict[str, Any]] | None = None
    train: TrainConfig = field(default_factory=TrainConfig)
    inference: InferenceConfig = field(default_factory=InferenceConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> ExperimentConfig:
        """Validate a parsed JSON document; unknown keys raise ConfigError."""
        _expect(raw, dict, "config")
        _reject_unknown(raw, {f.name for f in fields(cls)}, "")
        values: dict[str, Any] = {}
        for key in ("dataset", "test_dataset", "ood_dataset"):
            if key in raw:
                values[key] = _expect(raw[key], (str, dict), key)
        if "architecture" in raw:
            layers = _expect(raw["architecture"], list, "architecture")
            for i, layer in enumerate(layers):
                _expect(layer, dict, f"architecture[{i}]")
                try:
                    layer_from_dict(layer)
                except ConfigError as exc:
                    raise ConfigError(f"architecture[{i}]: {exc}") from exc
            values["architecture"] = layers
        if "train" in raw:
            _expect(raw["train"], dict, "train")
            values["train"] = TrainConfig.from_dict(raw["train"])
        if "inference" in raw:
            values["inference"] = InferenceConfig.from_dict(raw["inference"])
        if "output" in raw:
            values["output"] = OutputConfig.from_dict(raw["output"])
        return cls(**values)


def load_experiment(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"experiment config not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}")
    cfg = ExperimentConfig.from_dict(raw)
    logger.debug("Loaded experiment config from %s", path)
    return cfg


@dataclass
class ResultRecord:
    """One emitted row: the configuration echo followed by its metrics.

    Field order is the column order of every JSON and CSV artifact.
    """

    command: str
    lambda_frozen: int
    drop_prob: float
    passes: int
    seed: int
    mode: str
    scale_mode: str
    batch_size: int | None = None
    accuracy: float | None = None
    nll: float | None = None
    mean_entropy: float | None = None
    baseline_accuracy: float | None = None
    relative_accuracy: float | None = None
    flops_total: int | None = None
    gflops: float | None = None
    wall_time_ms: float | None = None
    id_mean_entropy: float | None = None
    ood_mean_entropy: float | None = None
    auroc: float | None = None
    model: str | None = None
    dataset: str | None = None

    # Keys in artifacts; "lambda" reads better than the attribute name
    _RENAMES = {"lambda_frozen": "lambda"}

    def to_dict(self) -> dict[str, Any]:
        return {self._RENAMES.get(k, k): v for k, v in asdict(self).items()}

    @classmethod
    def columns(cls) -> list[str]:
        return [cls._RENAMES.get(f.name, f.name) for f in fields(cls)]

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> ResultRecord:
        inverse = {v: k for k, v in cls._RENAMES.items()}
        return cls(**{inverse.get(k, k): v for k, v in raw.items()})
