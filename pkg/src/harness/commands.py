"""Subcommand implementations behind ``python -m src.main``.

Each command takes the parsed CLI namespace, the experiment config and the
environment settings, and returns the records and artifact paths it produced.
Values resolve CLI flag → experiment JSON → environment → built-in default.
"""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable

from ..analysis.flops import total_flops
from ..analysis.metrics import accuracy, nll
from ..analysis.ood import ood_evaluate
from ..config import ConfigError, Settings
from ..errors import DataError
from ..mc.engine import predict_dataset
from ..mc.rotation import rotation_entropy_sweep
from ..nn.layers import default_architecture
from ..nn.masks import MaskPlan
from ..nn.network import Network, build_network, predict_deterministic
from ..nn.serialization import load_model, save_model
from ..tensor.rng import mix_seed
from ..training.schedule import TrainConfig
from ..training.trainer import FitResult, fit
from ..utils import charts
from .datasets import Dataset, parse_source
from .experiment import ExperimentConfig, ResultRecord
from .results import emit_results, write_table

logger = logging.getLogger(__name__)

SWEEP_TABLE_COLUMNS = ["lambda", "drop_prob", "gflops", "accuracy", "nll", "mean_entropy"]
FLOPS_TABLE_COLUMNS = ["lambda", "passes", "frozen_total", "stochastic_total", "grand_total", "gflops", "saving"]
ROC_TABLE_COLUMNS = ["lambda", "drop_prob", "threshold", "tpr", "fpr"]
ROTATION_TABLE_COLUMNS = ["angle", "mean_entropy", "std_entropy", "accuracy"]


@dataclass
class CommandResult:
    records: list[ResultRecord] = field(default_factory=list)
    artifacts: list[Path] = field(default_factory=list)


@dataclass(frozen=True)
class InferenceSettings:
    """Inference options after CLI/config/env resolution."""

    passes: int
    lambdas: list[int]
    drop_probs: list[float]
    seed: int
    mode: str
    scale_mode: str
    batch_size: int
    max_workers: int


def _pick(cli_value: Any, config_value: Any) -> Any:
    return config_value if cli_value is None else cli_value


def parse_int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of integers, got: {text!r}")


def parse_float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of numbers, got: {text!r}")


def resolve_inference(args: Any, cfg: ExperimentConfig, settings: Settings) -> InferenceSettings:
    inf = cfg.inference
    lambdas = getattr(args, "lambdas", None)
    lam = getattr(args, "lambda_frozen", None)
    drop_probs = getattr(args, "drop_probs", None)
    p = getattr(args, "drop_prob", None)
    resolved = InferenceSettings(
        passes=_pick(getattr(args, "passes", None), inf.passes),
        lambdas=parse_int_list(lambdas) if lambdas else ([lam] if lam is not None else list(inf.lambdas)),
        drop_probs=parse_float_list(drop_probs) if drop_probs else ([p] if p is not None else list(inf.drop_probs)),
        seed=_pick(getattr(args, "seed", None), inf.seed),
        mode=_pick(getattr(args, "mode", None), inf.mode),
        scale_mode=_pick(getattr(args, "scale_mode", None), inf.scale_mode),
        batch_size=_pick(getattr(args, "infer_batch_size", None), inf.batch_size),
        max_workers=_pick(getattr(args, "workers", None), _pick(inf.max_workers, settings.sweep_workers)),
    )
    if resolved.passes < 1:
        raise ConfigError(f"--passes must be >= 1, got: {resolved.passes}")
    if resolved.seed < 0:
        raise ConfigError(f"--seed must be >= 0, got: {resolved.seed}")
    if resolved.batch_size < 1:
        raise ConfigError(f"--infer-batch-size must be >= 1, got: {resolved.batch_size}")
    if resolved.max_workers < 1:
        raise ConfigError(f"--workers must be >= 1, got: {resolved.max_workers}")
    if not resolved.lambdas or not resolved.drop_probs:
        raise ConfigError("need at least one lambda and one drop probability")
    return resolved


def _source_label(source: str | dict[str, Any]) -> str:
    return source if isinstance(source, str) else json.dumps(source, sort_keys=True)


def _load_data(cli_source: str | None, config_source: Any, what: str, limit: int | None = None) -> tuple[Dataset, str]:
    source = _pick(cli_source, config_source)
    if source is None:
        raise ConfigError(f"no {what} dataset given (use the CLI flag or the experiment config)")
    dataset = parse_source(source).subset(limit)
    if len(dataset) == 0:
        raise DataError(f"{what} dataset is empty")
    return dataset, _source_label(source)


def _check_compatible(net: Network, dataset: Dataset) -> None:
    if dataset.image_shape != net.input_shape:
        raise DataError(f"dataset images have shape {dataset.image_shape}, model expects {net.input_shape}")
    if dataset.labels.size and int(dataset.labels.max()) >= net.num_classes:
        raise DataError(f"dataset has label {int(dataset.labels.max())} but the model has {net.num_classes} classes")


def _load_net(args: Any, cfg: ExperimentConfig) -> tuple[Network, str]:
    path = _pick(getattr(args, "model", None), cfg.output.model)
    return load_model(path), str(path)


def _sibling(path: str | Path, suffix: str) -> Path:
    path = Path(path)
    return path.with_name(f"{path.stem}{suffix}")


def _plot(png_fn: Callable, rows: list[dict[str, Any]], args: Any, cfg: ExperimentConfig) -> list[Path]:
    target = _pick(getattr(args, "plot", None), cfg.output.plot)
    if not target:
        return []
    saved = charts.save_chart(png_fn(rows), target)
    return [saved] if saved else []


# ---------------------------------------------------------------------- #
# Evaluation shared by predict and sweep                                   #
# ---------------------------------------------------------------------- #

def evaluate(
    net: Network,
    dataset: Dataset,
    command: str,
    lambda_frozen: int,
    drop_prob: float,
    inf: InferenceSettings,
    seed: int,
    baseline_accuracy: float,
    model: str | None = None,
    dataset_label: str | None = None,
    pass_workers: int = 1,
) -> ResultRecord:
    """Run Select-DC over ``dataset`` and turn the summary into a record."""
    plan = MaskPlan(drop_prob=drop_prob, lambda_frozen=lambda_frozen, mode=inf.mode, scale_mode=inf.scale_mode)
    started = time.perf_counter()
    summary = predict_dataset(
        net, dataset.images, inf.passes, plan, seed, batch_size=inf.batch_size, max_workers=pass_workers,
    )
    elapsed_ms = (time.perf_counter() - started) * 1000.0
    acc = accuracy(summary.mean_probs, dataset.labels)
    report = total_flops(net, lambda_frozen, inf.passes)
    return ResultRecord(
        command=command,
        lambda_frozen=lambda_frozen,
        drop_prob=drop_prob,
        passes=inf.passes,
        seed=seed,
        mode=inf.mode,
        scale_mode=inf.scale_mode,
        batch_size=inf.batch_size,
        accuracy=acc,
        nll=nll(summary.mean_probs, dataset.labels),
        mean_entropy=summary.mean_entropy,
        baseline_accuracy=baseline_accuracy,
        relative_accuracy=acc - baseline_accuracy,
        flops_total=report.grand_total,
        gflops=report.gflops,
        wall_time_ms=elapsed_ms,
        model=model,
        dataset=dataset_label,
    )


def _emit(records: list[ResultRecord], args: Any, cfg: ExperimentConfig) -> Path:
    out = _pick(getattr(args, "out", None), cfg.output.results)
    fmt = _pick(getattr(args, "format", None), cfg.output.format)
    return emit_results(records, fmt, out)


# ---------------------------------------------------------------------- #
# Commands                                                                 #
# ---------------------------------------------------------------------- #

def _train_config(args: Any, cfg: ExperimentConfig) -> TrainConfig:
    overrides = {
        "epochs": getattr(args, "epochs", None),
        "batch_size": getattr(args, "batch_size", None),
        "lr_peak": getattr(args, "lr_peak", None),
        "drop_prob": getattr(args, "drop_prob", None),
        "lambda_frozen_train": getattr(args, "lambda_train", None),
        "mode": getattr(args, "mode", None),
        "scale_mode": getattr(args, "scale_mode", None),
        "seed": getattr(args, "seed", None),
    }
    return replace(cfg.train, **{k: v for k, v in overrides.items() if v is not None})


def _train_model(train_set: Dataset, val_set: Dataset | None, cfg: ExperimentConfig, train_cfg: TrainConfig) -> FitResult:
    num_classes = int(train_set.labels.max()) + 1
    architecture = cfg.architecture or default_architecture(max(num_classes, 2))
    net = build_network(architecture, train_set.image_shape, seed=train_cfg.seed)
    return fit(net, train_set, train_cfg, val_set=val_set)


def cmd_train(args: Any, cfg: ExperimentConfig, settings: Settings) -> CommandResult:
    """Train a model and write it as an SDCM file (plus an optional history CSV)."""
    train_cfg = _train_config(args, cfg)
    train_set, _ = _load_data(args.data, cfg.dataset, "training", args.limit)
    val_set = None
    if _pick(args.val_data, cfg.test_dataset) is not None:
        val_set, _ = _load_data(args.val_data, cfg.test_dataset, "validation", args.limit)

    result = _train_model(train_set, val_set, cfg, train_cfg)

    out = _pick(args.out, cfg.output.model)
    artifacts = [save_model(result.net, out)]
    if args.history:
        rows = [vars(m) for m in result.history]
        artifacts.append(write_table(rows, ["epoch", "train_loss", "train_accuracy", "val_accuracy", "lr", "seconds"], args.history))
    if result.history:
        last = result.history[-1]
        logger.info("Training finished: loss %.4f, val accuracy %.4f", last.train_loss, last.val_accuracy)
    return CommandResult(artifacts=artifacts)


def cmd_predict(args: Any, cfg: ExperimentConfig, settings: Settings) -> CommandResult:
    """Select-DC prediction at one (λ, p) with metrics → results file."""
    inf = resolve_inference(args, cfg, settings)
    net, model_label = _load_net(args, cfg)
    dataset, data_label = _load_data(args.data, _pick(cfg.test_dataset, cfg.dataset), "test", args.limit)
    _check_compatible(net, dataset)
    baseline = accuracy(predict_deterministic(net, dataset.images), dataset.labels)
    record = evaluate(
        net, dataset, "predict", inf.lambdas[0], inf.drop_probs[0], inf, inf.seed, baseline,
        model=model_label, dataset_label=data_label, pass_workers=inf.max_workers,
    )
    logger.info(
        "Predict λ=%d p=%g K=%d: accuracy %.4f (baseline %.4f), NLL %.4f, entropy %.4f",
        record.lambda_frozen, record.drop_prob, record.passes, record.accuracy,
        baseline, record.nll, record.mean_entropy,
    )
    return CommandResult(records=[record], artifacts=[_emit([record], args, cfg)])


def cmd_sweep(args: Any, cfg: ExperimentConfig, settings: Settings) -> CommandResult:
    """One record per (λ, p); record ``i`` uses seed ``mix_seed(seed, i)``.

    By default the loaded model is evaluated at every λ (MCDC training,
    Select-DC inference). With ``--train-lambdas`` a model is trained per
    (λ, p) with ``lambda_frozen_train = λ`` and evaluated at that λ.
    """
    inf = resolve_inference(args, cfg, settings)
    dataset, data_label = _load_data(args.data, _pick(cfg.test_dataset, cfg.dataset), "test", args.limit)
    grid = [(lam, p) for lam in inf.lambdas for p in inf.drop_probs]

    if args.train_lambdas:
        train_set, _ = _load_data(args.train_data, cfg.dataset, "training", args.limit)
        base_cfg = _train_config(args, cfg)

        def run_entry(index: int) -> ResultRecord:
            lam, p = grid[index]
            net = _train_model(train_set, None, cfg, replace(base_cfg, lambda_frozen_train=lam, drop_prob=p)).net
            _check_compatible(net, dataset)
            baseline = accuracy(predict_deterministic(net, dataset.images), dataset.labels)
            return evaluate(net, dataset, "sweep-train", lam, p, inf, mix_seed(inf.seed, index), baseline,
                            dataset_label=data_label)
    else:
        net, model_label = _load_net(args, cfg)
        _check_compatible(net, dataset)
        baseline = accuracy(predict_deterministic(net, dataset.images), dataset.labels)

        def run_entry(index: int) -> ResultRecord:
            lam, p = grid[index]
            return evaluate(net, dataset, "sweep", lam, p, inf, mix_seed(inf.seed, index), baseline,
                            model=model_label, dataset_label=data_label)

    logger.info("Sweep: %d entries on %d worker(s)", len(grid), inf.max_workers)
    if inf.max_workers > 1:
        with ThreadPoolExecutor(max_workers=inf.max_workers) as pool:
            records = list(pool.map(run_entry, range(len(grid))))
    else:
        records = [run_entry(i) for i in range(len(grid))]

    artifacts = [_emit(records, args, cfg)]
    rows = [{col: r.to_dict()[col] for col in SWEEP_TABLE_COLUMNS} for r in records]
    table = _pick(args.table, cfg.output.table) or _sibling(_pick(args.out, cfg.output.results), ".table.csv")
    artifacts.append(write_table(rows, SWEEP_TABLE_COLUMNS, table))
    artifacts.extend(_plot(charts.generate_sweep_chart, rows, args, cfg))
    return CommandResult(records=records, artifacts=artifacts)


def cmd_ood(args: Any, cfg: ExperimentConfig, settings: Settings) -> CommandResult:
    """Entropy-based OOD evaluation per (λ, p) plus the ROC threshold curves."""
    inf = resolve_inference(args, cfg, settings)
    net, model_label = _load_net(args, cfg)
    id_set, id_label = _load_data(args.data, _pick(cfg.test_dataset, cfg.dataset), "in-distribution", args.limit)
    ood_set, ood_label = _load_data(args.ood_data, cfg.ood_dataset, "out-of-distribution", args.limit)
    _check_compatible(net, id_set)

    records: list[ResultRecord] = []
    curve_rows: list[dict[str, Any]] = []
    for lam in inf.lambdas:
        for p in inf.drop_probs:
            started = time.perf_counter()
            report = ood_evaluate(
                net, id_set.images, ood_set.images, inf.passes, lam, p, inf.seed,
                inf.mode, inf.scale_mode, batch_size=inf.batch_size, max_workers=inf.max_workers,
            )
            elapsed_ms = (time.perf_counter() - started) * 1000.0
            flops = total_flops(net, lam, inf.passes)
            records.append(ResultRecord(
                command="ood",
                lambda_frozen=lam,
                drop_prob=p,
                passes=inf.passes,
                seed=inf.seed,
                mode=inf.mode,
                scale_mode=inf.scale_mode,
                batch_size=inf.batch_size,
                mean_entropy=report.id_mean_entropy,
                flops_total=flops.grand_total,
                gflops=flops.gflops,
                wall_time_ms=elapsed_ms,
                id_mean_entropy=report.id_mean_entropy,
                ood_mean_entropy=report.ood_mean_entropy,
                auroc=report.auroc,
                model=model_label,
                dataset=f"{id_label} vs {ood_label}",
            ))
            curve_rows.extend(
                {"lambda": lam, "drop_prob": p, "threshold": pt.threshold, "tpr": pt.tpr, "fpr": pt.fpr}
                for pt in report.threshold_curve
            )

    artifacts = [_emit(records, args, cfg)]
    curve = args.curve or _sibling(_pick(args.out, cfg.output.results), ".roc.csv")
    artifacts.append(write_table(curve_rows, ROC_TABLE_COLUMNS, curve))
    return CommandResult(records=records, artifacts=artifacts)


def cmd_flops(args: Any, cfg: ExperimentConfig, settings: Settings) -> CommandResult:
    """Analytic cost table over λ (all λ of the model unless given)."""
    net, model_label = _load_net(args, cfg)
    passes = _pick(args.passes, cfg.inference.passes)
    if args.lambdas:
        lambdas = parse_int_list(args.lambdas)
    elif args.lambda_frozen is not None:
        lambdas = [args.lambda_frozen]
    else:
        lambdas = list(range(net.n_weight_layers + 1))
    drop_prob = _pick(args.drop_prob, cfg.inference.drop_probs[0])
    seed = _pick(args.seed, cfg.inference.seed)
    if seed < 0:
        raise ConfigError(f"--seed must be >= 0, got: {seed}")

    records: list[ResultRecord] = []
    rows: list[dict[str, Any]] = []
    for lam in lambdas:
        report = total_flops(net, lam, passes, uniform_cost=args.uniform_cost)
        records.append(ResultRecord(
            command="flops",
            lambda_frozen=lam,
            drop_prob=drop_prob,
            passes=passes,
            seed=seed,
            mode=cfg.inference.mode,
            scale_mode=cfg.inference.scale_mode,
            flops_total=report.grand_total,
            gflops=report.gflops,
            model=model_label,
        ))
        rows.append({
            "lambda": lam,
            "passes": passes,
            "frozen_total": report.frozen_total,
            "stochastic_total": report.stochastic_total,
            "grand_total": report.grand_total,
            "gflops": report.gflops,
            "saving": report.saving,
        })
        logger.info("FLOPs λ=%d K=%d: %d (%.1f%% saved)", lam, passes, report.grand_total, 100.0 * report.saving)

    artifacts = [_emit(records, args, cfg)]
    if args.table:
        artifacts.append(write_table(rows, FLOPS_TABLE_COLUMNS, args.table))
    artifacts.extend(_plot(charts.generate_flops_chart, rows, args, cfg))
    return CommandResult(records=records, artifacts=artifacts)


def cmd_rotate(args: Any, cfg: ExperimentConfig, settings: Settings) -> CommandResult:
    """Mean/std predictive entropy per rotation angle → CSV table."""
    inf = resolve_inference(args, cfg, settings)
    net, _ = _load_net(args, cfg)
    dataset, _ = _load_data(args.data, _pick(cfg.test_dataset, cfg.dataset), "test", args.limit)
    _check_compatible(net, dataset)
    angles = parse_float_list(args.angles) if args.angles else list(cfg.inference.angles)
    points = rotation_entropy_sweep(
        net, dataset.images, angles, inf.passes, inf.lambdas[0], inf.drop_probs[0], inf.seed,
        inf.mode, inf.scale_mode, labels=dataset.labels, batch_size=inf.batch_size,
        max_workers=inf.max_workers,
    )
    rows = [vars(point) for point in points]
    out = _pick(args.out, cfg.output.table) or "rotation.csv"
    artifacts = [write_table(rows, ROTATION_TABLE_COLUMNS, out)]
    artifacts.extend(_plot(charts.generate_rotation_chart, rows, args, cfg))
    return CommandResult(artifacts=artifacts)


COMMANDS: dict[str, Callable[[Any, ExperimentConfig, Settings], CommandResult]] = {
    "train": cmd_train,
    "predict": cmd_predict,
    "sweep": cmd_sweep,
    "ood": cmd_ood,
    "flops": cmd_flops,
    "rotate": cmd_rotate,
}
