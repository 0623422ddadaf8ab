"""Entry point: parse the command line, run one subcommand, map errors to exit codes."""

from __future__ import annotations

import argparse
import logging
import sys
from typing import NoReturn, Sequence

from .config import ConfigError, load_settings
from .errors import DataError, DimensionError, FormatError, NumericError
from .harness.commands import COMMANDS
from .harness.experiment import RESULT_FORMATS, ExperimentConfig, load_experiment
from .nn.masks import MODES, SCALE_MODES
from .utils.logger import setup_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2

ERROR_PREFIX = "selectdc"


class _ArgumentParser(argparse.ArgumentParser):
    """Reports bad flags as ConfigError instead of exiting with argparse's status 2."""

    def error(self, message: str) -> NoReturn:
        raise ConfigError(f"{self.prog}: {message}")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="Experiment JSON (see docs/experiment_config.schema.json).")
    p.add_argument("--ledger", help="SQLite results ledger (default: RESULTS_DB).")
    p.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"])
    p.add_argument("--limit", type=int, help="Use only the first N examples of each dataset.")


def _add_inference(p: argparse.ArgumentParser, sweep: bool = False) -> None:
    p.add_argument("--model", help="SDCM model file.")
    p.add_argument("--data", help="Dataset source: idx:IMAGES,LABELS | csv:PATH | synthetic:KIND,...")
    p.add_argument("--passes", type=int, help="Number of MC passes K (default 25).")
    if sweep:
        p.add_argument("--lambdas", help="Comma-separated λ values.")
        p.add_argument("--drop-probs", dest="drop_probs", help="Comma-separated drop probabilities.")
    else:
        p.add_argument("--lambda", dest="lambda_frozen", type=int, help="Frozen weight layers λ.")
        p.add_argument("--drop-prob", dest="drop_prob", type=float, help="Drop probability p.")
    p.add_argument("--seed", type=int, help="Root seed for mask streams.")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--scale-mode", dest="scale_mode", choices=SCALE_MODES)
    p.add_argument("--workers", type=int, help="Thread pool size (default: SWEEP_WORKERS).")
    p.add_argument("--infer-batch-size", dest="infer_batch_size", type=int,
                   help="Examples per inference chunk (default 500); echoed into records.")
    p.add_argument("--out", help="Output path.")
    p.add_argument("--format", choices=RESULT_FORMATS)


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="selectdc",
        description="Select-DC: Monte Carlo DropConnect on the trailing layers with a cached frozen prefix.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="Train a model and write an SDCM file.")
    _add_common(train)
    train.add_argument("--data", help="Training dataset source.")
    train.add_argument("--val-data", dest="val_data", help="Validation dataset source.")
    train.add_argument("--out", help="Model output path.")
    train.add_argument("--history", help="Write per-epoch metrics to this CSV.")
    train.add_argument("--epochs", type=int)
    train.add_argument("--batch-size", dest="batch_size", type=int)
    train.add_argument("--lr-peak", dest="lr_peak", type=float)
    train.add_argument("--drop-prob", dest="drop_prob", type=float)
    train.add_argument("--lambda-train", dest="lambda_train", type=int)
    train.add_argument("--mode", choices=MODES)
    train.add_argument("--scale-mode", dest="scale_mode", choices=SCALE_MODES)
    train.add_argument("--seed", type=int)

    predict = sub.add_parser("predict", help="Select-DC prediction and metrics.")
    _add_common(predict)
    _add_inference(predict)

    sweep = sub.add_parser("sweep", help="Metrics over the λ × p grid.")
    _add_common(sweep)
    _add_inference(sweep, sweep=True)
    sweep.add_argument("--table", help="Metric-vs-GFLOPs CSV (default: next to --out).")
    sweep.add_argument("--plot", help="Optional PNG chart.")
    sweep.add_argument("--train-lambdas", dest="train_lambdas", action="store_true",
                       help="Train one model per (λ, p) at that λ instead of reusing --model.")
    sweep.add_argument("--train-data", dest="train_data", help="Training dataset for --train-lambdas.")
    sweep.add_argument("--epochs", type=int)
    sweep.add_argument("--batch-size", dest="batch_size", type=int)
    sweep.add_argument("--lr-peak", dest="lr_peak", type=float)

    ood = sub.add_parser("ood", help="Entropy-based OOD detection.")
    _add_common(ood)
    _add_inference(ood, sweep=True)
    ood.add_argument("--ood-data", dest="ood_data", help="Out-of-distribution dataset source.")
    ood.add_argument("--curve", help="ROC threshold curve CSV (default: next to --out).")

    flops = sub.add_parser("flops", help="Analytic inference cost over λ.")
    _add_common(flops)
    flops.add_argument("--model", help="SDCM model file.")
    flops.add_argument("--passes", type=int)
    flops.add_argument("--lambda", dest="lambda_frozen", type=int)
    flops.add_argument("--lambdas")
    flops.add_argument("--drop-prob", dest="drop_prob", type=float, help="Echoed into records.")
    flops.add_argument("--seed", type=int, help="Echoed into records.")
    flops.add_argument("--uniform-cost", dest="uniform_cost", type=int,
                       help="Cost M per weight layer; non-weight layers are free.")
    flops.add_argument("--out")
    flops.add_argument("--format", choices=RESULT_FORMATS)
    flops.add_argument("--table")
    flops.add_argument("--plot")

    rotate = sub.add_parser("rotate", help="Predictive entropy under rotation.")
    _add_common(rotate)
    _add_inference(rotate)
    rotate.add_argument("--angles", help="Comma-separated angles in degrees (must include 0).")
    rotate.add_argument("--plot")
    return parser


def _error_kind(exc: BaseException) -> tuple[str, int]:
    if isinstance(exc, ConfigError):
        return "config", EXIT_CONFIG
    if isinstance(exc, NumericError):
        return "numeric", EXIT_CONFIG
    if isinstance(exc, FormatError):
        return "format", EXIT_DATA
    if isinstance(exc, DataError):
        return "data", EXIT_DATA
    if isinstance(exc, DimensionError):
        return "dimension", EXIT_DATA
    return "io", EXIT_DATA


def run(argv: Sequence[str] | None = None) -> int:
    """Run one subcommand; returns the process exit code.

    0 on success, 1 on configuration or numeric errors, 2 on data, format or
    I/O errors. Errors go to stderr as ``selectdc: <kind>-error: <message>``.
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    repo = None
    run_id = None
    try:
        args = build_parser().parse_args(argv)
        settings = load_settings()
        setup_logging(args.log_level or settings.log_level, settings.log_file)
        cfg = load_experiment(args.config) if args.config else ExperimentConfig()

        ledger = args.ledger or settings.results_db
        if ledger:
            from .database.repository import Repository
            repo = Repository(ledger)
            repo.init_database()
            run_id = repo.start_run(args.command, argv)

        result = COMMANDS[args.command](args, cfg, settings)
        if repo is not None and result.records:
            repo.save_records(run_id, result.records)
        if repo is not None:
            repo.finish_run(run_id, "success")
        for path in result.artifacts:
            logger.info("Artifact: %s", path)
        return EXIT_OK
    except (ConfigError, NumericError, DataError, DimensionError, OSError) as exc:
        kind, code = _error_kind(exc)
        print(f"{ERROR_PREFIX}: {kind}-error: {exc}", file=sys.stderr)
        if repo is not None and run_id is not None:
            repo.finish_run(run_id, "error", f"{kind}: {exc}")
        return code
    finally:
        if repo is not None:
            repo.dispose()


if __name__ == "__main__":
    sys.exit(run())
