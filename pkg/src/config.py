"""Runtime settings loaded from environment variables."""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()


class ConfigError(Exception):
    """Raised when required configuration is missing or invalid."""


@dataclass
class Settings:
    log_level: str
    log_file: str | None
    results_db: str | None
    data_dir: str
    sweep_workers: int


def load_settings() -> Settings:
    """Load and validate runtime settings from environment variables."""
    log_level = os.getenv("LOG_LEVEL", "INFO").strip().upper()
    if log_level not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
        raise ConfigError(f"LOG_LEVEL must be a logging level name, got: {log_level!r}")

    # LOG_FILE: optional console logging only if absent
    log_file = os.getenv("LOG_FILE") or None

    # RESULTS_DB: optional SQLite ledger of emitted result records
    results_db = os.getenv("RESULTS_DB") or None
    if results_db:
        Path(results_db).parent.mkdir(parents=True, exist_ok=True)

    workers_raw = os.getenv("SWEEP_WORKERS", "1")
    try:
        sweep_workers = int(workers_raw)
    except ValueError:
        raise ConfigError(f"SWEEP_WORKERS must be an integer, got: {workers_raw!r}")
    if sweep_workers < 1:
        raise ConfigError(f"SWEEP_WORKERS must be >= 1, got: {sweep_workers}")

    return Settings(
        log_level=log_level,
        log_file=log_file,
        results_db=results_db,
        data_dir=os.getenv("DATA_DIR", "./data"),
        sweep_workers=sweep_workers,
    )
