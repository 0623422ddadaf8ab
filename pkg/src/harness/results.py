"""Result emission: JSON arrays, RFC-4180 CSV and plot-ready tables."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from pathlib import Path
from typing import Any, Sequence

from ..config import ConfigError
from ..errors import DataError, NumericError
from .experiment import RESULT_FORMATS, ResultRecord

logger = logging.getLogger(__name__)

SIGNIFICANT_DIGITS = 9


def _round(value: Any) -> Any:
    if isinstance(value, float):
        if not math.isfinite(value):
            raise NumericError(f"cannot emit non-finite value {value!r}")
        return float(f"{value:.{SIGNIFICANT_DIGITS}g}")
    return value


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        # ROC thresholds start at +inf
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{_round(value):.{SIGNIFICANT_DIGITS}g}"
    return str(value)


def render_json(rows: Sequence[dict[str, Any]]) -> str:
    body = [{k: _round(v) for k, v in row.items()} for row in rows]
    return json.dumps(body, indent=2, allow_nan=False) + "\n"


def render_csv(rows: Sequence[dict[str, Any]], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(col)) for col in columns])
    return buf.getvalue()


def _write(path: str | Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def emit_results(records: Sequence[ResultRecord], format: str, path: str | Path) -> Path:
    """Write records as a JSON array or CSV; identical records give identical bytes.

    Raises:
        DataError: If there are no records.
        OSError: If the path cannot be written.
    """
    if not records:
        raise DataError("no result records to emit")
    if format not in RESULT_FORMATS:
        raise ConfigError(f"result format must be one of {', '.join(RESULT_FORMATS)}, got: {format!r}")
    rows = [r.to_dict() for r in records]
    text = render_json(rows) if format == "json" else render_csv(rows, ResultRecord.columns())
    out = _write(path, text)
    logger.info("Wrote %d result record(s) to %s", len(records), out)
    return out


def write_table(rows: Sequence[dict[str, Any]], columns: Sequence[str], path: str | Path) -> Path:
    """Write a plot-ready CSV table (x column first, metrics after)."""
    out = _write(path, render_csv(rows, columns))
    logger.info("Wrote %d-row table to %s", len(rows), out)
    return out
