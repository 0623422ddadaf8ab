"""Download MNIST-format IDX datasets (digits and fashion items)."""

from __future__ import annotations

import logging
from pathlib import Path

import requests
from tenacity import retry, retry_if_exception_type, stop_after_attempt, wait_exponential

from ..config import ConfigError

logger = logging.getLogger(__name__)

_TIMEOUT = 60
_HEADERS = {"User-Agent": "selectdc/1.0 (dataset fetcher)"}

DATASETS: dict[str, str] = {
    "mnist": "https://storage.googleapis.com/cvdf-datasets/mnist/",
    "fashion": "http://fashion-mnist.s3-website.eu-central-1.amazonaws.com/",
}
FILES = (
    "train-images-idx3-ubyte.gz",
    "train-labels-idx1-ubyte.gz",
    "t10k-images-idx3-ubyte.gz",
    "t10k-labels-idx1-ubyte.gz",
)


def _on_retry(retry_state) -> None:
    logger.warning(
        "Download attempt %d failed: %s",
        retry_state.attempt_number,
        retry_state.outcome.exception(),
    )


@retry(
    retry=retry_if_exception_type(requests.RequestException),
    stop=stop_after_attempt(3),
    wait=wait_exponential(multiplier=2, min=2, max=30),
    before_sleep=_on_retry,
    reraise=True,
)
def _fetch(url: str) -> bytes:
    resp = requests.get(url, headers=_HEADERS, timeout=_TIMEOUT)
    resp.raise_for_status()
    return resp.content


def fetch_dataset(name: str, data_dir: str | Path, force: bool = False) -> list[Path]:
    """Download the four IDX files of ``name`` into ``data_dir/name``.

    Existing files are kept unless ``force`` is set.
    """
    if name not in DATASETS:
        raise ConfigError(f"unknown dataset {name!r}; expected one of {', '.join(DATASETS)}")
    target = Path(data_dir) / name
    target.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for filename in FILES:
        path = target / filename
        if path.exists() and not force:
            logger.info("Skipping %s (already present)", path)
        else:
            payload = _fetch(DATASETS[name] + filename)
            path.write_bytes(payload)
            logger.info("Downloaded %s (%d bytes)", path, len(payload))
        written.append(path)
    return written
