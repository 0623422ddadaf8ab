"""Dataset ingestion: MNIST-format IDX files, pixel CSVs and synthetic sets."""

from __future__ import annotations

import csv
import gzip
import logging
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from ..config import ConfigError
from ..errors import FormatError
from ..tensor.core import DEFAULT_DTYPE
from ..tensor.rng import mix_seed, rng_stream

logger = logging.getLogger(__name__)

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801

SYNTH_KINDS = ("blobs", "stripes", "noise")
_SYNTH_SALT = 0x5E7
_NOISE_LEVEL = 0.1


@dataclass
class Dataset:
    """Images as N×C×H×W floats in [0, 1] plus integer labels."""

    images: np.ndarray
    labels: np.ndarray
    name: str = ""

    def __len__(self) -> int:
        return int(self.images.shape[0])

    @property
    def image_shape(self) -> tuple[int, ...]:
        return tuple(self.images.shape[1:])

    def subset(self, limit: int | None) -> Dataset:
        if limit is not None and limit < 1:
            raise ConfigError(f"--limit must be >= 1, got: {limit}")
        if limit is None or limit >= len(self):
            return self
        return Dataset(self.images[:limit], self.labels[:limit], self.name)


def _read_bytes(path: str | Path) -> bytes:
    path = Path(path)
    raw = path.read_bytes()
    # Downloaded MNIST-format files are usually gzipped
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def _header(data: bytes, count: int, path: str | Path) -> tuple[int, ...]:
    if len(data) < 4 * count:
        raise FormatError(f"{path}: truncated IDX header", len(data))
    return struct.unpack(f">{count}I", data[:4 * count])


def load_idx(images_path: str | Path, labels_path: str | Path) -> Dataset:
    """Parse an IDX image/label file pair; pixels are scaled to [0, 1].

    Raises:
        FormatError: On a bad magic number, truncation or an image/label count mismatch.
    """
    images_raw = _read_bytes(images_path)
    labels_raw = _read_bytes(labels_path)

    (magic,) = _header(images_raw, 1, images_path)
    if magic != IDX_IMAGES_MAGIC:
        raise FormatError(f"{images_path}: bad IDX image magic 0x{magic:08x}", 0)
    _, n_images, rows, cols = _header(images_raw, 4, images_path)
    (magic,) = _header(labels_raw, 1, labels_path)
    if magic != IDX_LABELS_MAGIC:
        raise FormatError(f"{labels_path}: bad IDX label magic 0x{magic:08x}", 0)
    _, n_labels = _header(labels_raw, 2, labels_path)
    if n_images != n_labels:
        raise FormatError(f"{labels_path}: {n_labels} labels for {n_images} images", 4)

    expected = 16 + n_images * rows * cols
    if len(images_raw) < expected:
        raise FormatError(f"{images_path}: truncated pixel data, expected {expected} bytes", len(images_raw))
    if len(labels_raw) < 8 + n_labels:
        raise FormatError(f"{labels_path}: truncated label data, expected {8 + n_labels} bytes", len(labels_raw))

    pixels = np.frombuffer(images_raw, dtype=np.uint8, count=n_images * rows * cols, offset=16)
    images = (pixels.astype(DEFAULT_DTYPE) / np.float32(255.0)).reshape(n_images, 1, rows, cols)
    labels = np.frombuffer(labels_raw, dtype=np.uint8, count=n_labels, offset=8).astype(np.int64)
    logger.info("Loaded %d %dx%d images from %s", n_images, rows, cols, images_path)
    return Dataset(images=images, labels=labels, name=Path(images_path).name)


def load_csv(path: str | Path) -> Dataset:
    """Read a ``label,p0,p1,...`` CSV of square single-channel images.

    Pixel values are taken as given and must lie in [0, 1].
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "label" or header[1:] != [f"p{i}" for i in range(len(header) - 1)]:
            raise FormatError(f"{path}: header must be label,p0,p1,...", 0)
        n_pixels = len(header) - 1
        side = math.isqrt(n_pixels)
        if side * side != n_pixels or side == 0:
            raise FormatError(f"{path}: {n_pixels} pixel columns do not form a square image")
        labels: list[int] = []
        rows: list[list[float]] = []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != n_pixels + 1:
                raise FormatError(f"{path}: line {line_no} has {len(row)} fields, expected {n_pixels + 1}")
            try:
                labels.append(int(row[0]))
                rows.append([float(v) for v in row[1:]])
            except ValueError as exc:
                raise FormatError(f"{path}: line {line_no}: {exc}") from exc
    images = np.asarray(rows, dtype=DEFAULT_DTYPE).reshape(len(rows), 1, side, side)
    if images.size and (images.min() < 0.0 or images.max() > 1.0):
        raise FormatError(f"{path}: pixel values must lie in [0, 1]")
    logger.info("Loaded %d %dx%d images from %s", len(rows), side, side, path)
    return Dataset(images=images, labels=np.asarray(labels, dtype=np.int64), name=path.name)


def _blobs(n: int, classes: int, size: int, stream) -> np.ndarray:
    labels = np.arange(n) % classes
    theta = 2.0 * np.pi * labels / classes
    radius = size / 4.0
    jitter = stream.integers(-1, 2, 2 * n).reshape(n, 2)
    cy = (size - 1) / 2.0 + radius * np.sin(theta) + jitter[:, 0]
    cx = (size - 1) / 2.0 + radius * np.cos(theta) + jitter[:, 1]
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    sigma = max(size / 8.0, 0.75)
    dist2 = (yy[None] - cy[:, None, None]) ** 2 + (xx[None] - cx[:, None, None]) ** 2
    return np.exp(-dist2 / (2.0 * sigma * sigma))


def _stripes(n: int, classes: int, size: int, stream) -> np.ndarray:
    labels = np.arange(n) % classes
    phi = np.pi * labels / classes
    offset = stream.integers(-1, 2, n).astype(np.float64)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    dy = yy[None] - (size - 1) / 2.0
    dx = xx[None] - (size - 1) / 2.0
    dist = -dy * np.cos(phi)[:, None, None] + dx * np.sin(phi)[:, None, None] - offset[:, None, None]
    return (np.abs(dist) < 1.0).astype(np.float64)


def _int_option(spec: dict[str, Any], key: str, default: int) -> int:
    value = spec.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ConfigError(f"synthetic option {key} must be an integer, got: {value!r}")
    return int(value)


def synth_dataset(spec: dict[str, Any], seed: int) -> Dataset:
    """Deterministic synthetic images.

    ``blobs``: a Gaussian bump at a class-specific position on a circle.
    ``stripes``: a bar through the center at a class-specific orientation.
    ``noise``: uniform pixels, all labelled 0 (for OOD use).
    Labels of blobs/stripes cycle ``i % classes`` so classes are balanced.
    """
    unknown = set(spec) - {"kind", "n", "classes", "image_size", "seed"}
    if unknown:
        raise ConfigError(f"unknown synthetic dataset keys: {', '.join(sorted(unknown))}")
    kind = spec.get("kind", "blobs")
    n = _int_option(spec, "n", 1000)
    classes = _int_option(spec, "classes", 2)
    size = _int_option(spec, "image_size", 8)
    seed = _int_option(spec, "seed", seed)
    if seed < 0:
        raise ConfigError(f"synthetic seed must be >= 0, got: {seed}")
    if kind not in SYNTH_KINDS:
        raise ConfigError(f"synthetic kind must be one of {', '.join(SYNTH_KINDS)}, got: {kind!r}")
    if classes < 1 or n < classes:
        raise ConfigError(f"synthetic dataset needs n >= classes >= 1, got n={n}, classes={classes}")
    if size < 2:
        raise ConfigError(f"image_size must be >= 2, got: {size}")

    stream = rng_stream(mix_seed(seed, _SYNTH_SALT, SYNTH_KINDS.index(kind)), 0, 0)
    if kind == "noise":
        images = stream.uniform(n * size * size).reshape(n, size, size)
        labels = np.zeros(n, dtype=np.int64)
    else:
        base = _blobs(n, classes, size, stream) if kind == "blobs" else _stripes(n, classes, size, stream)
        noise = _NOISE_LEVEL * stream.uniform(n * size * size).reshape(n, size, size)
        images = np.clip(base + noise, 0.0, 1.0)
        labels = (np.arange(n) % classes).astype(np.int64)
    return Dataset(
        images=images.astype(DEFAULT_DTYPE)[:, None, :, :],
        labels=labels,
        name=f"synthetic-{kind}",
    )


def parse_source(source: str | dict[str, Any], seed: int = 0) -> Dataset:
    """Load a dataset from a source descriptor.

    Accepted forms: ``idx:IMAGES,LABELS``, ``csv:PATH``,
    ``synthetic:KIND[,n=N][,classes=C][,size=S][,seed=S]`` or the equivalent JSON object
    ``{"idx": {"images", "labels"}}``, ``{"csv": PATH}``, ``{"synthetic": {...}}``.
    """
    if isinstance(source, dict):
        if len(source) != 1:
            raise ConfigError(f"dataset source must have exactly one of idx/csv/synthetic, got: {sorted(source)}")
        kind, value = next(iter(source.items()))
        if kind == "idx":
            if not isinstance(value, dict) or set(value) != {"images", "labels"}:
                raise ConfigError("idx source needs exactly 'images' and 'labels' paths")
            return load_idx(value["images"], value["labels"])
        if kind == "csv":
            return load_csv(value)
        if kind == "synthetic":
            if not isinstance(value, dict):
                raise ConfigError("synthetic source must be an object")
            return synth_dataset(value, seed)
        raise ConfigError(f"unknown dataset source {kind!r}")

    scheme, sep, rest = str(source).partition(":")
    if not sep:
        raise ConfigError(f"dataset source must look like idx:..., csv:... or synthetic:..., got: {source!r}")
    if scheme == "idx":
        parts = rest.split(",")
        if len(parts) != 2:
            raise ConfigError(f"idx source needs IMAGES,LABELS paths, got: {rest!r}")
        return load_idx(parts[0], parts[1])
    if scheme == "csv":
        return load_csv(rest)
    if scheme == "synthetic":
        kind, *options = rest.split(",")
        spec: dict[str, Any] = {"kind": kind}
        aliases = {"n": "n", "classes": "classes", "size": "image_size", "image_size": "image_size", "seed": "seed"}
        for option in options:
            key, eq, value = option.partition("=")
            if not eq or key not in aliases:
                raise ConfigError(f"bad synthetic option {option!r}; expected n=, classes=, size= or seed=")
            try:
                spec[aliases[key]] = int(value)
            except ValueError:
                raise ConfigError(f"synthetic option {key} must be an integer, got: {value!r}")
        return synth_dataset(spec, seed)
    raise ConfigError(f"unknown dataset scheme {scheme!r}")
