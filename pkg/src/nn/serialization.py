"""SDCM binary model format.

Layout (all integers little-endian u32 unless noted)::

    b"SDCM" | version=1 | layer count | input rank | input dims...
    per layer: kind tag (u8) + hyperparameters
        dense:  in_features, out_features
        conv2d: in_channels, out_channels, kernel_h, kernel_w, stride, pad
        others: none
    then, per weight layer in order: weights, biases as little-endian float32, row-major
"""

from __future__ import annotations

import logging
import struct
from pathlib import Path

import numpy as np

from ..config import ConfigError
from ..errors import DimensionError, FormatError
from .layers import CONV2D, DENSE, FLATTEN, MAXPOOL2, RELU, SOFTMAX, LayerSpec, resolve_layers
from .network import Network

logger = logging.getLogger(__name__)

MAGIC = b"SDCM"
VERSION = 1

_KIND_TAGS = {DENSE: 1, CONV2D: 2, RELU: 3, MAXPOOL2: 4, FLATTEN: 5, SOFTMAX: 6}
_TAG_KINDS = {tag: kind for kind, tag in _KIND_TAGS.items()}
_N_PARAMS = {DENSE: 2, CONV2D: 6}


def encode_model(net: Network) -> bytes:
    """Serialize a network to SDCM bytes (weights are written as float32)."""
    parts = [MAGIC, struct.pack("<II", VERSION, len(net.layers))]
    parts.append(struct.pack(f"<I{len(net.input_shape)}I", len(net.input_shape), *net.input_shape))
    for spec in net.layers:
        parts.append(struct.pack("<B", _KIND_TAGS[spec.kind]))
        if spec.kind == DENSE:
            parts.append(struct.pack("<2I", spec.in_features, spec.out_features))
        elif spec.kind == CONV2D:
            parts.append(struct.pack(
                "<6I", spec.in_channels, spec.out_channels, spec.kernel_size, spec.kernel_size,
                spec.stride, spec.pad,
            ))
    for w, b in zip(net.weights, net.biases):
        parts.append(np.ascontiguousarray(w, dtype="<f4").tobytes())
        parts.append(np.ascontiguousarray(b, dtype="<f4").tobytes())
    return b"".join(parts)


class _Reader:
    def __init__(self, data: bytes) -> None:
        self.data = data
        self.offset = 0

    def take(self, n: int, what: str) -> bytes:
        if self.offset + n > len(self.data):
            raise FormatError(f"truncated model file while reading {what}", self.offset)
        chunk = self.data[self.offset:self.offset + n]
        self.offset += n
        return chunk

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]

    def floats(self, shape: tuple[int, ...], what: str) -> np.ndarray:
        count = int(np.prod(shape))
        raw = self.take(4 * count, what)
        return np.frombuffer(raw, dtype="<f4").astype(np.float32).reshape(shape)


def decode_model(data: bytes) -> Network:
    """Parse SDCM bytes into a Network.

    Raises:
        FormatError: On bad magic, unknown version/tag, truncation or trailing bytes.
    """
    reader = _Reader(data)
    if reader.take(4, "magic") != MAGIC:
        raise FormatError("not an SDCM model file (bad magic)", 0)
    version = reader.u32("version")
    if version != VERSION:
        raise FormatError(f"unsupported SDCM version {version}", 4)
    n_layers = reader.u32("layer count")
    rank = reader.u32("input rank")
    input_shape = tuple(reader.u32("input dimension") for _ in range(rank))

    specs: list[LayerSpec] = []
    for _ in range(n_layers):
        tag_offset = reader.offset
        tag = reader.take(1, "layer tag")[0]
        kind = _TAG_KINDS.get(tag)
        if kind is None:
            raise FormatError(f"unknown layer tag {tag}", tag_offset)
        params = [reader.u32(f"{kind} hyperparameter") for _ in range(_N_PARAMS.get(kind, 0))]
        if kind == DENSE:
            specs.append(LayerSpec(kind, in_features=params[0], out_features=params[1]))
        elif kind == CONV2D:
            if params[2] != params[3]:
                raise FormatError("non-square conv kernels are not supported", tag_offset)
            specs.append(LayerSpec(
                kind, in_channels=params[0], out_channels=params[1], kernel_size=params[2],
                stride=params[4], pad=params[5],
            ))
        else:
            specs.append(LayerSpec(kind))

    try:
        layers = resolve_layers(specs, input_shape)
    except (ConfigError, DimensionError) as exc:
        raise FormatError(f"inconsistent layer records: {exc}", 12) from exc
    weights, biases = [], []
    for spec in layers:
        if spec.weight_bearing:
            weights.append(reader.floats(spec.weight_shape, f"{spec.kind} weights"))
            biases.append(reader.floats(spec.bias_shape, f"{spec.kind} biases"))
    if reader.offset != len(data):
        raise FormatError(f"{len(data) - reader.offset} trailing bytes after model payload", reader.offset)
    return Network(layers=layers, input_shape=input_shape, weights=weights, biases=biases)


def save_model(net: Network, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_model(net))
    logger.info("Model saved to %s (%d weight layers)", path, net.n_weight_layers)
    return path


def load_model(path: str | Path) -> Network:
    net = decode_model(Path(path).read_bytes())
    logger.info("Model loaded from %s (%d weight layers)", path, net.n_weight_layers)
    return net
