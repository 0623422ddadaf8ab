"""Random small networks and batches for property tests (deterministic via RngStream)."""

from __future__ import annotations

from typing import Any

import numpy as np

from src.nn.network import Network, build_network
from src.tensor.rng import RngStream


def _pick(stream: RngStream, low: int, high: int) -> int:
    """Integer in [low, high] inclusive."""
    return int(stream.integers(low, high + 1, 1)[0])


def random_architecture(stream: RngStream, num_classes: int = 3) -> tuple[list[dict[str, Any]], tuple[int, ...]]:
    """One of three small shapes: an MLP, conv+pool+dense, or conv+conv+dense+dense."""
    kind = _pick(stream, 0, 2)
    if kind == 0:
        d = _pick(stream, 3, 6)
        arch = [
            {"kind": "dense", "out_features": _pick(stream, 3, 6)},
            {"kind": "relu"},
            {"kind": "dense", "out_features": num_classes},
            {"kind": "softmax"},
        ]
        return arch, (d,)
    cin = _pick(stream, 1, 2)
    size = _pick(stream, 5, 6)
    if kind == 1:
        arch = [
            {"kind": "conv2d", "out_channels": _pick(stream, 2, 3), "kernel_size": _pick(stream, 2, 3),
             "pad": _pick(stream, 0, 1)},
            {"kind": "relu"},
            {"kind": "maxpool2"},
            {"kind": "flatten"},
            {"kind": "dense", "out_features": num_classes},
            {"kind": "softmax"},
        ]
        return arch, (cin, size, size)
    arch = [
        {"kind": "conv2d", "out_channels": 2, "kernel_size": 3},
        {"kind": "relu"},
        {"kind": "conv2d", "out_channels": 2, "kernel_size": 2},
        {"kind": "relu"},
        {"kind": "flatten"},
        {"kind": "dense", "out_features": _pick(stream, 3, 4)},
        {"kind": "relu"},
        {"kind": "dense", "out_features": num_classes},
        {"kind": "softmax"},
    ]
    return arch, (cin, size, size)


def random_network(stream: RngStream, num_classes: int = 3, dtype: Any = np.float32) -> Network:
    arch, input_shape = random_architecture(stream, num_classes)
    net = build_network(arch, input_shape, seed=int(stream.integers(0, 1 << 30, 1)[0]), dtype=dtype)
    # Non-zero biases so bias paths are exercised
    for b in net.biases:
        b[...] = (stream.uniform(b.size).reshape(b.shape) - 0.5).astype(dtype)
    return net


def random_batch(stream: RngStream, net: Network, n: int) -> np.ndarray:
    size = n * int(np.prod(net.input_shape))
    return stream.uniform(size).reshape((n, *net.input_shape)).astype(net.dtype)
