"""Tests for the SDCM model file format (src/nn/serialization.py)."""

import struct

import numpy as np
import pytest

from src.errors import FormatError
from src.nn.layers import default_architecture
from src.nn.network import build_network
from src.nn.serialization import MAGIC, decode_model, encode_model, load_model, save_model
from src.tensor.rng import rng_stream

from .helpers import random_network


def _assert_same(a, b):
    assert [(s.kind, s.in_shape, s.out_shape) for s in a.layers] == [(s.kind, s.in_shape, s.out_shape) for s in b.layers]
    assert a.input_shape == b.input_shape
    for x, y in zip(a.weights + a.biases, b.weights + b.biases):
        np.testing.assert_array_equal(x, y)


def test_default_net_round_trip(tmp_path):
    net = build_network(default_architecture(10), (1, 28, 28), seed=1)
    path = save_model(net, tmp_path / "nested" / "m.sdcm")
    assert path.read_bytes()[:4] == MAGIC
    _assert_same(net, load_model(path))


def test_random_nets_round_trip():
    stream = rng_stream(77, 0, 0)
    for _ in range(10):
        net = random_network(stream)
        _assert_same(net, decode_model(encode_model(net)))


def test_encoding_is_deterministic(blobs_arch):
    net = build_network(blobs_arch, (1, 8, 8), seed=2)
    assert encode_model(net) == encode_model(net.copy())


def test_bad_magic_reports_offset_zero(blobs_arch):
    data = encode_model(build_network(blobs_arch, (1, 8, 8)))
    with pytest.raises(FormatError) as exc:
        decode_model(b"XXXX" + data[4:])
    assert exc.value.offset == 0


def test_unsupported_version(blobs_arch):
    data = encode_model(build_network(blobs_arch, (1, 8, 8)))
    with pytest.raises(FormatError) as exc:
        decode_model(data[:4] + struct.pack("<I", 2) + data[8:])
    assert exc.value.offset == 4


def test_truncated_payload(blobs_arch):
    data = encode_model(build_network(blobs_arch, (1, 8, 8)))
    with pytest.raises(FormatError, match="truncated"):
        decode_model(data[:-3])


def test_trailing_bytes(blobs_arch):
    data = encode_model(build_network(blobs_arch, (1, 8, 8)))
    with pytest.raises(FormatError, match="trailing"):
        decode_model(data + b"\x00")


def test_unknown_layer_tag(blobs_arch):
    data = bytearray(encode_model(build_network(blobs_arch, (1, 8, 8))))
    # magic, version, layer count, rank=3 and three dims put the first tag at 28
    data[28] = 99
    with pytest.raises(FormatError) as exc:
        decode_model(bytes(data))
    assert exc.value.offset == 28
