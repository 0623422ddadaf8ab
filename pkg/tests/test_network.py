"""Tests for src/nn/layers.py and src/nn/network.py."""

import numpy as np
import pytest

from src.config import ConfigError
from src.errors import DimensionError
from src.nn.layers import LayerSpec, default_architecture, layer_from_dict, resolve_layers
from src.nn.masks import MaskPlan
from src.nn.network import (
    Network,
    build_network,
    forward_range,
    network_forward,
    predict_deterministic,
    sample_masks,
)
from src.tensor.rng import rng_stream

from .helpers import random_batch, random_network


def test_default_architecture_resolves_on_28x28():
    net = build_network(default_architecture(10), (1, 28, 28))
    assert net.n_weight_layers == 4
    assert net.num_classes == 10
    assert net.layers[6].out_shape == (32 * 5 * 5,)


def test_boundary_positions(small_cnn_arch):
    net = build_network(small_cnn_arch, (1, 8, 8))
    assert net.weight_positions == [0, 2, 6, 8]
    assert net.boundary(0) == 0
    assert net.boundary(1) == 2
    assert net.boundary(3) == 8
    assert net.boundary(4) == len(net.layers)
    with pytest.raises(ConfigError):
        net.boundary(5)


def test_resolve_rejects_incompatible_shapes():
    with pytest.raises(DimensionError):
        resolve_layers([LayerSpec("dense", out_features=3)], (1, 4, 4))
    with pytest.raises(DimensionError):
        resolve_layers([LayerSpec("dense", in_features=5, out_features=3)], (4,))
    with pytest.raises(DimensionError):
        resolve_layers([LayerSpec("conv2d", out_channels=2, kernel_size=3, stride=2)], (1, 6, 6))


def test_layer_from_dict_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        layer_from_dict({"kind": "dense", "out_features": 3, "units": 3})
    with pytest.raises(ConfigError):
        layer_from_dict({"kind": "lstm"})
    with pytest.raises(ConfigError):
        layer_from_dict({"kind": "dense", "out_features": -1})


def test_network_must_end_with_softmax():
    with pytest.raises(ConfigError):
        build_network([{"kind": "dense", "out_features": 2}], (3,))


def test_network_rejects_wrong_weight_shapes(blobs_arch):
    net = build_network(blobs_arch, (1, 8, 8))
    with pytest.raises(DimensionError):
        Network(net.layers, net.input_shape, [net.weights[0], net.weights[0]], net.biases)


def test_init_is_deterministic_and_bounded(blobs_arch):
    a = build_network(blobs_arch, (1, 8, 8), seed=3)
    b = build_network(blobs_arch, (1, 8, 8), seed=3)
    c = build_network(blobs_arch, (1, 8, 8), seed=4)
    assert all(np.array_equal(x, y) for x, y in zip(a.weights, b.weights))
    assert not np.array_equal(a.weights[0], c.weights[0])
    assert np.abs(a.weights[0]).max() <= np.sqrt(6.0 / 64)
    assert all(np.all(bias == 0) for bias in a.biases)


def test_forward_rows_are_distributions():
    stream = rng_stream(11, 0, 0)
    for case in range(20):
        net = random_network(stream)
        x = random_batch(stream, net, 4)
        probs = network_forward(net, x, MaskPlan(drop_prob=0.3), root_seed=case, pass_index=0)
        assert probs.shape == (4, net.num_classes)
        assert np.all(probs >= 0)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-5)


def test_forward_single_example_and_shape_check(blobs_arch):
    net = build_network(blobs_arch, (1, 8, 8))
    x = np.zeros((1, 8, 8), dtype=np.float32)
    assert network_forward(net, x, MaskPlan(), 0, 0).shape == (2,)
    with pytest.raises(DimensionError):
        network_forward(net, np.zeros((2, 1, 7, 7)), MaskPlan(), 0, 0)


def test_p_zero_and_full_lambda_match_deterministic(small_cnn_arch):
    net = build_network(small_cnn_arch, (1, 8, 8), seed=5)
    x = random_batch(rng_stream(5, 0, 0), net, 6)
    expected = predict_deterministic(net, x)
    np.testing.assert_array_equal(network_forward(net, x, MaskPlan(drop_prob=0.0), 1, 0), expected)
    np.testing.assert_array_equal(network_forward(net, x, MaskPlan(drop_prob=0.5, lambda_frozen=4), 1, 0), expected)


def test_same_seed_and_pass_is_reproducible(small_cnn_arch):
    net = build_network(small_cnn_arch, (1, 8, 8), seed=5)
    x = random_batch(rng_stream(6, 0, 0), net, 3)
    plan = MaskPlan(drop_prob=0.3)
    first = network_forward(net, x, plan, 42, 7)
    np.testing.assert_array_equal(first, network_forward(net, x, plan, 42, 7))
    assert not np.array_equal(first, network_forward(net, x, plan, 42, 8))


def test_masks_keyed_by_absolute_weight_index(small_cnn_arch):
    net = build_network(small_cnn_arch, (1, 8, 8))
    full = sample_masks(net, MaskPlan(drop_prob=0.4), 9, 2)
    tail = sample_masks(net, MaskPlan(drop_prob=0.4, lambda_frozen=2), 9, 2)
    assert sorted(full) == [0, 1, 2, 3]
    assert sorted(tail) == [2, 3]
    for j in tail:
        np.testing.assert_array_equal(full[j], tail[j])


@pytest.mark.parametrize("lambda_frozen", [0, 2])
def test_root_seeds_give_distinct_outputs(small_cnn_arch, lambda_frozen):
    net = build_network(small_cnn_arch, (1, 8, 8), seed=3)
    x = random_batch(rng_stream(8, 0, 0), net, 4)
    plan = MaskPlan(drop_prob=0.3, lambda_frozen=lambda_frozen)
    outputs = {network_forward(net, x, plan, seed, 0).tobytes() for seed in range(100)}
    assert len(outputs) >= 95


@pytest.mark.parametrize("lambda_frozen", [1, 2, 3, 4])
def test_all_ones_leading_masks_equal_frozen_prefix(small_cnn_arch, lambda_frozen):
    # Unscaled, so an all-ones mask leaves a layer's weights untouched
    net = build_network(small_cnn_arch, (1, 8, 8), seed=4)
    x = random_batch(rng_stream(9, 0, 0), net, 5)
    unfrozen = MaskPlan(drop_prob=0.3, scale_mode="none")
    frozen = MaskPlan(drop_prob=0.3, lambda_frozen=lambda_frozen, scale_mode="none")
    masks = sample_masks(net, unfrozen, 21, 3)
    for j in range(lambda_frozen):
        masks[j] = np.ones_like(net.weights[j])

    boundary = net.boundary(lambda_frozen)
    np.testing.assert_array_equal(
        forward_range(net, x, 0, boundary, unfrozen, masks),
        forward_range(net, x, 0, boundary, frozen, {}),
    )
    np.testing.assert_array_equal(
        forward_range(net, x, 0, len(net.layers), unfrozen, masks),
        network_forward(net, x, frozen, 21, 3),
    )


def test_dropout_masks_are_per_unit(small_cnn_arch):
    net = build_network(small_cnn_arch, (1, 8, 8))
    masks = sample_masks(net, MaskPlan(drop_prob=0.5, mode="dropout"), 1, 0)
    assert masks[0].shape == (3,)
    assert masks[3].shape == (3,)
    assert sample_masks(net, MaskPlan(mode="deterministic"), 1, 0) == {}


def test_lambda_beyond_weight_layers_is_rejected(blobs_arch):
    net = build_network(blobs_arch, (1, 8, 8))
    with pytest.raises(ConfigError):
        network_forward(net, np.zeros((1, 1, 8, 8)), MaskPlan(lambda_frozen=3), 0, 0)


def test_astype_keeps_values():
    net = random_network(rng_stream(1, 0, 0))
    wide = net.astype(np.float64)
    assert wide.dtype == np.float64
    np.testing.assert_array_equal(wide.weights[0].astype(np.float32), net.weights[0])
