"""Pytest configuration: force matplotlib Agg backend before any test imports it.

On machines without a Tk/Tcl install matplotlib's default TkAgg backend fails
with a `_tkinter` ImportError. Forcing Agg here prevents that failure for any
test that exercises chart code.
"""

import pytest

try:
    import matplotlib

    matplotlib.use("Agg")
except ImportError:  # charts are optional
    pass


BLOBS_MLP = [
    {"kind": "flatten"},
    {"kind": "dense", "out_features": 16},
    {"kind": "relu"},
    {"kind": "dense", "out_features": 2},
    {"kind": "softmax"},
]


@pytest.fixture
def blobs_arch():
    """A tiny MLP for 8×8 single-channel images, two classes."""
    return [dict(layer) for layer in BLOBS_MLP]


@pytest.fixture
def small_cnn_arch():
    """4 weight layers for 1×8×8 inputs: conv / conv / dense / dense."""
    return [
        {"kind": "conv2d", "out_channels": 3, "kernel_size": 3},
        {"kind": "relu"},
        {"kind": "conv2d", "out_channels": 4, "kernel_size": 3},
        {"kind": "relu"},
        {"kind": "maxpool2"},
        {"kind": "flatten"},
        {"kind": "dense", "out_features": 8},
        {"kind": "relu"},
        {"kind": "dense", "out_features": 3},
        {"kind": "softmax"},
    ]


@pytest.fixture(scope="session")
def trained_blobs_mlp():
    """The blobs MLP fitted to two-class blobs: a bump on the right is class 0, on the left class 1."""
    from src.harness.datasets import synth_dataset
    from src.nn.network import build_network
    from src.training.schedule import TrainConfig
    from src.training.trainer import fit

    data = synth_dataset({"kind": "blobs", "n": 400, "classes": 2, "image_size": 8}, seed=3)
    cfg = TrainConfig(epochs=20, batch_size=50, lr_peak=0.05, drop_prob=0.0, shift_max=0, flip_prob=0.0, seed=1)
    net = build_network([dict(layer) for layer in BLOBS_MLP], data.image_shape, seed=1)
    return fit(net, data, cfg).net
