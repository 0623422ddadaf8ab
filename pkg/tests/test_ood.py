"""Tests for entropy-based OOD detection (src/analysis/ood.py)."""

import numpy as np
import pytest

from src.analysis.ood import ood_evaluate
from src.errors import DataError
from src.harness.datasets import synth_dataset
from src.nn.network import build_network


@pytest.fixture
def cnn(small_cnn_arch):
    return build_network(small_cnn_arch, (1, 8, 8), seed=6)


def test_same_set_is_indistinguishable(cnn):
    images = synth_dataset({"kind": "stripes", "n": 60, "classes": 3}, seed=1).images
    report = ood_evaluate(cnn, images, images, 5, 1, 0.1, seed=2)
    assert abs(report.auroc - 0.5) <= 0.02
    assert report.id_mean_entropy == report.ood_mean_entropy


def test_report_fields(cnn):
    id_images = synth_dataset({"kind": "blobs", "n": 30, "classes": 3}, seed=1).images
    ood_images = synth_dataset({"kind": "noise", "n": 20}, seed=1).images
    report = ood_evaluate(cnn, id_images, ood_images, 4, 2, 0.3, seed=9)
    assert (report.lambda_frozen, report.drop_prob, report.passes, report.seed) == (2, 0.3, 4, 9)
    assert report.id_entropy.shape == (30,) and report.ood_entropy.shape == (20,)
    assert 0.0 <= report.auroc <= 1.0
    assert report.id_mean_entropy == pytest.approx(float(np.mean(report.id_entropy)))
    assert report.threshold_curve[0].threshold == float("inf")


def test_shape_mismatch(cnn):
    id_images = np.zeros((3, 1, 8, 8), dtype=np.float32)
    with pytest.raises(DataError):
        ood_evaluate(cnn, id_images, np.zeros((3, 1, 6, 6), dtype=np.float32), 2, 0, 0.1, seed=0)
    with pytest.raises(DataError):
        ood_evaluate(cnn, np.zeros((3, 1, 6, 6)), np.zeros((3, 1, 6, 6)), 2, 0, 0.1, seed=0)


def test_between_class_bumps_are_flagged_by_a_trained_model(trained_blobs_mlp):
    # Trained on left/right bumps; bumps at the top or bottom sit between the classes
    id_images = synth_dataset({"kind": "blobs", "n": 200, "classes": 2}, seed=11).images
    shifted = synth_dataset({"kind": "blobs", "n": 400, "classes": 4}, seed=12)
    ood_images = shifted.images[shifted.labels % 2 == 1]
    for lambda_frozen in (0, 1):
        report = ood_evaluate(trained_blobs_mlp, id_images, ood_images, 10, lambda_frozen, 0.1, seed=3)
        assert report.ood_mean_entropy > report.id_mean_entropy
        assert report.auroc >= 0.7
