"""Tests for dataset ingestion (src/harness/datasets.py)."""

import gzip
import struct

import numpy as np
import pytest

from src.config import ConfigError
from src.errors import FormatError
from src.harness.datasets import load_csv, load_idx, parse_source, synth_dataset


def _write_idx(tmp_path, n_images=4, n_labels=4, rows=3, cols=2, image_magic=0x803, label_magic=0x801, gz=False):
    pixels = bytes(range(n_images * rows * cols))
    images = struct.pack(">4I", image_magic, n_images, rows, cols) + pixels
    labels = struct.pack(">2I", label_magic, n_labels) + bytes(i % 10 for i in range(n_labels))
    if gz:
        images, labels = gzip.compress(images), gzip.compress(labels)
    img_path = tmp_path / "images.idx"
    lbl_path = tmp_path / "labels.idx"
    img_path.write_bytes(images)
    lbl_path.write_bytes(labels)
    return img_path, lbl_path


class TestIdx:
    def test_valid_fixture(self, tmp_path):
        data = load_idx(*_write_idx(tmp_path))
        assert len(data) == 4
        assert data.image_shape == (1, 3, 2)
        assert data.images.dtype == np.float32
        assert data.images[0, 0, 0, 1] == pytest.approx(1 / 255)
        assert data.labels.tolist() == [0, 1, 2, 3]

    def test_gzipped_files(self, tmp_path):
        data = load_idx(*_write_idx(tmp_path, gz=True))
        assert len(data) == 4

    def test_wrong_image_magic(self, tmp_path):
        with pytest.raises(FormatError) as exc:
            load_idx(*_write_idx(tmp_path, image_magic=0x802))
        assert exc.value.offset == 0

    def test_wrong_label_magic(self, tmp_path):
        with pytest.raises(FormatError) as exc:
            load_idx(*_write_idx(tmp_path, label_magic=0x803))
        assert exc.value.offset == 0

    def test_count_mismatch(self, tmp_path):
        with pytest.raises(FormatError, match="labels for"):
            load_idx(*_write_idx(tmp_path, n_labels=3))

    def test_truncated_pixels(self, tmp_path):
        img_path, lbl_path = _write_idx(tmp_path)
        img_path.write_bytes(img_path.read_bytes()[:-1])
        with pytest.raises(FormatError, match="truncated") as exc:
            load_idx(img_path, lbl_path)
        assert exc.value.offset == 16 + 4 * 6 - 1

    def test_truncated_header(self, tmp_path):
        img_path, lbl_path = _write_idx(tmp_path)
        img_path.write_bytes(img_path.read_bytes()[:6])
        with pytest.raises(FormatError):
            load_idx(img_path, lbl_path)


class TestCsv:
    def test_valid_file(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("label,p0,p1,p2,p3\n1,0,0.5,1,0.25\n0,1,1,1,1\n")
        data = load_csv(path)
        assert data.image_shape == (1, 2, 2)
        assert data.labels.tolist() == [1, 0]
        assert data.images[0, 0, 0, 1] == 0.5

    @pytest.mark.parametrize(
        "text",
        [
            "lbl,p0\n0,0\n",
            "label,p0,p1\n0,0,0\n",
            "label,p0,p1,p2,p3\n0,0,0\n",
            "label,p0,p1,p2,p3\n0,0,0,0,2\n",
            "label,p0,p1,p2,p3\n0,a,0,0,0\n",
        ],
    )
    def test_invalid_files(self, tmp_path, text):
        path = tmp_path / "bad.csv"
        path.write_text(text)
        with pytest.raises(FormatError):
            load_csv(path)


class TestSynthetic:
    def test_deterministic(self):
        spec = {"kind": "stripes", "n": 50, "classes": 5}
        a, b = synth_dataset(spec, seed=3), synth_dataset(spec, seed=3)
        np.testing.assert_array_equal(a.images, b.images)
        np.testing.assert_array_equal(a.labels, b.labels)
        assert not np.array_equal(a.images, synth_dataset(spec, seed=4).images)

    def test_balanced_blobs(self):
        data = synth_dataset({"kind": "blobs", "n": 1000, "classes": 2}, seed=0)
        assert np.bincount(data.labels).tolist() == [500, 500]
        assert data.images.shape == (1000, 1, 8, 8)
        assert data.images.min() >= 0.0 and data.images.max() <= 1.0

    def test_noise_is_labelled_zero(self):
        data = synth_dataset({"kind": "noise", "n": 20, "image_size": 6}, seed=1)
        assert data.labels.tolist() == [0] * 20
        assert data.image_shape == (1, 6, 6)

    def test_invalid_specs(self):
        with pytest.raises(ConfigError):
            synth_dataset({"kind": "spirals"}, seed=0)
        with pytest.raises(ConfigError):
            synth_dataset({"kind": "blobs", "n": 2, "classes": 3}, seed=0)
        with pytest.raises(ConfigError):
            synth_dataset({"kind": "blobs", "colour": 1}, seed=0)

    @pytest.mark.parametrize("spec", [
        {"kind": "blobs", "n": "lots"},
        {"kind": "blobs", "classes": 2.5},
        {"kind": "blobs", "image_size": True},
        {"kind": "blobs", "seed": -1},
    ])
    def test_rejects_non_integer_and_negative_options(self, spec):
        with pytest.raises(ConfigError):
            synth_dataset(spec, seed=0)


class TestParseSource:
    def test_string_forms(self, tmp_path):
        img, lbl = _write_idx(tmp_path)
        assert len(parse_source(f"idx:{img},{lbl}")) == 4
        data = parse_source("synthetic:blobs,n=30,classes=3,size=10,seed=2")
        assert len(data) == 30 and data.image_shape == (1, 10, 10)

    def test_dict_forms(self, tmp_path):
        img, lbl = _write_idx(tmp_path)
        assert len(parse_source({"idx": {"images": str(img), "labels": str(lbl)}})) == 4
        assert len(parse_source({"synthetic": {"kind": "noise", "n": 5}})) == 5

    def test_seed_option_overrides_default(self):
        a = parse_source("synthetic:noise,n=4,seed=9", seed=1)
        b = parse_source("synthetic:noise,n=4", seed=9)
        np.testing.assert_array_equal(a.images, b.images)

    @pytest.mark.parametrize(
        "source",
        ["mnist", "ftp:x", "idx:only-one-path", "synthetic:blobs,depth=3", "synthetic:blobs,n=many",
         {"idx": "x", "csv": "y"}, {"idx": {"images": "a"}}],
    )
    def test_bad_sources(self, source):
        with pytest.raises(ConfigError):
            parse_source(source)

    def test_subset(self):
        data = parse_source("synthetic:blobs,n=10")
        assert len(data.subset(4)) == 4
        assert data.subset(None) is data
        assert data.subset(50) is data

    @pytest.mark.parametrize("limit", [0, -3])
    def test_subset_rejects_non_positive_limit(self, limit):
        with pytest.raises(ConfigError):
            parse_source("synthetic:blobs,n=10").subset(limit)
