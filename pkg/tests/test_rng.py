"""Tests for src/tensor/rng.py."""

import numpy as np
import pytest

from src.tensor.rng import RngStream, mix64, mix_seed, rng_stream


def test_same_triple_same_draws():
    assert rng_stream(42, 0, 0).next_float() == rng_stream(42, 0, 0).next_float()
    assert np.array_equal(rng_stream(42, 3, 2).bits(100), rng_stream(42, 3, 2).bits(100))


def test_streams_differ_by_pass_and_layer():
    a = rng_stream(42, 0, 0).uniform(10_000)
    b = rng_stream(42, 1, 0).uniform(10_000)
    c = rng_stream(42, 0, 1).uniform(10_000)
    assert np.mean(a != b) > 0.99
    assert np.mean(a != c) > 0.99


def test_uniform_mean_and_range():
    u = rng_stream(7, 0, 0).uniform(1_000_000)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert 0.497 <= u.mean() <= 0.503


def test_counter_continues_the_sequence():
    whole = rng_stream(1, 2, 3).uniform(20)
    s = rng_stream(1, 2, 3)
    parts = np.concatenate([s.uniform(7), s.uniform(13)])
    assert np.array_equal(whole, parts)


def test_scalar_and_vector_mixers_agree():
    s = RngStream(11, 0, 0)
    first = int(s.bits(1)[0])
    assert first == mix64((s.key + 0x9E3779B97F4A7C15) & ((1 << 64) - 1))


def test_mix_seed_depends_on_every_index():
    assert mix_seed(1, 2, 3) != mix_seed(1, 3, 2)
    assert mix_seed(1, 2) != mix_seed(1, 2, 0)
    assert mix_seed(5) == mix_seed(5)


def test_integers_and_permutation():
    s = rng_stream(3, 0, 0)
    ints = s.integers(-2, 3, 10_000)
    assert ints.min() == -2 and ints.max() == 2
    perm = rng_stream(3, 1, 0).permutation(50)
    assert sorted(perm.tolist()) == list(range(50))


def test_negative_indices_rejected():
    with pytest.raises(ValueError):
        rng_stream(1, -1, 0)
