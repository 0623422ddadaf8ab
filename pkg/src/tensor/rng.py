"""Deterministic counter-based random streams keyed by (seed, pass, layer).

Each stream is a SplitMix64 sequence whose 64-bit key is derived from the
triple with integer-only mixing, so draws are identical on every platform and
any stream can be recreated without replaying the others.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# 53 random bits → float64 in [0, 1)
_UNIT = 1.0 / (1 << 53)


def mix64(z: int) -> int:
    """SplitMix64 finalizer on a Python int (bijective on 64-bit values)."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


def mix_seed(seed: int, *indices: int) -> int:
    """Derive a child seed from ``seed`` and any number of non-negative indices."""
    state = mix64(seed + _GOLDEN)
    for index in indices:
        state = mix64(state + (index + 1) * _GOLDEN)
    return state


def _mix64_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


@dataclass
class RngStream:
    """A reproducible stream of uniform draws in [0, 1).

    Draw ``i`` of the stream is ``mix64(key + (i + 1) * GOLDEN)``; the counter
    advances by the number of values consumed.
    """

    root_seed: int
    pass_index: int
    layer_index: int
    key: int = field(init=False, repr=False)
    counter: int = field(default=0, init=False)

    def __post_init__(self) -> None:
        if self.root_seed < 0 or self.pass_index < 0 or self.layer_index < 0:
            raise ValueError("rng_stream indices must be non-negative")
        self.key = mix_seed(self.root_seed & _MASK64, self.pass_index, self.layer_index)

    def bits(self, n: int) -> np.ndarray:
        """Return the next ``n`` raw 64-bit draws as a uint64 array."""
        counters = np.arange(self.counter + 1, self.counter + n + 1, dtype=np.uint64)
        self.counter += n
        with np.errstate(over="ignore"):
            z = np.uint64(self.key) + counters * np.uint64(_GOLDEN)
            return _mix64_array(z)

    def uniform(self, n: int) -> np.ndarray:
        """Return the next ``n`` draws as float64 values in [0, 1)."""
        return (self.bits(n) >> np.uint64(11)).astype(np.float64) * _UNIT

    def next_float(self) -> float:
        return float(self.uniform(1)[0])

    def integers(self, low: int, high: int, n: int) -> np.ndarray:
        """Return ``n`` integers uniform in the half-open range [low, high)."""
        if high <= low:
            raise ValueError(f"empty integer range [{low}, {high})")
        span = high - low
        return low + np.minimum((self.uniform(n) * span).astype(np.int64), span - 1)

    def permutation(self, n: int) -> np.ndarray:
        """Return a permutation of ``range(n)`` (stable argsort of uniform keys)."""
        return np.argsort(self.uniform(n), kind="stable")


def rng_stream(root_seed: int, pass_index: int, layer_index: int) -> RngStream:
    """Return the independent stream for one (seed, pass, layer) triple."""
    return RngStream(root_seed, pass_index, layer_index)
