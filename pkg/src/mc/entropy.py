"""Predictive entropy of categorical distributions (natural log)."""

from __future__ import annotations

import numpy as np

from ..errors import DataError

_SUM_TOLERANCE = 1e-5


def _validate(probs: np.ndarray) -> np.ndarray:
    probs = np.asarray(probs, dtype=np.float64)
    if not np.all(np.isfinite(probs)) or np.any(probs < 0):
        raise DataError("probabilities must be finite and non-negative")
    sums = probs.sum(axis=-1)
    if np.any(np.abs(sums - 1.0) > _SUM_TOLERANCE):
        raise DataError(f"probabilities must sum to 1 ± {_SUM_TOLERANCE}, got sums in [{sums.min()}, {sums.max()}]")
    return probs


def entropy_rows(probs: np.ndarray) -> np.ndarray:
    """Entropy of each row of a (N, C) array; 0·ln 0 is taken as 0.

    Rows are renormalised in float64 first so the result stays within [0, ln C].
    """
    probs = _validate(probs)
    probs = probs / probs.sum(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(probs > 0, probs * np.log(probs), 0.0)
    return np.maximum(-terms.sum(axis=-1), 0.0)


def predictive_entropy(probs: np.ndarray) -> float:
    """H = −Σ_c p_c ln p_c of one probability vector."""
    probs = np.asarray(probs)
    if probs.ndim != 1:
        raise DataError(f"predictive_entropy expects a vector, got shape {probs.shape}")
    return float(entropy_rows(probs[None, :])[0])
