"""Classification and OOD metrics over MC-mean predictions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError
from ..training.loss import PROB_FLOOR, check_labels


def accuracy(mean_probs: np.ndarray, labels: np.ndarray) -> float:
    """Fraction of rows whose argmax (lowest index on ties) equals the label."""
    labels = check_labels(labels, mean_probs.shape[1])
    if labels.size == 0:
        return 0.0
    return float(np.mean(np.argmax(mean_probs, axis=1) == labels))


def nll(mean_probs: np.ndarray, labels: np.ndarray) -> float:
    """−(1/n)·Σ ln max(p[label], 1e-12)."""
    labels = check_labels(labels, mean_probs.shape[1])
    if labels.size == 0:
        return 0.0
    picked = np.asarray(mean_probs, dtype=np.float64)[np.arange(labels.size), labels]
    return float(-np.mean(np.log(np.maximum(picked, PROB_FLOOR))))


@dataclass(frozen=True)
class RocPoint:
    threshold: float
    tpr: float
    fpr: float


def _check_scores(id_scores: np.ndarray, ood_scores: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    id_scores = np.asarray(id_scores, dtype=np.float64).ravel()
    ood_scores = np.asarray(ood_scores, dtype=np.float64).ravel()
    if id_scores.size == 0 or ood_scores.size == 0:
        raise DataError("auroc needs non-empty ID and OOD score sets")
    if not (np.all(np.isfinite(id_scores)) and np.all(np.isfinite(ood_scores))):
        raise DataError("auroc scores must be finite")
    return id_scores, ood_scores


def auroc(id_scores: np.ndarray, ood_scores: np.ndarray) -> float:
    """Area under the ROC curve, OOD positive, higher score ⇒ more OOD.

    Computed as the Mann-Whitney statistic
    (#pairs ood>id + 0.5·#ties) / (n_id·n_ood).
    """
    id_scores, ood_scores = _check_scores(id_scores, ood_scores)
    ranked = np.sort(id_scores)
    below = np.searchsorted(ranked, ood_scores, side="left")
    at_or_below = np.searchsorted(ranked, ood_scores, side="right")
    wins = int(below.sum())
    ties = int((at_or_below - below).sum())
    return (wins + 0.5 * ties) / (id_scores.size * ood_scores.size)


def roc_curve(id_scores: np.ndarray, ood_scores: np.ndarray) -> list[RocPoint]:
    """Threshold sweep: a sample is flagged OOD when its score is >= threshold.

    Thresholds run from +inf (nothing flagged) down through every distinct
    score, so the curve starts at (0, 0) and ends at (1, 1).
    """
    id_scores, ood_scores = _check_scores(id_scores, ood_scores)
    id_sorted = np.sort(id_scores)
    ood_sorted = np.sort(ood_scores)
    thresholds = np.unique(np.concatenate([id_scores, ood_scores]))[::-1]
    id_flagged = id_scores.size - np.searchsorted(id_sorted, thresholds, side="left")
    ood_flagged = ood_scores.size - np.searchsorted(ood_sorted, thresholds, side="left")
    points = [RocPoint(float("inf"), 0.0, 0.0)]
    points.extend(
        RocPoint(float(t), o / ood_scores.size, i / id_scores.size)
        for t, o, i in zip(thresholds, ood_flagged, id_flagged)
    )
    return points


def curve_area(points: list[RocPoint]) -> float:
    """Trapezoidal area under a ROC curve given in sweep order."""
    area = 0.0
    for prev, cur in zip(points, points[1:]):
        area += (cur.fpr - prev.fpr) * (cur.tpr + prev.tpr) / 2.0
    return area
