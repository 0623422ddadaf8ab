"""Rotation sweep: how predictive entropy grows as inputs rotate away from the training pose."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from ..analysis.metrics import accuracy
from ..config import ConfigError
from ..errors import DimensionError
from ..nn.masks import DROPCONNECT, INVERTED, MaskPlan
from ..nn.network import Network
from ..tensor.core import Tensor
from .engine import predict_dataset

logger = logging.getLogger(__name__)

# Exact (cos, sin) for quarter turns so 0/90/180/270 map grid points onto grid points
_QUARTER_TURNS = {0: (1.0, 0.0), 90: (0.0, 1.0), 180: (-1.0, 0.0), 270: (0.0, -1.0)}


@dataclass(frozen=True)
class RotationPoint:
    angle: float
    mean_entropy: float
    std_entropy: float
    accuracy: float | None = None


def _cos_sin(angle: float) -> tuple[float, float]:
    reduced = angle % 360.0
    if reduced in _QUARTER_TURNS:
        return _QUARTER_TURNS[int(reduced)]
    rad = math.radians(reduced)
    return math.cos(rad), math.sin(rad)


def rotate_image(image: Tensor, angle: float) -> Tensor:
    """Rotate a C×H×W (or N×C×H×W) image counter-clockwise about its center.

    Nearest-neighbor resampling; pixels whose source falls outside the image
    are zero. A multiple of 360° returns an exact copy.
    """
    image = np.asarray(image)
    if image.ndim not in (3, 4):
        raise DimensionError(f"rotate_image expects C×H×W or N×C×H×W, got shape {image.shape}")
    cos, sin = _cos_sin(angle)
    if (cos, sin) == (1.0, 0.0):
        return image.copy()
    h, w = image.shape[-2:]
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    ys, xs = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")
    # Inverse mapping: output (y, x) samples the source rotated back by -angle
    dy, dx = ys - cy, xs - cx
    src_x = np.rint(cos * dx - sin * dy + cx).astype(np.int64)
    src_y = np.rint(sin * dx + cos * dy + cy).astype(np.int64)
    inside = (src_x >= 0) & (src_x < w) & (src_y >= 0) & (src_y < h)
    out = np.zeros_like(image)
    out[..., inside] = image[..., src_y[inside], src_x[inside]]
    return out


def rotation_entropy_sweep(
    net: Network,
    images: Tensor,
    angles: list[float],
    passes: int,
    lambda_frozen: int,
    drop_prob: float,
    seed: int,
    mode: str = DROPCONNECT,
    scale_mode: str = INVERTED,
    labels: np.ndarray | None = None,
    batch_size: int = 500,
    max_workers: int = 1,
) -> list[RotationPoint]:
    """Select-DC mean/std predictive entropy of ``images`` at each rotation angle.

    When ``labels`` are given, each point also carries the MC-mean accuracy.
    """
    if not angles or not any(float(a) == 0.0 for a in angles):
        raise ConfigError("rotation angles must include 0")

    plan = MaskPlan(drop_prob=drop_prob, lambda_frozen=lambda_frozen, mode=mode, scale_mode=scale_mode)
    points: list[RotationPoint] = []
    for angle in angles:
        summary = predict_dataset(
            net, rotate_image(images, float(angle)), passes, plan, seed, batch_size, max_workers=max_workers,
        )
        point = RotationPoint(
            angle=float(angle),
            mean_entropy=float(np.mean(summary.entropy)),
            std_entropy=float(np.std(summary.entropy)),
            accuracy=accuracy(summary.mean_probs, labels) if labels is not None else None,
        )
        logger.info(
            "Rotation %.1f°: mean entropy %.4f (std %.4f)", point.angle, point.mean_entropy, point.std_entropy,
        )
        points.append(point)
    return points
