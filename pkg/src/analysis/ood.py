"""Entropy-based out-of-distribution detection."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..errors import DataError
from ..mc.engine import predict_dataset
from ..nn.masks import DROPCONNECT, INVERTED, MaskPlan
from ..nn.network import Network
from ..tensor.core import Tensor
from .metrics import RocPoint, auroc, roc_curve

logger = logging.getLogger(__name__)


@dataclass
class OodReport:
    id_mean_entropy: float
    ood_mean_entropy: float
    auroc: float
    lambda_frozen: int
    drop_prob: float
    passes: int
    seed: int
    threshold_curve: list[RocPoint] = field(default_factory=list, repr=False)
    id_entropy: np.ndarray | None = field(default=None, repr=False)
    ood_entropy: np.ndarray | None = field(default=None, repr=False)


def ood_evaluate(
    net: Network,
    id_images: Tensor,
    ood_images: Tensor,
    passes: int,
    lambda_frozen: int,
    drop_prob: float,
    seed: int,
    mode: str = DROPCONNECT,
    scale_mode: str = INVERTED,
    batch_size: int = 500,
    max_workers: int = 1,
) -> OodReport:
    """Score ID and OOD inputs by Select-DC predictive entropy and compute AUROC.

    OOD is the positive class; higher entropy means more likely OOD.
    """
    id_images = np.asarray(id_images)
    ood_images = np.asarray(ood_images)
    if id_images.shape[1:] != ood_images.shape[1:]:
        raise DataError(
            f"ID and OOD image shapes differ: {id_images.shape[1:]} vs {ood_images.shape[1:]}"
        )
    if id_images.shape[1:] != net.input_shape:
        raise DataError(f"image shape {id_images.shape[1:]} does not match network input {net.input_shape}")

    plan = MaskPlan(drop_prob=drop_prob, lambda_frozen=lambda_frozen, mode=mode, scale_mode=scale_mode)
    id_summary = predict_dataset(net, id_images, passes, plan, seed, batch_size, max_workers=max_workers)
    ood_summary = predict_dataset(net, ood_images, passes, plan, seed, batch_size, max_workers=max_workers)
    report = OodReport(
        id_mean_entropy=id_summary.mean_entropy,
        ood_mean_entropy=ood_summary.mean_entropy,
        auroc=auroc(id_summary.entropy, ood_summary.entropy),
        lambda_frozen=lambda_frozen,
        drop_prob=drop_prob,
        passes=passes,
        seed=seed,
        threshold_curve=roc_curve(id_summary.entropy, ood_summary.entropy),
        id_entropy=id_summary.entropy,
        ood_entropy=ood_summary.entropy,
    )
    logger.info(
        "OOD λ=%d p=%.2f: ID entropy %.4f, OOD entropy %.4f, AUROC %.4f",
        lambda_frozen, drop_prob, report.id_mean_entropy, report.ood_mean_entropy, report.auroc,
    )
    return report
