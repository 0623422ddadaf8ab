"""Mini-batch training loop for masked networks."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from ..analysis.metrics import accuracy
from ..errors import DataError, NumericError, TrainingDivergedError
from ..nn.network import Network, predict_deterministic, sample_masks
from ..tensor.rng import mix_seed, rng_stream
from .augment import augment_batch
from .backprop import compute_gradients
from .loss import check_labels
from .optimizer import OptimizerState, sgd_nesterov_step
from .schedule import TrainConfig, lr_at

logger = logging.getLogger(__name__)

# Salts separating the random streams that one training seed feeds
_SHUFFLE_SALT = 0x5A1
_AUGMENT_SALT = 0xA06
_MASK_SALT = 0x3A5


class LabelledImages(Protocol):
    images: np.ndarray
    labels: np.ndarray


@dataclass
class EpochMetrics:
    epoch: int
    train_loss: float
    train_accuracy: float
    val_accuracy: float
    lr: float
    seconds: float


@dataclass
class FitResult:
    net: Network
    history: list[EpochMetrics] = field(default_factory=list)


def _check_dataset(net: Network, data: LabelledImages, name: str) -> None:
    if data.images.shape[0] == 0:
        raise DataError(f"{name} set is empty")
    if tuple(data.images.shape[1:]) != net.input_shape:
        raise DataError(f"{name} images have shape {data.images.shape[1:]}, network expects {net.input_shape}")
    if data.labels.shape[0] != data.images.shape[0]:
        raise DataError(f"{name} set has {data.images.shape[0]} images but {data.labels.shape[0]} labels")
    check_labels(data.labels, net.num_classes)


def fit(
    net: Network,
    train_set: LabelledImages,
    cfg: TrainConfig,
    val_set: LabelledImages | None = None,
) -> FitResult:
    """Train a copy of ``net`` and return it with per-epoch metrics.

    Per batch: augment, sample masks for weight layers from
    ``cfg.lambda_frozen_train`` onward, forward, loss, gradients and one
    Nesterov step at ``lr_at(step)``. Validation accuracy uses the
    deterministic forward on ``val_set`` (the training set when omitted).
    Everything random derives from ``cfg.seed``, so runs are bit-reproducible.

    Raises:
        DataError: On an empty or mis-shaped dataset.
        TrainingDivergedError: If the loss becomes non-finite.
    """
    _check_dataset(net, train_set, "training")
    if val_set is not None:
        _check_dataset(net, val_set, "validation")
    plan = cfg.mask_plan()
    plan.check_lambda(net.n_weight_layers)

    net = net.copy()
    images = train_set.images.astype(net.dtype, copy=False)
    labels = np.asarray(train_set.labels)
    n = images.shape[0]
    steps_per_epoch = math.ceil(n / cfg.batch_size)
    total_steps = cfg.epochs * steps_per_epoch
    params = net.weights + net.biases
    state = OptimizerState.zeros_like(params)

    shuffle_seed = mix_seed(cfg.seed, _SHUFFLE_SALT)
    augment_seed = mix_seed(cfg.seed, _AUGMENT_SALT)
    mask_seed = mix_seed(cfg.seed, _MASK_SALT)
    use_augment = len(net.input_shape) == 3 and (cfg.shift_max > 0 or cfg.flip_prob > 0)
    evaluation = val_set if val_set is not None else train_set

    logger.info(
        "Training: %d examples, %d epochs x %d steps, p=%g, lambda_train=%d, mode=%s",
        n, cfg.epochs, steps_per_epoch, cfg.drop_prob, cfg.lambda_frozen_train, cfg.mode,
    )
    result = FitResult(net=net)
    step = 0
    for epoch in range(cfg.epochs):
        started = time.monotonic()
        order = rng_stream(shuffle_seed, epoch, 0).permutation(n)
        loss_sum = 0.0
        correct = 0
        lr = cfg.lr_peak
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            xb, yb = images[idx], labels[idx]
            if use_augment:
                xb = augment_batch(xb, cfg.shift_max, cfg.flip_prob, rng_stream(augment_seed, step, 0))
            lr = lr_at(step, total_steps, cfg)
            masks = sample_masks(net, plan, mask_seed, step)
            try:
                grads = compute_gradients(net, xb, yb, plan, masks, cfg.weight_decay)
            except NumericError as exc:
                raise TrainingDivergedError(epoch, step, lr, float("nan")) from exc
            if not math.isfinite(grads.loss):
                raise TrainingDivergedError(epoch, step, lr, grads.loss)
            sgd_nesterov_step(params, grads.weights + grads.biases, state, lr, cfg.momentum)
            loss_sum += grads.loss * idx.size
            correct += int(np.sum(np.argmax(grads.probs, axis=1) == yb))
            step += 1

        val_probs = predict_deterministic(net, evaluation.images)
        metrics = EpochMetrics(
            epoch=epoch,
            train_loss=loss_sum / n,
            train_accuracy=correct / n,
            val_accuracy=accuracy(val_probs, evaluation.labels),
            lr=lr,
            seconds=time.monotonic() - started,
        )
        result.history.append(metrics)
        logger.info(
            "Epoch %d/%d: loss=%.4f train_acc=%.4f val_acc=%.4f lr=%.5f (%.1fs)",
            epoch + 1, cfg.epochs, metrics.train_loss, metrics.train_accuracy,
            metrics.val_accuracy, lr, metrics.seconds,
        )
    return result
