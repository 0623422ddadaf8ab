"""Reverse-mode gradients of the training loss for a masked forward pass.

Masks are treated as constants: a weight dropped in the forward pass gets no
data gradient this step, but still receives the weight-decay gradient.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..nn.layers import CONV2D, FLATTEN, MAXPOOL2, RELU
from ..nn.masks import DROPOUT, MaskPlan
from ..nn.network import LayerTrace, Network, forward_range
from ..tensor.core import Tensor, col2im, im2col, maxpool2_backward
from .loss import PROB_FLOOR, check_labels, l2_gradient, loss_mc


@dataclass
class Gradients:
    weights: list[Tensor]
    biases: list[Tensor]
    loss: float
    probs: Tensor


def _weight_layer_backward(
    net: Network,
    j: int,
    trace: LayerTrace,
    grad_out: Tensor,
    plan: MaskPlan,
    mask: Tensor | None,
) -> tuple[Tensor, Tensor, Tensor]:
    """Gradients (dW, db, dx) of one weight layer given dL/d(output)."""
    spec = net.layers[trace.position]
    w = net.weights[j]
    x = trace.inputs
    dtype = w.dtype.type
    scale = dtype(plan.scale) if mask is not None else dtype(1.0)
    dropout = mask is not None and plan.mode == DROPOUT
    dropconnect = mask is not None and not dropout

    if spec.kind == CONV2D:
        kh = kw = spec.kernel_size
        n = x.shape[0]
        c_out = w.shape[0]
        if dropout:
            # y = s·((conv + b) ⊙ m): gradient reaches conv + b through s·m
            grad_pre = grad_out * (mask.reshape(1, -1, 1, 1) * scale)
            db = grad_pre.sum(axis=(0, 2, 3))
            grad_lin = grad_pre
        else:
            # y = s·conv(x, W⊙M) + b
            db = grad_out.sum(axis=(0, 2, 3))
            grad_lin = grad_out * scale if scale != 1.0 else grad_out
        cols, out_h, out_w = im2col(x, kh, kw, spec.stride, spec.pad)
        g2d = grad_lin.transpose(0, 2, 3, 1).reshape(n * out_h * out_w, c_out)
        w_eff = w * mask if dropconnect else w
        dw = (g2d.T @ cols).reshape(w.shape)
        if dropconnect:
            dw = dw * mask
        dcols = g2d @ w_eff.reshape(c_out, -1)
        dx = col2im(dcols, x.shape, kh, kw, spec.stride, spec.pad)
        return dw, db, dx

    if dropout:
        grad_pre = grad_out * (mask * scale)
        db = grad_pre.sum(axis=0)
        grad_lin = grad_pre
    else:
        db = grad_out.sum(axis=0)
        grad_lin = grad_out * scale if scale != 1.0 else grad_out
    w_eff = w * mask if dropconnect else w
    dw = x.T @ grad_lin
    if dropconnect:
        dw = dw * mask
    dx = grad_lin @ w_eff.T
    return dw, db, dx


def compute_gradients(
    net: Network,
    x: Tensor,
    labels: np.ndarray,
    plan: MaskPlan,
    masks: dict[int, Tensor],
    weight_decay: float,
) -> Gradients:
    """Loss and gradients for one batch under a fixed set of masks.

    Args:
        net: The network; its weights are read, not modified.
        x: (N, *input_shape) batch.
        labels: (N,) class indices.
        plan: The plan the masks were sampled from (mode and scale).
        masks: Masks used in the forward pass, keyed by weight-layer index.
        weight_decay: L2 coefficient of the loss.
    """
    labels = check_labels(labels, net.num_classes)
    trace: list[LayerTrace] = []
    probs = forward_range(net, x, 0, len(net.layers), plan, masks, trace)
    loss = loss_mc(probs, labels, net.weights, weight_decay)

    n = x.shape[0]
    picked = probs[np.arange(n), labels]
    onehot = np.zeros_like(probs)
    onehot[np.arange(n), labels] = 1
    # d(mean NLL)/d(logits); zero where the probability floor is active
    active = (picked > PROB_FLOOR).astype(probs.dtype)
    grad = (probs - onehot) * (active / probs.dtype.type(n))[:, None]

    grad_w: list[Tensor | None] = [None] * net.n_weight_layers
    grad_b: list[Tensor | None] = [None] * net.n_weight_layers
    # trace[-1] is the softmax layer, already folded into ``grad``
    for record in reversed(trace[:-1]):
        spec = net.layers[record.position]
        if spec.weight_bearing:
            j = net.weight_index_at(record.position)
            dw, db, grad = _weight_layer_backward(net, j, record, grad, plan, masks.get(j))
            grad_w[j] = dw
            grad_b[j] = db
        elif spec.kind == RELU:
            grad = grad * (record.inputs > 0)
        elif spec.kind == MAXPOOL2:
            grad = maxpool2_backward(grad, record.pool_index, record.inputs.shape)
        elif spec.kind == FLATTEN:
            grad = grad.reshape(record.inputs.shape)

    if weight_decay:
        grad_w = [g + d for g, d in zip(grad_w, l2_gradient(net.weights, weight_decay))]
    return Gradients(weights=grad_w, biases=grad_b, loss=loss, probs=probs)
