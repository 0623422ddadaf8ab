"""Dense numeric kernels: matmul, convolution, pooling and softmax.

All kernels take and return ``numpy.ndarray`` values and preserve the input
floating dtype (float32 normally, float64 for gradient checks). Outputs are
checked for NaN/Inf before they are returned.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import DimensionError, NumericError

Tensor = np.ndarray

DEFAULT_DTYPE = np.float32


def check_finite(t: Tensor, where: str) -> Tensor:
    """Raise NumericError if ``t`` contains NaN or Inf."""
    if not np.all(np.isfinite(t)):
        raise NumericError(f"non-finite values produced by {where}")
    return t


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product of an (m×k) and a (k×n) tensor."""
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionError(f"matmul expects 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul inner dimensions differ: {a.shape} x {b.shape}")
    return check_finite(np.matmul(a, b), "matmul")


def conv_output_size(size: int, kernel: int, stride: int, pad: int) -> int:
    """Output extent of a convolution along one axis; raises on non-integral sizes."""
    span = size + 2 * pad - kernel
    if span < 0 or span % stride != 0:
        raise DimensionError(
            f"conv output size (({size}+2*{pad}-{kernel})/{stride})+1 is not a positive integer"
        )
    return span // stride + 1


def im2col(x: Tensor, kh: int, kw: int, stride: int, pad: int) -> tuple[Tensor, int, int]:
    """Unfold a (N, C, H, W) batch into patch rows of shape (N*H'*W', C*kh*kw)."""
    n, c, h, w = x.shape
    out_h = conv_output_size(h, kh, stride, pad)
    out_w = conv_output_size(w, kw, stride, pad)
    if pad:
        x = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)), mode="constant")
    windows = sliding_window_view(x, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
    # (N, C, H', W', kh, kw) -> (N, H', W', C, kh, kw)
    cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(n * out_h * out_w, c * kh * kw)
    return cols, out_h, out_w


def col2im(
    cols: Tensor,
    x_shape: tuple[int, int, int, int],
    kh: int,
    kw: int,
    stride: int,
    pad: int,
) -> Tensor:
    """Fold patch-row gradients back onto a (N, C, H, W) input (adjoint of im2col)."""
    n, c, h, w = x_shape
    out_h = conv_output_size(h, kh, stride, pad)
    out_w = conv_output_size(w, kw, stride, pad)
    patches = cols.reshape(n, out_h, out_w, c, kh, kw)
    padded = np.zeros((n, c, h + 2 * pad, w + 2 * pad), dtype=cols.dtype)
    for i in range(kh):
        for j in range(kw):
            padded[:, :, i:i + stride * out_h:stride, j:j + stride * out_w:stride] += (
                patches[:, :, :, :, i, j].transpose(0, 3, 1, 2)
            )
    if pad:
        return padded[:, :, pad:pad + h, pad:pad + w]
    return padded


def conv2d(input: Tensor, kernels: Tensor, stride: int = 1, pad: int = 0) -> Tensor:
    """2-D cross-correlation (no kernel flip) with zero padding.

    Args:
        input: (C_in, H, W) or a batch (N, C_in, H, W).
        kernels: (C_out, C_in, kh, kw).
        stride: Positive step between windows.
        pad: Zero rows/columns added on every side.

    Returns:
        (C_out, H', W') or (N, C_out, H', W') matching the input rank.
    """
    if stride < 1 or pad < 0:
        raise DimensionError(f"invalid conv geometry stride={stride} pad={pad}")
    single = input.ndim == 3
    x = input[None] if single else input
    if x.ndim != 4 or kernels.ndim != 4:
        raise DimensionError(f"conv2d expects (N,)C,H,W input and 4-D kernels, got {input.shape}, {kernels.shape}")
    c_out, c_in, kh, kw = kernels.shape
    if x.shape[1] != c_in:
        raise DimensionError(f"conv2d channel mismatch: input has {x.shape[1]}, kernels expect {c_in}")
    cols, out_h, out_w = im2col(x, kh, kw, stride, pad)
    out = matmul(cols, kernels.reshape(c_out, -1).T)
    out = out.reshape(x.shape[0], out_h, out_w, c_out).transpose(0, 3, 1, 2)
    out = np.ascontiguousarray(out)
    return out[0] if single else out


def relu(x: Tensor) -> Tensor:
    return np.maximum(x, 0)


def maxpool2(x: Tensor) -> tuple[Tensor, Tensor]:
    """2×2 max pooling with stride 2 over a (N, C, H, W) batch.

    Odd trailing rows/columns are dropped. Returns the pooled tensor and the
    argmax index (0..3) of each window, which the backward pass routes through.
    """
    n, c, h, w = x.shape
    h2, w2 = h // 2, w // 2
    if h2 == 0 or w2 == 0:
        raise DimensionError(f"maxpool2 needs spatial size >= 2, got {h}x{w}")
    windows = (
        x[:, :, :2 * h2, :2 * w2]
        .reshape(n, c, h2, 2, w2, 2)
        .transpose(0, 1, 2, 4, 3, 5)
        .reshape(n, c, h2, w2, 4)
    )
    idx = np.argmax(windows, axis=-1)
    pooled = np.take_along_axis(windows, idx[..., None], axis=-1)[..., 0]
    return pooled, idx


def maxpool2_backward(grad: Tensor, idx: Tensor, x_shape: tuple[int, ...]) -> Tensor:
    """Route pooled gradients back to the winning element of each window."""
    n, c, h, w = x_shape
    h2, w2 = h // 2, w // 2
    windows = np.zeros((n, c, h2, w2, 4), dtype=grad.dtype)
    np.put_along_axis(windows, idx[..., None], grad[..., None], axis=-1)
    dx = np.zeros(x_shape, dtype=grad.dtype)
    dx[:, :, :2 * h2, :2 * w2] = (
        windows.reshape(n, c, h2, w2, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, 2 * h2, 2 * w2)
    )
    return dx


def softmax(logits: Tensor) -> Tensor:
    """Numerically stable softmax over the last axis (max-subtraction)."""
    if np.any(np.isnan(logits)):
        raise NumericError("softmax received NaN logits")
    if not np.all(np.isfinite(logits)):
        raise NumericError("softmax received infinite logits")
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=-1, keepdims=True)
