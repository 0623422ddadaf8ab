"""Random integer shifts and horizontal flips for image batches."""

from __future__ import annotations

import numpy as np

from ..errors import DimensionError
from ..tensor.core import Tensor
from ..tensor.rng import RngStream


def shift_image(image: Tensor, dx: int, dy: int) -> Tensor:
    """Translate a (C, H, W) image by (dx columns, dy rows), zero-filling the border."""
    _, h, w = image.shape
    out = np.zeros_like(image)
    if abs(dx) >= w or abs(dy) >= h:
        return out
    src_y = slice(max(0, -dy), h - max(0, dy))
    dst_y = slice(max(0, dy), h - max(0, -dy))
    src_x = slice(max(0, -dx), w - max(0, dx))
    dst_x = slice(max(0, dx), w - max(0, -dx))
    out[:, dst_y, dst_x] = image[:, src_y, src_x]
    return out


def flip_horizontal(image: Tensor) -> Tensor:
    return np.ascontiguousarray(image[..., ::-1])


def _draw(stream: RngStream, shift_max: int, flip_prob: float) -> tuple[int, int, bool]:
    u = stream.uniform(3)
    span = 2 * shift_max + 1
    dx = min(int(u[0] * span), span - 1) - shift_max
    dy = min(int(u[1] * span), span - 1) - shift_max
    return dx, dy, bool(u[2] < flip_prob)


def augment(image: Tensor, shift_max: int = 4, flip_prob: float = 0.5, stream: RngStream | None = None) -> Tensor:
    """Randomly shift (uniform in [−shift_max, shift_max] per axis) then maybe mirror.

    Draws three uniforms from ``stream``: dx, dy and the flip decision.
    """
    if image.ndim != 3:
        raise DimensionError(f"augment expects a (C, H, W) image, got shape {image.shape}")
    if shift_max >= min(image.shape[1], image.shape[2]):
        raise DimensionError(f"shift_max={shift_max} must be smaller than the image size {image.shape[1:]}")
    if stream is None:
        raise ValueError("augment needs an RngStream")
    dx, dy, flip = _draw(stream, shift_max, flip_prob)
    out = shift_image(image, dx, dy) if (dx or dy) else image.copy()
    return flip_horizontal(out) if flip else out


def augment_batch(images: Tensor, shift_max: int, flip_prob: float, stream: RngStream) -> Tensor:
    """Apply :func:`augment` to every image of a (N, C, H, W) batch from one stream."""
    return np.stack([augment(img, shift_max, flip_prob, stream) for img in images])
