"""Exception types shared across the numeric and harness layers.

Configuration problems raise :class:`src.config.ConfigError`; everything else
that a caller is expected to handle lives here.
"""

from __future__ import annotations


class DimensionError(ValueError):
    """Raised when tensor shapes are incompatible for an operation."""


class NumericError(ArithmeticError):
    """Raised when an operation produces or receives NaN/Inf values."""


class TrainingDivergedError(NumericError):
    """Raised when the training loss becomes non-finite."""

    def __init__(self, epoch: int, step: int, lr: float, loss: float) -> None:
        self.epoch = epoch
        self.step = step
        self.lr = lr
        self.loss = loss
        super().__init__(
            f"non-finite training loss {loss!r} at epoch {epoch}, step {step} (lr={lr:g}); "
            "lower lr_peak or weight_decay"
        )


class DataError(ValueError):
    """Raised for invalid labels, distributions or datasets."""


class FormatError(DataError):
    """Raised when a binary or text file does not match its declared format."""

    def __init__(self, message: str, offset: int | None = None) -> None:
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
