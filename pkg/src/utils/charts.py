"""Chart generation using matplotlib: returns PNG bytes for the --plot option."""

from __future__ import annotations

import io
import logging
from pathlib import Path
from typing import Any, Sequence

logger = logging.getLogger(__name__)

_FIG_BG = "#1a1a2e"
_AX_BG = "#16213e"
_PALETTE = ["#4ecca3", "#e94560", "#f8b500", "#5dade2", "#af7ac5", "#eeeeee"]


def _requires_matplotlib(func):
    """Decorator: log a warning and return None if matplotlib is unavailable."""
    def wrapper(*args, **kwargs):
        try:
            import matplotlib  # noqa: F401
        except ImportError:
            logger.warning("matplotlib not installed; skipping chart generation")
            return None
        return func(*args, **kwargs)
    return wrapper


def _style(ax, ylabel: str, xlabel: str) -> None:
    ax.set_facecolor(_AX_BG)
    ax.set_ylabel(ylabel, color="white")
    ax.set_xlabel(xlabel, color="white")
    ax.tick_params(colors="white")
    for spine in ax.spines.values():
        spine.set_edgecolor("#444")


def _to_png(fig) -> bytes:
    import matplotlib.pyplot as plt

    plt.tight_layout()
    buf = io.BytesIO()
    plt.savefig(buf, format="png", dpi=120, bbox_inches="tight", facecolor=fig.get_facecolor())
    plt.close(fig)
    buf.seek(0)
    return buf.read()


@_requires_matplotlib
def generate_sweep_chart(rows: Sequence[dict[str, Any]]) -> bytes | None:
    """Accuracy, NLL and mean entropy against GFLOPs, one line per drop probability.

    Args:
        rows: Sweep table rows with ``lambda``, ``drop_prob``, ``gflops``,
              ``accuracy``, ``nll`` and ``mean_entropy``.

    Returns:
        PNG image as bytes, or None if generation fails.
    """
    import matplotlib.pyplot as plt

    try:
        probs = sorted({r["drop_prob"] for r in rows})
        fig, axes = plt.subplots(3, 1, figsize=(8, 9), facecolor=_FIG_BG)
        fig.suptitle("Select-DC: metrics vs GFLOPs", color="white", fontsize=14, fontweight="bold")
        for ax, metric, label in zip(axes, ("accuracy", "nll", "mean_entropy"), ("Accuracy", "NLL", "Entropy (nats)")):
            for i, p in enumerate(probs):
                series = sorted((r for r in rows if r["drop_prob"] == p), key=lambda r: r["gflops"])
                ax.plot(
                    [r["gflops"] for r in series], [r[metric] for r in series],
                    color=_PALETTE[i % len(_PALETTE)], marker="o", linewidth=2, markersize=5, label=f"p={p:g}",
                )
                for r in series:
                    ax.annotate(f"λ={r['lambda']}", (r["gflops"], r[metric]), color="#aaa", fontsize=7)
            _style(ax, label, "GFLOPs")
        axes[0].legend(facecolor=_AX_BG, labelcolor="white", fontsize=8)
        return _to_png(fig)
    except Exception as exc:
        logger.error("Sweep chart generation failed: %s", exc)
        return None


@_requires_matplotlib
def generate_flops_chart(rows: Sequence[dict[str, Any]]) -> bytes | None:
    """Bar chart of total inference cost per λ."""
    import matplotlib.pyplot as plt

    try:
        fig, ax = plt.subplots(figsize=(8, 4), facecolor=_FIG_BG)
        lambdas = [str(r["lambda"]) for r in rows]
        ax.bar(lambdas, [r["gflops"] for r in rows], color=_PALETTE[0], edgecolor="none")
        ax.set_title("Inference cost by frozen-layer count", color="white")
        _style(ax, "GFLOPs", "λ (frozen weight layers)")
        return _to_png(fig)
    except Exception as exc:
        logger.error("FLOPs chart generation failed: %s", exc)
        return None


@_requires_matplotlib
def generate_rotation_chart(rows: Sequence[dict[str, Any]]) -> bytes | None:
    """Mean predictive entropy (± one standard deviation) against rotation angle."""
    import matplotlib.pyplot as plt

    try:
        angles = [r["angle"] for r in rows]
        mean = [r["mean_entropy"] for r in rows]
        std = [r["std_entropy"] for r in rows]
        fig, ax = plt.subplots(figsize=(8, 4), facecolor=_FIG_BG)
        ax.plot(angles, mean, color=_PALETTE[0], marker="o", linewidth=2)
        ax.fill_between(
            angles, [m - s for m, s in zip(mean, std)], [m + s for m, s in zip(mean, std)],
            color=_PALETTE[0], alpha=0.2,
        )
        ax.set_title("Uncertainty under rotation", color="white")
        _style(ax, "Entropy (nats)", "Rotation (degrees)")
        return _to_png(fig)
    except Exception as exc:
        logger.error("Rotation chart generation failed: %s", exc)
        return None


def save_chart(png: bytes | None, path: str | Path) -> Path | None:
    """Write PNG bytes to ``path``; a None chart (no matplotlib) writes nothing."""
    if png is None:
        return None
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(png)
    logger.info("Chart saved to %s", path)
    return path
