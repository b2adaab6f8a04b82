"""SVG figures: ROC overlays and confusion-matrix heatmaps."""

import io
from pathlib import Path
from typing import Mapping, Optional, Sequence

import matplotlib
from matplotlib.figure import Figure

from backend.storage import atomic_write_bytes

from .confusion import ConfusionMatrix
from .roc import RocCurve, auc

# Fixed salt and no Date metadata keep reruns byte-identical.
SVG_RC = {"svg.hashsalt": "rgp", "svg.fonttype": "path"}


def _save_svg(fig: Figure, path: str | Path) -> Path:
    buffer = io.BytesIO()
    with matplotlib.rc_context(SVG_RC):
        fig.savefig(buffer, format="svg", metadata={"Date": None})
    return atomic_write_bytes(path, buffer.getvalue())


def plot_roc(
    curves: Mapping[str, RocCurve], path: str | Path, title: Optional[str] = None
) -> Path:
    """Overlay one ROC curve per label with the chance diagonal."""
    fig = Figure(figsize=(5, 5))
    ax = fig.add_subplot()
    ax.plot([0, 1], [0, 1], linestyle="--", color="grey", linewidth=0.8)
    for label, curve in curves.items():
        ax.plot(curve.fpr, curve.tpr, linewidth=1.4, label=f"{label} (AUC {auc(curve) * 100:.2f})")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.01)
    ax.set_xlabel("False positive rate")
    ax.set_ylabel("True positive rate")
    if title:
        ax.set_title(title)
    if curves:
        ax.legend(loc="lower right", fontsize="small")
    fig.tight_layout()
    return _save_svg(fig, path)


def plot_confusion(
    cm: ConfusionMatrix,
    class_names: Sequence[str],
    path: str | Path,
    title: Optional[str] = None,
) -> Path:
    """Heatmap of counts, rows true class and columns predicted class."""
    fig = Figure(figsize=(1.2 * cm.k + 2, 1.2 * cm.k + 1.5))
    ax = fig.add_subplot()
    image = ax.imshow(cm.counts, cmap="Blues")
    fig.colorbar(image, ax=ax, fraction=0.046, pad=0.04)
    ax.set_xticks(range(cm.k), labels=list(class_names))
    ax.set_yticks(range(cm.k), labels=list(class_names))
    ax.set_xlabel("Predicted")
    ax.set_ylabel("True")
    peak = cm.counts.max() if cm.total else 1
    for i in range(cm.k):
        for j in range(cm.k):
            value = int(cm.counts[i, j])
            ax.text(
                j, i, str(value), ha="center", va="center",
                color="white" if value > peak / 2 else "black",
            )
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return _save_svg(fig, path)
