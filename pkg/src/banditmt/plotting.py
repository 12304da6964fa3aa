"""Figures for the report command: regret curves and decision heatmaps."""
from __future__ import annotations

from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure
import numpy as np

DPI = 150


def _save(fig: Figure, path) -> None:
    FigureCanvasAgg(fig)
    fig.savefig(path, dpi=DPI, metadata={"Software": None})


def plot_regret_curves(curves: dict, path, title: str = "Cumulative regret") -> None:
    fig = Figure(figsize=(6.4, 4.0))
    ax = fig.add_subplot(111)
    for label, values in curves.items():
        values = np.asarray(values)
        ax.plot(np.arange(1, len(values) + 1), values, label=label, lw=1.5)
    ax.set_xlabel("step t")
    ax.set_ylabel("cumulative regret (BLEU points)")
    ax.set_title(title)
    ax.grid(alpha=0.3)
    if len(curves) > 1:
        ax.legend(fontsize=8, frameon=False)
    fig.tight_layout()
    _save(fig, path)


def plot_heatmap(matrix: np.ndarray, arm_names, starts, path, title: str = "") -> None:
    k, cols = matrix.shape
    fig = Figure(figsize=(max(4.0, 0.25 * cols + 2.5), 0.35 * k + 1.5))
    ax = fig.add_subplot(111)
    im = ax.imshow(matrix, aspect="auto", cmap="Reds", vmin=0.0, vmax=1.0, interpolation="nearest")
    ax.set_yticks(range(k))
    ax.set_yticklabels(arm_names, fontsize=8)
    step = max(1, cols // 10)
    ax.set_xticks(range(0, cols, step))
    ax.set_xticklabels([str(starts[j]) for j in range(0, cols, step)], fontsize=8)
    ax.set_xlabel("interval start (step)")
    if title:
        ax.set_title(title)
    fig.colorbar(im, ax=ax, fraction=0.04, pad=0.02)
    fig.tight_layout()
    _save(fig, path)
