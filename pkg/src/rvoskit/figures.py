"""Matplotlib renderings written next to the CSV/JSON report files."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .ablation import SCHEME_LABELS, GridSpec
from .metrics import Report


def save_report_figure(report: Report, path: Path | str, title: str = "evaluation") -> None:
    """Per-expression J&F sorted ascending, with the split means overlaid."""
    scores = sorted(r.jf for r in report.records)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(range(1, len(scores) + 1), scores, marker="o", ms=3, lw=1, label="J&F per pair")
    ax.axhline(report.mean_jf, color="tab:red", lw=1, ls="--",
               label=f"mean J&F = {report.mean_jf:.4f}")
    ax.axhline(report.mean_j, color="tab:green", lw=0.8, ls=":",
               label=f"mean J = {report.mean_j:.4f}")
    ax.axhline(report.mean_f, color="tab:purple", lw=0.8, ls=":",
               label=f"mean F = {report.mean_f:.4f}")
    ax.set_xlabel("expression (sorted by score)")
    ax.set_ylabel("J&F")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(title)
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_grid_figure(spec: GridSpec, matrix: list[list[Report]], path: Path | str) -> None:
    """Heatmap of mean J&F over the scheme x length grid."""
    values = np.array([[rep.mean_jf for rep in row] for row in matrix])
    fig, ax = plt.subplots(figsize=(1.2 * len(spec.lengths) + 2, 0.8 * len(spec.schemes) + 1.5))
    im = ax.imshow(values, cmap="viridis", vmin=0.0, vmax=1.0, aspect="auto")
    ax.set_xticks(range(len(spec.lengths)), [str(v) for v in spec.lengths])
    ax.set_yticks(range(len(spec.schemes)), [SCHEME_LABELS[s] for s in spec.schemes])
    ax.set_xlabel("sub-video length")
    for r in range(values.shape[0]):
        for c in range(values.shape[1]):
            shade = "black" if values[r, c] > 0.6 else "white"
            ax.text(c, r, f"{values[r, c]:.4f}", ha="center", va="center",
                    color=shade, fontsize=8)
    fig.colorbar(im, ax=ax, label="mean J&F")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
