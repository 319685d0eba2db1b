"""Report figures rendered with matplotlib.

Output is byte-reproducible: the Agg backend, a fixed SVG hash salt, and
stripped date metadata keep identical inputs producing identical files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "cardiotriage"

import matplotlib.pyplot as plt

from .metrics import ConfusionMatrix


def _save(fig, path: str | Path) -> None:
    path = Path(path)
    if path.suffix.lower() == ".svg":
        fig.savefig(path, metadata={"Date": None})
    else:
        fig.savefig(path)
    plt.close(fig)


def confusion_heatmap(cm: ConfusionMatrix, path: str | Path) -> None:
    """2x2 heatmap of the confusion matrix with count annotations."""
    grid = [[cm.tn, cm.fp], [cm.fn, cm.tp]]
    peak = max(max(row) for row in grid)
    fig, ax = plt.subplots(figsize=(4.2, 3.6))
    im = ax.imshow(grid, cmap="Blues", vmin=0)
    for i in range(2):
        for j in range(2):
            color = "white" if peak > 0 and grid[i][j] > 0.6 * peak else "black"
            ax.text(j, i, str(grid[i][j]), ha="center", va="center", color=color, fontsize=14)
    ax.set_xticks([0, 1], ["low risk", "high risk"])
    ax.set_yticks([0, 1], ["low risk", "high risk"])
    ax.set_xlabel("predicted")
    ax.set_ylabel("actual")
    ax.set_title("Confusion matrix")
    fig.colorbar(im, ax=ax, shrink=0.85)
    fig.tight_layout()
    _save(fig, path)


def importance_bars(pairs: list[tuple[int, float]], path: str | Path) -> None:
    """Horizontal bar chart of (dimension, importance) pairs, best on top."""
    dims = [f"dim {d}" for d, _ in pairs]
    values = [v for _, v in pairs]
    fig, ax = plt.subplots(figsize=(6.0, 0.42 * max(len(pairs), 4) + 1.2))
    positions = range(len(pairs))
    ax.barh(positions, values, color="#2b6cb0")
    ax.set_yticks(list(positions), dims)
    ax.invert_yaxis()
    ax.set_xlabel("mean decrease in impurity")
    ax.set_title(f"Top {len(pairs)} embedding dimensions")
    fig.tight_layout()
    _save(fig, path)
