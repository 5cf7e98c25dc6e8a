"""Figure rendering for the CLI report paths.

Renders regret curves and sweep heatmaps to image files next to the CSV
output.  Uses the Agg backend so runs work headless.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from . import analytics
from .harness import RegretCurve, SweepResult

__all__ = ["regret_figure", "sweep_figure"]

_FIGSIZE = (7.0, 4.5)


def regret_figure(
    curves: dict[str, RegretCurve],
    path: str | Path,
    title: str | None = None,
) -> Path:
    """Cumulative regret vs. round, one line per algorithm, +-1 std band."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    rounds = None
    for name, curve in curves.items():
        rounds = np.arange(1, curve.mean.shape[0] + 1)
        ax.plot(rounds, curve.mean, label=name, linewidth=1.5)
        ax.fill_between(rounds, curve.mean - curve.std, curve.mean + curve.std, alpha=0.15)
    ax.set_xlabel("round")
    ax.set_ylabel("cumulative regret")
    if title:
        ax.set_title(title)
    ax.legend(loc="upper left", fontsize=9)
    ax.grid(True, alpha=0.3)
    if rounds is not None:
        ax.set_xlim(1, rounds[-1])
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def sweep_figure(result: SweepResult, path: str | Path) -> Path:
    """Regret heatmap over the (p_c, p_f) grid with the boundary overlay."""
    path = Path(path)
    xs = sorted({c.p_c for c in result.cells})
    ys = sorted({c.p_f for c in result.cells})
    grid = np.full((len(ys), len(xs)), np.nan)
    xi = {v: i for i, v in enumerate(xs)}
    yi = {v: i for i, v in enumerate(ys)}
    for c in result.cells:
        grid[yi[c.p_f], xi[c.p_c]] = c.regret_mean

    fig, ax = plt.subplots(figsize=_FIGSIZE)
    mesh = ax.pcolormesh(xs, ys, grid, shading="nearest", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label=f"regret at T={result.config.horizon}")
    bx = np.linspace(min(xs), max(xs), 256)
    by = [analytics.boundary(x, result.config.goal) for x in bx]
    ax.plot(bx, by, color="black", linewidth=2.0, label="region boundary")
    ax.set_xlabel("walk up-move probability")
    ax.set_ylabel("jump success probability")
    ax.set_ylim(min(ys) - 0.05, max(ys) + 0.05)
    ax.legend(loc="upper left", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
