"""Figures for contexts and codensity curves.

Uses the non-interactive Agg backend; every function writes a file and
returns its path.  Context images follow the usual convention for these
matrices: a 1 is a white pixel, a 0 is black.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .context import FormalContext  # noqa: E402
from .formulas import conjectured_limit, rho_cyclic  # noqa: E402

__all__ = ["plot_context", "plot_codensity_limits", "context_image"]


def context_image(ctx: FormalContext) -> np.ndarray:
    """Grayscale array: 1.0 where the incidence holds, 0.0 elsewhere."""
    return ctx.incidence.astype(float)


def plot_context(ctx: FormalContext, path, title: str | None = None, dpi: int = 150) -> Path:
    """Render the incidence matrix as a black/white image."""
    path = Path(path)
    rows, cols = ctx.shape
    side = max(2.0, min(10.0, max(rows, cols) / 12))
    fig, ax = plt.subplots(figsize=(side * cols / max(rows, cols, 1), side * rows / max(rows, cols, 1)))
    ax.imshow(context_image(ctx), cmap="gray", vmin=0, vmax=1, interpolation="nearest")
    ax.set_xticks([])
    ax.set_yticks([])
    if title:
        ax.set_title(title, fontsize=9)
    fig.savefig(path, dpi=dpi, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_codensity_limits(path, k_max: int = 5, n_max: int = 60, dpi: int = 150) -> Path:
    """Codensity of ``[n]^k`` against n, with the conjectured limit drawn for each k."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6, 4))
    ns = np.arange(1, n_max + 1)
    for k in range(1, k_max + 1):
        vals = [float(rho_cyclic([int(n)] * k)) for n in ns]
        (line,) = ax.plot(ns, vals, lw=1.2, label=f"k = {k}")
        ax.axhline(float(conjectured_limit(k)), color=line.get_color(), ls=":", lw=0.8)
    ax.set_yscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("codensity")
    ax.legend(fontsize=8, frameon=False)
    fig.savefig(path, dpi=dpi, bbox_inches="tight")
    plt.close(fig)
    return path
