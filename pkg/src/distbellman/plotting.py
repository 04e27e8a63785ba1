"""Figures written next to the delimited reports.

Uses the object-oriented matplotlib API on the Agg canvas, so nothing here
touches pyplot global state or needs a display.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

FIGSIZE = (6.0, 3.8)
DPI = 120


def _new_axes():
    fig = Figure(figsize=FIGSIZE, dpi=DPI)
    FigureCanvasAgg(fig)
    ax = fig.add_subplot(1, 1, 1)
    ax.spines["right"].set_visible(False)
    ax.spines["top"].set_visible(False)
    return fig, ax


def _save(fig: Figure, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # no version stamp, so repeated runs are byte-identical
    fig.savefig(path, format="png", metadata={"Software": None})
    return path


def _step_cdf(dist):
    values, probs = dist.atoms()
    return values, np.cumsum(probs)


def plot_cdfs(vector, labels, path, title: str = "return distributions") -> Path:
    """Step CDFs of every component of a return vector."""
    fig, ax = _new_axes()
    for dist, lab in zip(vector, labels):
        x, F = _step_cdf(dist)
        ax.step(x, F, where="post", lw=1.2, label=str(lab))
    ax.set_xlabel("return")
    ax.set_ylabel("CDF")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(title)
    ax.legend(frameon=False, fontsize=8)
    return _save(fig, path)


def plot_gap_history(gaps, path, gamma: float | None = None) -> Path:
    """Sup-W1 gap between successive iterates on a log scale, with the gamma^k reference slope."""
    fig, ax = _new_axes()
    gaps = np.asarray(gaps, dtype=float)
    k = np.arange(1, gaps.size + 1)
    shown = gaps > 0
    ax.semilogy(k[shown], gaps[shown], marker=".", lw=1.0, label="gap")
    if gamma is not None and shown.any():
        first = np.flatnonzero(shown)[0]
        ax.semilogy(k, gaps[first] * gamma ** (k - k[first]), ls="--", lw=0.8, color="0.4", label="gamma^k")
    ax.set_xlabel("iteration")
    ax.set_ylabel("sup W1 gap")
    ax.legend(frameon=False, fontsize=8)
    return _save(fig, path)


def plot_tail(samples, path, alpha: float | None = None, const: float | None = None) -> Path:
    """Empirical right tail on log-log axes, with the predicted const * x^-alpha line if given."""
    fig, ax = _new_axes()
    x = np.sort(np.asarray(samples, dtype=float))
    x = x[np.isfinite(x) & (x > 0)]
    n_total = np.asarray(samples).size
    if x.size:
        surv = (x.size - np.arange(x.size)) / n_total
        ax.loglog(x, surv, lw=1.0, label="empirical P[G > x]")
        if alpha is not None and const is not None and const > 0:
            xs = np.geomspace(np.quantile(x, 0.5), x[-1], 50)
            ax.loglog(xs, const * xs**-alpha, ls="--", lw=0.8, color="0.3", label="predicted")
    ax.set_xlabel("x")
    ax.set_ylabel("tail probability")
    if x.size:
        ax.legend(frameon=False, fontsize=8)
    return _save(fig, path)
