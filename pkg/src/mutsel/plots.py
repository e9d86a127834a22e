"""Figure rendering for the report path (PNG files next to the CSVs).

Uses the Agg backend so runs work headless; every function takes explicit
data and a target path and returns the path. Plotting failures are the
caller's concern to downgrade (figures are a convenience, CSV is the
contract).
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

_DPI = 130


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def plot_fields(curves, path, title: str, ylabel: str = "value"):
    """curves: iterable of (label, Field); 1d plots lines, 2d plots the first
    field as an image."""
    curves = list(curves)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    grid = curves[0][1].grid
    if grid.dim == 1:
        x = grid.axis()
        for label, f in curves:
            ax.plot(x, f.values, label=label, lw=1.4)
        ax.set_xlabel("x")
        ax.legend(frameon=False)
    else:
        label, f = curves[0]
        im = ax.imshow(f.reshaped(), origin="lower",
                       extent=(-grid.radius, grid.radius,
                               -grid.radius, grid.radius))
        fig.colorbar(im, ax=ax, label=label)
        ax.set_xlabel("x")
        ax.set_ylabel("y")
    ax.set_title(title)
    if grid.dim == 1:
        ax.set_ylabel(ylabel)
    return _finish(fig, path)


def plot_trace(trace, path, title: str):
    """Distance on a log axis plus mass and mean fitness on a second panel."""
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6.4, 6.0), sharex=True)
    d = np.asarray(trace.distance)
    ok = np.isfinite(d) & (d > 0)
    if np.any(ok):
        ax1.semilogy(trace.times[ok], d[ok], lw=1.4)
    ax1.set_ylabel(f"distance ({trace.distance_norm})")
    ax1.set_title(title)
    ax2.plot(trace.times, trace.mass, lw=1.2, label="mass")
    ax2.plot(trace.times, trace.mean_fitness, lw=1.2, label="mean fitness")
    ax2.set_xlabel("t")
    ax2.legend(frameon=False)
    return _finish(fig, path)


def plot_profile(xs, ys, path, xlabel: str, ylabel: str, title: str,
                 hlines=(), marks=()):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(xs, ys, lw=1.4)
    for level, label in hlines:
        ax.axhline(level, color="crimson", ls="--", lw=1.0)
        ax.annotate(label, (xs[0], level), textcoords="offset points",
                    xytext=(4, 4), fontsize=8, color="crimson")
    for x, y in marks:
        ax.plot([x], [y], "o", ms=5, color="black")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    return _finish(fig, path)


def plot_sweep(rows, path, xlabel: str, series, title: str):
    """rows: (x, y1, y2, ...); series: list of labels matching the y columns."""
    rows = list(rows)
    xs = [r[0] for r in rows]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for idx, label in enumerate(series, start=1):
        ax.plot(xs, [r[idx] for r in rows], "o-", lw=1.2, ms=4, label=label)
    ax.set_xlabel(xlabel)
    ax.legend(frameon=False)
    ax.set_title(title)
    return _finish(fig, path)
