"""Static SVG line plots for CLI reports.

Output is byte-stable: no timestamp in the metadata and a fixed hash salt for
element ids.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

RC = {
    "svg.hashsalt": "proxreg",
    "svg.fonttype": "none",
    "figure.figsize": (5.0, 3.2),
    "font.size": 9,
    "axes.linewidth": 0.6,
    "lines.linewidth": 1.2,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def plot_traces(path, series: dict, xlabel="iteration", ylabel="", title=None, logy=False):
    """One line per entry of ``series`` (name -> sequence of values)."""
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        for name, ys in series.items():
            ys = np.asarray(ys, dtype=float)
            ax.plot(np.arange(len(ys)), ys, marker="o", markersize=2.5, label=name)
        if logy:
            ax.set_yscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if len(series) > 1:
            ax.legend(frameon=False)
        fig.tight_layout()
        return _save(fig, path)


def plot_residuals(path, times, values, tol=None, title=None):
    """Per-node residuals against the curve parameter; skipped nodes are gaps."""
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        vals = np.asarray(values, dtype=float)
        floor = np.where(np.isnan(vals), np.nan, np.maximum(vals, 1e-17))
        ax.semilogy(np.asarray(times, float), floor, marker=".", markersize=3, linestyle="none")
        if tol is not None:
            ax.axhline(tol, color="0.4", linestyle="--", linewidth=0.8, label=f"tol {tol:.1e}")
            ax.legend(frameon=False)
        ax.set_xlabel("t")
        ax.set_ylabel("residual")
        if title:
            ax.set_title(title)
        fig.tight_layout()
        return _save(fig, path)
