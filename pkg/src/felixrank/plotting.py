"""Figures for sensitivity sweeps, written next to the CSV output."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

COLORS = {"powerlaw": "#7f9fdf", "lognormal": "#df7f7f",
          "normal": "#e8b04a", "uniform": "#5fbfa8"}
LABELS = {"powerlaw": "Power-law", "lognormal": "Log-normal",
          "normal": "Normal", "uniform": "Uniform"}


def plot_settings(fontsize=9):
    plt.rc("font", size=fontsize)
    plt.rc("axes", labelsize=fontsize, titlesize=fontsize)
    plt.rc("legend", fontsize=fontsize - 1)
    plt.rc("lines", linewidth=1.5)
    # byte-stable PNG/SVG output
    plt.rc("svg", hashsalt="felixrank")


def plot_sensitivity(rows, path, xlabel="Number of items"):
    """Relative reduction (%) against ``x``, one line per feature distribution.

    ``rows`` are SensitivityRow objects or dicts with the same keys.
    """
    plot_settings()
    series: dict = {}
    for r in rows:
        r = r if isinstance(r, dict) else r.__dict__
        series.setdefault(r["distribution"], []).append((r["x"], r["relative_reduction_pct"]))

    fig, ax = plt.subplots(figsize=(3.4, 2.4))
    for kind, pts in series.items():
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", markersize=3,
                color=COLORS.get(kind), label=LABELS.get(kind, kind))
    ax.set_xlabel(xlabel)
    ax.set_ylabel(r"$P(u\mid\pi)$ improv. (%)")
    ax.set_ylim(-102, 2)
    ax.axhline(0, color="0.7", linewidth=0.6)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150, metadata={"Software": None})
    plt.close(fig)
    return path
