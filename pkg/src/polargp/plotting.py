"""Matplotlib figures for simulation results and rate regions."""

from __future__ import annotations

import math
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .harness import ResultRow  # noqa: E402


def plot_fer_curves(rows: Sequence[ResultRow], path, limits: Optional[dict] = None, title: str = ""):
    """Frame error rate against rate, one curve per receiver, with 95% bars.

    ``limits`` maps receiver -> a rate limit drawn as a vertical dashed line.
    Infeasible points (NaN) are left out.
    """
    fig, ax = plt.subplots(figsize=(6, 4))
    for m in sorted({r.receiver for r in rows}):
        pts = sorted((r.rate, r.fer, r.ci95) for r in rows if r.receiver == m and not math.isnan(r.fer))
        if not pts:
            continue
        rate, fer, ci = zip(*pts)
        line = ax.errorbar(rate, fer, yerr=ci, marker="o", capsize=3, label=f"receiver {m}")
        if limits and m in limits:
            ax.axvline(limits[m], ls="--", lw=1, color=line[0].get_color())
    ax.set_xlabel("rate R (bits per channel use)")
    ax.set_ylabel("frame error rate")
    ax.set_ylim(-0.02, 1.02)
    ax.grid(True, alpha=0.3)
    if ax.get_legend_handles_labels()[0]:
        ax.legend()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_region_corner(r1: float, r2: float, path, title: str = ""):
    """The rectangle {R1 <= r1, R2 <= r2} spanned by one achievable corner."""
    fig, ax = plt.subplots(figsize=(4.5, 4))
    ax.fill([0, r1, r1, 0], [0, 0, r2, r2], alpha=0.25)
    ax.plot([r1], [r2], "o")
    ax.annotate(f"({r1:.3g}, {r2:.3g})", (r1, r2), textcoords="offset points", xytext=(-10, 8), ha="right")
    top = max(r1, r2, 1e-3) * 1.15
    ax.set_xlim(0, top)
    ax.set_ylim(0, top)
    ax.set_xlabel("R1")
    ax.set_ylabel("R2")
    ax.grid(True, alpha=0.3)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
