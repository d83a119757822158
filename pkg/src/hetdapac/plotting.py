"""Rate against load-ratio figure for the metrics table."""
from __future__ import annotations

import math
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .metrics import SchemeMetrics, timeshare_load_ratio, timeshare_rate  # noqa: E402


def tradeoff_figure(K: int, D: int, points: Sequence[SchemeMetrics], path: str | Path, steps: int = 200):
    """Plot the time-sharing curve for ``(K, D)`` with scheme operating points on top.

    Points with an unbounded load ratio are drawn as horizontal reference
    lines since they have no finite x coordinate.
    """
    fig, ax = plt.subplots(figsize=(6, 4))
    lams = [Fraction(i, steps) for i in range(steps)]
    ax.plot([float(timeshare_load_ratio(K, D, lam)) for lam in lams],
            [float(timeshare_rate(K, lam)) for lam in lams], color="0.4", lw=1.2, label="time-sharing")
    markers = {"hetdapac": "o", "d3": "s", "timeshare": "^", "dapac": "x"}
    for m in points:
        if m.load_ratio == math.inf:
            ax.axhline(float(m.rate), ls=":", lw=1, color="tab:red", label=f"{m.scheme} (no central download)")
            continue
        label = m.scheme if m.lam is None else f"{m.scheme} λ={m.lam}"
        ax.plot(float(m.load_ratio), float(m.rate), markers.get(m.scheme, "d"), ms=7, label=label)
    ax.set_xscale("log")
    ax.set_xlabel("load ratio (dedicated / central download)")
    ax.set_ylabel("rate")
    ax.set_title(f"K = {K}, D = {D}")
    ax.grid(alpha=0.3, which="both")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
