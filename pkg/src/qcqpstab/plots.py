"""Figure rendering for scan and sweep outputs (written next to the CSV)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

VERDICT_COLORS = {
    "certified_tight": "#2a7e3b",
    "tight_but_degenerate": "#8bc34a",
    "gap_positive": "#c62828",
    "inconclusive": "#9e9e9e",
    "error": "#000000",
}


def plot_scan(header, rows, axes, path: str) -> None:
    """Verdict map over the scanned slice (grid image for 2 axes, strip for 1)."""
    verdict_col = header.index("verdict")
    ai = axes[0].index
    av = np.array([r[ai] for r in rows])
    verdicts = [r[verdict_col] for r in rows]
    colors = [VERDICT_COLORS.get(v, "#000000") for v in verdicts]

    fig, ax = plt.subplots(figsize=(7.0, 5.2))
    if len(axes) == 2:
        bi = axes[1].index
        bv = np.array([r[bi] for r in rows])
        ax.scatter(av, bv, c=colors, s=14, marker="s", linewidths=0)
        ax.set_xlabel(f"theta[{ai}]")
        ax.set_ylabel(f"theta[{bi}]")
        if "in_radius" in header:
            ir = header.index("in_radius")
            mask = np.array([bool(int(r[ir])) for r in rows])
            if mask.any():
                ax.scatter(av[mask], bv[mask], facecolors="none", edgecolors="#1a237e",
                           s=26, linewidths=0.5, label="guaranteed ball")
                ax.legend(loc="best", fontsize=8)
    else:
        gap_col = header.index("gap_rel")
        gaps = np.array([r[gap_col] for r in rows])
        ax.scatter(av, gaps, c=colors, s=12)
        ax.set_xlabel(f"theta[{ai}]")
        ax.set_ylabel("relative gap")
        ax.set_yscale("symlog", linthresh=1e-9)
    handles = [plt.Line2D([], [], marker="s", linestyle="", color=c, label=v)
               for v, c in VERDICT_COLORS.items() if v in set(verdicts)]
    if handles:
        ax.legend(handles=handles, loc="upper right", fontsize=8)
    ax.set_title("tightness verdicts over the parameter slice")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_sweep(header, rows, path: str) -> None:
    """Tight fraction and mean relative gap against the noise level."""
    sigma = np.array([r[0] for r in rows])
    tight = np.array([r[1] for r in rows])
    gaps = np.array([r[2] for r in rows])

    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    ax.plot(sigma, tight, "o-", color="#2a7e3b", label="tight fraction")
    ax.set_xlabel("noise level sigma")
    ax.set_ylabel("fraction certified tight")
    ax.set_ylim(-0.05, 1.05)
    ax2 = ax.twinx()
    ax2.plot(sigma, gaps, "s--", color="#c62828", label="mean relative gap")
    ax2.set_ylabel("mean relative gap")
    lines, labels = ax.get_legend_handles_labels()
    lines2, labels2 = ax2.get_legend_handles_labels()
    ax.legend(lines + lines2, labels + labels2, loc="center left", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
