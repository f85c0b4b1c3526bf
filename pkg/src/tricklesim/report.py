"""Headless figure rendering for preset outputs.

Each preset writes its CSV tables and, unless plotting is disabled, a PNG
next to them showing the same comparison.  The CSVs remain the interchange
format; the figures are a convenience view.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "render_rate_sweep",
    "render_distribution",
    "render_grid_sweep",
    "render_lemma1",
]

_MARKERS = ["o", "s", "^", "d", "v", "*"]


def render_rate_sweep(rows, png_path, eta: float) -> str:
    """Mean broadcasts per interval vs cell size, simulation dots over
    analytic curves, one color per k."""
    ks = sorted({r["k"] for r in rows})
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for idx, k in enumerate(ks):
        pts = sorted((r for r in rows if r["k"] == k), key=lambda r: r["n"])
        ns = [r["n"] for r in pts]
        color = f"C{idx}"
        ax.plot(ns, [r["analytic_mean"] for r in pts], "-", color=color, lw=1.2)
        ax.plot(ns, [r["sim_mean"] for r in pts], _MARKERS[idx % len(_MARKERS)],
                color=color, ms=4.5, ls="none", label=f"k={k}")
    ax.set_xlabel("cell size n")
    ax.set_ylabel("mean broadcasts per interval")
    ax.set_title(f"simulation (markers) vs analytic (lines), eta={eta:g}")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(png_path, dpi=130)
    plt.close(fig)
    return str(png_path)


def render_distribution(bin_mids, bin_density, table, png_path, title: str) -> str:
    """Empirical gap histogram with the analytic density curve overlaid."""
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    if len(bin_mids) > 1:
        width = bin_mids[1] - bin_mids[0]
        ax.bar(bin_mids, bin_density, width=width * 0.98, color="C0",
               alpha=0.45, label="simulation")
    ax.plot(table.abscissae, table.values, "C1-", lw=1.5, label="analytic")
    ax.set_xlabel("inter-transmission time")
    ax.set_ylabel("density")
    ax.set_title(title)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(png_path, dpi=130)
    plt.close(fig)
    return str(png_path)


def render_grid_sweep(rows, png_path, eta: float) -> str:
    """Theta ratio (simulation over independent-cells estimate) vs range."""
    ks = sorted({r["k"] for r in rows})
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for idx, k in enumerate(ks):
        pts = sorted((r for r in rows if r["k"] == k), key=lambda r: r["radius"])
        ax.plot([r["radius"] for r in pts], [r["ratio"] for r in pts],
                _MARKERS[idx % len(_MARKERS)] + "-", color=f"C{idx}",
                ms=4.5, lw=1.0, label=f"k={k}")
    ax.axhline(1.0, color="0.4", lw=0.8, ls=":")
    ax.set_xlabel("transmission range R")
    ax.set_ylabel("simulated / estimated broadcasts")
    ax.set_title(f"multi-cell approximation quality, eta={eta:g}")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(png_path, dpi=130)
    plt.close(fig)
    return str(png_path)


def render_lemma1(rows, png_path) -> str:
    """KS of dilated attempt interarrivals vs Exp(1), per cell size."""
    etas = sorted({r["eta"] for r in rows})
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for idx, eta in enumerate(etas):
        pts = [r for r in rows if r["eta"] == eta]
        ns = np.array([r["n"] for r in pts], dtype=float)
        ks_vals = np.array([r["ks"] for r in pts])
        jitter = 1.0 + 0.03 * (idx - (len(etas) - 1) / 2.0)
        ax.plot(ns * jitter, ks_vals, _MARKERS[idx], color=f"C{idx}",
                ms=4.0, ls="none", alpha=0.7, label=f"eta={eta:g}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("cell size n")
    ax.set_ylabel("KS distance to Exp(1)")
    ax.set_title("attempt process vs unit-rate Poisson (per seed)")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(png_path, dpi=130)
    plt.close(fig)
    return str(png_path)
