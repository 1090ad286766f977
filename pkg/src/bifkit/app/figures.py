"""Matplotlib rendering of bifurcation diagrams and sweep diagnostics."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

matplotlib.rcParams.update({
    "figure.dpi": 120,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.2,
    "legend.fontsize": 8,
})

_STYLE = {
    "EQ": dict(color="0.6", ls=":",),
    "LP": dict(color="black", ls="-"),
    "H": dict(color="tab:blue", ls="--"),
    "LPC": dict(color="tab:red", ls="-"),
    "NS": dict(color="tab:green", ls="-"),
}

_MARKER = {"GH": "o", "ZH": "s", "HH": "D", "BT": "^", "CP": "v"}


def render_diagram(records, codim2_points, path, param_names=("alpha1", "alpha2")):
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    seen = set()
    for rec in records:
        style = _STYLE.get(rec.kind, {})
        label = rec.kind if rec.kind not in seen else None
        seen.add(rec.kind)
        ax.plot(rec.rows[:, 0], rec.rows[:, 1], label=label, **style)
    seen_marks = set()
    for p in codim2_points:
        mk = _MARKER.get(p.kind, "x")
        label = p.kind if p.kind not in seen_marks else None
        seen_marks.add(p.kind)
        ax.plot([p.alpha[0]], [p.alpha[1]], mk, color="black", ms=6,
                mfc="white", label=label)
        ax.annotate(p.kind, (p.alpha[0], p.alpha[1]), textcoords="offset points",
                    xytext=(4, 4), fontsize=7)
    ax.set_xlabel(param_names[0])
    ax.set_ylabel(param_names[1])
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_sweep(rows, path, title=""):
    """Log-log plot of first-step residual and predicted-to-corrected distance."""
    rows = [(e, R, d) for e, R, d in rows]
    eps = np.array([r[0] for r in rows])
    R = np.array([r[1] for r in rows], dtype=float)
    dist = np.array([np.nan if r[2] is None else r[2] for r in rows], dtype=float)
    fig, axes = plt.subplots(1, 2, figsize=(8.4, 3.6))
    axes[0].loglog(eps, R, "o-", ms=3)
    axes[0].set_xlabel("amplitude")
    axes[0].set_ylabel("first Newton residual")
    ok = np.isfinite(dist)
    axes[1].loglog(eps[ok], dist[ok], "s-", ms=3, color="tab:red")
    axes[1].set_xlabel("amplitude")
    axes[1].set_ylabel("predicted-to-corrected distance")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
