"""Static SVG figures. Requires matplotlib."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed metadata keeps repeated runs byte-identical
_SVG_META = {"Date": None}


def _save(fig, path):
    plt.rcParams["svg.hashsalt"] = "cutcell-xdiff"
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)


def profile_svg(path, state):
    x = state.mesh.centers()
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for i, ci in enumerate(state.c):
        ax.plot(x, ci, label=f"$c_{i + 1}$")
    ax.axvline(state.X, color="k", lw=0.8, ls="--")
    ax.set_xlim(0, 1)
    ax.set_xlabel("x")
    ax.set_title(f"t = {state.t:g}")
    ax.legend()
    _save(fig, path)


def longtime_svg(path, t, H_relative, X_relative):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.semilogy(t, np.where(H_relative > 0, H_relative, np.nan), label=r"$H - H_\infty$")
    ax.semilogy(t, np.where(X_relative > 0, X_relative, np.nan), label=r"$X_\infty - X$")
    ax.set_xlabel("t")
    ax.legend()
    _save(fig, path)


def convergence_svg(path, reports):
    dx = np.array([r.dx for r in reports])
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.loglog(dx, [r.L1_total for r in reports], "o-", label="concentrations")
    ax.loglog(dx, [r.L1_time_X for r in reports], "s-", label="interface")
    ax.loglog(dx, dx * reports[-1].L1_total / dx[-1], "k:", label="order 1")
    ax.set_xlabel(r"$\Delta x$")
    ax.legend()
    _save(fig, path)
