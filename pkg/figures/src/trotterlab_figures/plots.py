"""Figure builders for each sweep output kind.

Rendering is batch-only and deterministic: fixed figure sizes, fixed DPI,
no timestamps, inputs never modified.  Each builder accepts the parsed
columns plus an optional auxiliary report (resonance catalog for error
curves, fit report for square-commutator plots).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

DPI = 150


@dataclass
class FigureSpec:
    """What to render: input path(s), kind, output path, style knobs."""

    kind: str
    source: str
    out: str
    aux: str | None = None
    colormap: str = "viridis"
    guide_alphas: tuple[float, ...] = (math.pi, math.pi / 2)
    marker_size: float = 2.0


def _grid_panel(ax, tau, s, values, label, cmap):
    taus = np.unique(tau)
    svals = np.unique(s)
    grid = np.full((svals.size, taus.size), np.nan)
    ti = np.searchsorted(taus, tau)
    si = np.searchsorted(svals, s)
    grid[si, ti] = values
    mesh = ax.pcolormesh(taus, svals, grid, cmap=cmap, shading="nearest")
    ax.set_xlabel(r"$\tau$")
    ax.set_ylabel("s")
    ax.set_title(label)
    return mesh


def build_heatmap(cols, spec: FigureSpec, report=None):
    fig, axes = plt.subplots(1, 2, figsize=(9.0, 3.6), dpi=DPI)
    if cols["tau"].size:
        for ax, key, label in (
            (axes[0], "dissimilarity", "eigenbasis dissimilarity"),
            (axes[1], "lyapunov", "largest Lyapunov exponent"),
        ):
            mesh = _grid_panel(ax, cols["tau"], cols["s"], cols[key], label, spec.colormap)
            fig.colorbar(mesh, ax=ax)
        # resonance guide curves s = 1 - alpha/tau
        taus = np.linspace(cols["tau"].min(), cols["tau"].max(), 400)
        smin, smax = cols["s"].min(), cols["s"].max()
        for alpha, style in zip(spec.guide_alphas, ("--", ":")):
            with np.errstate(divide="ignore"):
                curve = 1.0 - alpha / taus
            keep = (curve >= smin) & (curve <= smax)
            axes[0].plot(taus[keep], curve[keep], style, color="black", lw=1.0)
    else:
        for ax in axes:
            ax.set_xlabel(r"$\tau$")
            ax.set_ylabel("s")
    fig.tight_layout()
    return fig


def _masked_runs(tau, masked):
    runs = []
    start = None
    for i in range(tau.size):
        if masked[i] and start is None:
            start = tau[i]
        if not masked[i] and start is not None:
            runs.append((start, tau[i - 1]))
            start = None
    if start is not None:
        runs.append((start, tau[-1]))
    return runs


def build_error_curve(cols, spec: FigureSpec, report=None):
    fig, ax = plt.subplots(figsize=(6.4, 3.6), dpi=DPI)
    tau = cols["tau"]
    if tau.size:
        ax.plot(tau, cols["error_exact"], "-", color="C0", lw=1.2, label="exact")
        ax.plot(tau, cols["error_perturbative"], ":", color="C1", lw=1.4, label="first order")
        for lo, hi in _masked_runs(tau, cols["masked"] > 0.5):
            ax.axvspan(lo, hi, color="0.85", zorder=0)
        top = 1.2 * max(cols["error_exact"].max(), 1e-6)
        ax.set_ylim(0.0, top)
        ax.set_xlim(tau.min(), tau.max())
    if report:
        for entry in report:
            ax.axvline(entry["tau_star"], ls="--", color="0.3", lw=0.9)
    ax.set_xlabel(r"$\tau$")
    ax.set_ylabel(r"long-time $\langle J_z\rangle$ error / J")
    if tau.size:
        ax.legend(loc="upper left")
    fig.tight_layout()
    return fig


def build_portrait(cols, spec: FigureSpec, report=None):
    fig, (left, right) = plt.subplots(1, 2, figsize=(8.6, 4.0), dpi=DPI)
    ids = cols["trajectory_id"]
    if ids.size:
        for tid in np.unique(ids):
            sel = ids == tid
            x, y, z = cols["X"][sel], cols["Y"][sel], cols["Z"][sel]
            color = f"C{int(tid) % 10}"
            left.plot(x, z, ".", ms=spec.marker_size, color=color)
            phi = np.arctan2(y, x)
            theta = np.arccos(np.clip(z, -1.0, 1.0))
            right.plot(phi, theta, ".", ms=spec.marker_size, color=color)
    left.set_xlim(-1.05, 1.05)
    left.set_ylim(-1.05, 1.05)
    left.set_aspect("equal")
    left.set_xlabel("X")
    left.set_ylabel("Z")
    right.set_xlim(-math.pi, math.pi)
    right.set_ylim(math.pi, 0.0)
    right.set_xlabel(r"$\Phi$")
    right.set_ylabel(r"$\Theta$")
    fig.tight_layout()
    return fig


def build_otoc(cols, spec: FigureSpec, report=None):
    fig, ax = plt.subplots(figsize=(6.4, 3.6), dpi=DPI)
    offsets = np.unique(cols["delta_tau"]) if cols["delta_tau"].size else []
    fits = {}
    if report:
        fits = {round(e["delta_tau"], 12): e for e in report}
    for i, dt in enumerate(offsets):
        sel = cols["delta_tau"] == dt
        steps = cols["step"][sel]
        c = cols["c"][sel]
        label = rf"$\Delta\tau={dt:g}$"
        entry = fits.get(round(float(dt), 12))
        if entry and entry.get("fitted") is not None:
            label += rf", fit {entry['fitted']:.3f} / rate {entry['analytic']:.3f}"
        keep = c > 0
        ax.semilogy(steps[keep], c[keep], "-", color=f"C{i % 10}", lw=1.0, label=label)
        if entry and entry.get("fit_window"):
            lo, hi = entry["fit_window"]
            win = (steps >= lo) & (steps <= hi) & keep
            ax.semilogy(steps[win], c[win], "-", color=f"C{i % 10}", lw=2.5, alpha=0.5)
    ax.set_xlabel("step")
    ax.set_ylabel("square commutator  c")
    if len(offsets):
        ax.legend(fontsize=7)
    fig.tight_layout()
    return fig


BUILDERS = {
    "heatmap": build_heatmap,
    "error-curve": build_error_curve,
    "portrait": build_portrait,
    "otoc": build_otoc,
}


def build_figure(spec: FigureSpec, cols, report=None):
    return BUILDERS[spec.kind](cols, spec, report)


def render(spec: FigureSpec, cols, report=None) -> None:
    """Write the raster image; byte-stable for identical inputs and style."""
    fig = build_figure(spec, cols, report)
    try:
        fig.savefig(spec.out, dpi=DPI, metadata={"Software": None})
    finally:
        plt.close(fig)
