"""Figure rendering for the CLI report path.

Every figure is written next to the delimited output it illustrates.  The
Agg backend keeps rendering headless and deterministic.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .bounds import SweepRow
from .kernel import KernelProfile, RegionCheckReport, rho
from .measures import Box, DiscreteMeasure

_SAVE_KW = {"dpi": 150, "bbox_inches": "tight", "metadata": {"Software": None}}


def _atom_scatter(ax, measure: DiscreteMeasure, marker, label, color):
    if measure.is_empty:
        return
    sizes = 30.0 + 170.0 * np.abs(measure.amplitudes) / max(1e-12, np.abs(measure.amplitudes).max())
    style = (
        {"facecolors": "none", "edgecolors": color}
        if marker == "o"
        else {"color": color}
    )
    ax.scatter(
        measure.locations[:, 0],
        measure.locations[:, 1],
        s=sizes,
        marker=marker,
        label=label,
        linewidths=1.5,
        alpha=0.85,
        **style,
    )


def plot_measures(
    path,
    domain: Box,
    truth: DiscreteMeasure | None = None,
    linear: DiscreteMeasure | None = None,
    nonlinear: DiscreteMeasure | None = None,
    title: str = "",
) -> None:
    """Scatter plot of truth and estimates (first two coordinates); marker
    size scales with amplitude modulus."""
    fig, ax = plt.subplots(figsize=(6, 6))
    if truth is not None:
        _atom_scatter(ax, truth, "o", f"truth ({truth.n_atoms})", "tab:blue")
    if linear is not None:
        _atom_scatter(ax, linear, "x", f"linear estimate ({linear.n_atoms})", "tab:orange")
    if nonlinear is not None:
        _atom_scatter(ax, nonlinear, "+", f"nonlinear estimate ({nonlinear.n_atoms})", "tab:green")
    half = 0.5 * domain.side
    ax.set_xlim(-1.05 * half, 1.05 * half)
    ax.set_ylim(-1.05 * half, 1.05 * half)
    ax.axhline(0, color="0.9", lw=0.5)
    ax.axvline(0, color="0.9", lw=0.5)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_aspect("equal")
    if title:
        ax.set_title(title)
    ax.legend(loc="upper right", fontsize=8)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def plot_sweep(path, rows: list[SweepRow]) -> None:
    """Log-log curves of the empirical linearization error and the matching
    bound against the separation, one panel per wavenumber."""
    kappas = sorted({row.kappa for row in rows})
    fig, axes = plt.subplots(1, len(kappas), figsize=(4.2 * len(kappas), 3.6), squeeze=False)
    for ax, kappa in zip(axes[0], kappas):
        sub = sorted((r for r in rows if r.kappa == kappa), key=lambda r: r.delta)
        deltas = [r.delta for r in sub]
        ax.loglog(deltas, [r.empirical_mean for r in sub], "o-", label="empirical error")
        finite = [(r.delta, r.bound) for r in sub if np.isfinite(r.bound)]
        if finite:
            ax.loglog(*zip(*finite), "s--", label="bound")
        ax.set_title(f"kappa = {kappa:g}")
        ax.set_xlabel("separation")
        ax.set_ylabel("far-field l2 error")
        ax.legend(fontsize=8)
        ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def plot_kernel(path, profile: KernelProfile, report: RegionCheckReport) -> None:
    """Kernel profile rho(s) with the far-region level and near-region
    boundary marked."""
    s_far = 2.0 / np.sqrt(5.0)
    grid = np.linspace(1e-6, min(report.s_max, 40.0), 2000)
    vals = [rho(profile, float(s)) for s in grid]
    fig, ax = plt.subplots(figsize=(6.5, 3.8))
    ax.plot(grid, vals, label=f"rho(s), d = {profile.d}")
    ax.axhline(report.far_threshold, color="tab:red", ls="--", lw=1, label="far-region level 0.93")
    ax.axhline(-report.far_threshold, color="tab:red", ls="--", lw=1)
    ax.axvline(s_far, color="tab:gray", ls=":", lw=1, label="near/far boundary")
    ax.set_xlabel("s")
    ax.set_ylabel("rho")
    ax.set_title(
        f"near curvature min {report.min_near_curvature:.3f} (>= 0.6), "
        f"far max {report.max_far_value:.3f} (<= 0.93)"
    )
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def plot_observations(path, frequencies: np.ndarray, kappa: float) -> None:
    """Sampled frequencies inside the ball of radius 2 kappa (first two
    coordinates)."""
    fig, ax = plt.subplots(figsize=(4.8, 4.8))
    ax.scatter(frequencies[:, 0], frequencies[:, 1], s=14, alpha=0.8)
    circle = plt.Circle((0, 0), 2 * kappa, fill=False, color="tab:gray", ls="--")
    ax.add_patch(circle)
    lim = 2.2 * kappa
    ax.set_xlim(-lim, lim)
    ax.set_ylim(-lim, lim)
    ax.set_aspect("equal")
    ax.set_xlabel("omega_1")
    ax.set_ylabel("omega_2")
    ax.set_title(f"{frequencies.shape[0]} frequencies in B(0, 2 kappa)")
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
