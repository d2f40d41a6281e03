"""Figure rendering for the report path.

Each CLI report command drops a figure next to its delimited output.
All figures render through the Agg backend so the toolkit works
headless; functions take data already computed elsewhere and return the
written path.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .geometry import distance_profile, velocity_profile

_DPI = 150


def _finish(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_series(path, series, geom, kind_label: str) -> Path:
    """Distance, velocity and effective field over one modulation period."""
    t_ms = series.times * 1e3
    fig, axes = plt.subplots(3, 1, figsize=(6, 7), sharex=True)
    axes[0].plot(t_ms, distance_profile(geom.kinematics, series.times) * 1e6, "k-")
    axes[0].set_ylabel(r"d(t) ($\mu$m)")
    axes[1].plot(t_ms, velocity_profile(geom.kinematics, series.times) * 1e3, "b-")
    axes[1].set_ylabel("v(t) (mm/s)")
    axes[2].errorbar(t_ms, series.values * 1e12, yerr=series.errors * 1e12,
                     fmt="r.-", ms=3, lw=1, ecolor="0.6", capsize=0)
    axes[2].set_ylabel(f"$B_{{{kind_label}}}$ (pT)")
    axes[2].set_xlabel("t (ms)")
    for ax in axes:
        ax.grid(alpha=0.3)
    fig.suptitle(f"Modulated effective field, {kind_label}")
    return _finish(fig, path)


def plot_spectrum(path, coeffs, kind_label: str) -> Path:
    """Harmonic coefficients as paired stem plots."""
    n = np.arange(1, coeffs.n_max + 1)
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    width = 0.18
    ax.bar(n - width, coeffs.a * 1e12, 2 * width, yerr=coeffs.a_err * 1e12,
           label=r"$a^{(n)}$ (sin)", color="tab:red", capsize=3)
    ax.bar(n + width, coeffs.b * 1e12, 2 * width, yerr=coeffs.b_err * 1e12,
           label=r"$b^{(n)}$ (cos)", color="tab:blue", capsize=3)
    ax.set_xticks(n)
    ax.set_xlabel("harmonic n")
    ax.set_ylabel("coefficient (pT)")
    ax.legend()
    ax.grid(alpha=0.3)
    ax.set_title(f"Harmonic content, {kind_label}")
    return _finish(fig, path)


def plot_map(path, xs, ys, field_map) -> Path:
    """Axis-projected diamagnetic field over the slab plane."""
    fig, ax = plt.subplots(figsize=(5.4, 4.4))
    scale = np.nanmax(np.abs(field_map)) * 1e12
    mesh = ax.pcolormesh(
        xs * 1e6, ys * 1e6, field_map.T * 1e12,
        cmap="RdBu_r", vmin=-scale, vmax=scale, shading="auto",
    )
    fig.colorbar(mesh, ax=ax, label=r"$B_{\parallel}$ (pT)")
    ax.set_xlabel(r"x ($\mu$m)")
    ax.set_ylabel(r"y ($\mu$m)")
    ax.set_title("Diamagnetic field projected on the sensor axis")
    return _finish(fig, path)


def plot_histograms(path, result) -> Path:
    """Blockwise channel histograms with Gaussian overlays."""
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.6))
    for ax, counts, mean, label, color in (
        (axes[0], result.counts_av, result.b_av, r"$B_{AV}$", "tab:red"),
        (axes[1], result.counts_sp, result.b_sp, r"$B_{SP}$", "tab:blue"),
    ):
        centers_pt = result.bin_centers * 1e12
        ax.step(centers_pt, counts, where="mid", color=color, lw=1)
        if counts.sum() > 0 and result.block_sigma > 0:
            width = np.diff(result.bin_centers).mean()
            gauss = counts.sum() * width / (
                np.sqrt(2 * np.pi) * result.block_sigma
            ) * np.exp(-0.5 * ((result.bin_centers - mean) / result.block_sigma) ** 2)
            ax.plot(centers_pt, gauss, "k-", lw=1, alpha=0.7)
        ax.set_xlabel(f"{label} (pT)")
        ax.set_ylabel("blocks")
        ax.grid(alpha=0.3)
    fig.suptitle(f"{result.block_count} demodulation blocks")
    return _finish(fig, path)


def plot_curve(path, curve, kind_label: str) -> Path:
    """Exclusion curve vs force range with the boson-mass top axis."""
    fig, ax = plt.subplots(figsize=(5.6, 4.2))
    ax.loglog(curve.force_ranges * 1e6, curve.bounds, "r-", lw=2)
    ax.fill_between(curve.force_ranges * 1e6, curve.bounds,
                    np.nanmax(curve.bounds) * 10, color="0.85")
    ax.set_xlabel(r"force range $\lambda$ ($\mu$m)")
    ax.set_ylabel(f"upper bound on |{kind_label}|")
    ax.grid(alpha=0.3, which="both")
    top = ax.secondary_xaxis(
        "top",
        functions=(lambda lam_um: 1.9732698e-7 / (lam_um * 1e-6),
                   lambda ev: 1.9732698e-7 / ev * 1e6),
    )
    top.set_xlabel("boson mass (eV)")
    ax.set_title(f"{int(curve.confidence_level * 100)}% CL exclusion, "
                 f"{curve.convention.value.replace('_', '-')}")
    return _finish(fig, path)


def plot_budget(path, budget) -> Path:
    """Per-row coupling corrections and the quadrature total."""
    names = [e.name for e in budget.entries] + ["total"]
    lowers = [e.lower for e in budget.entries] + [budget.total_lower]
    uppers = [e.upper for e in budget.entries] + [budget.total_upper]
    y = np.arange(len(names))
    fig, ax = plt.subplots(figsize=(6, 0.45 * len(names) + 1.2))
    ax.barh(y, np.array(uppers), left=0, color="tab:blue", alpha=0.8)
    ax.barh(y, np.array(lowers), left=0, color="tab:orange", alpha=0.8)
    ax.set_yticks(y, names)
    ax.axvline(0, color="k", lw=0.8)
    ax.set_xlabel(r"$\Delta g$")
    ax.set_title(
        f"Systematic budget, {budget.kind.value} at "
        f"{budget.force_range*1e6:.0f} um"
    )
    ax.grid(alpha=0.3, axis="x")
    return _finish(fig, path)
