"""Statistical inference: Gaussian fits, coupling estimates, upper limits.

The measured channel means are linear in the coupling through the
kernel constant K(lambda), so inference is a division plus a Gaussian
confidence construction:

    bound = |g_hat| + z * sqrt(sigma_stat^2 + sigma_syst^2)

The asymmetric systematic interval is collapsed to its larger side
before the quadrature (conservative). z is configurable between the
two-sided (1.96 at 95%) and one-sided (1.645) conventions; the default
is two-sided, which reproduces both published benchmark bounds, and the
choice is always recorded in the output.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import curve_fit
from scipy.stats import norm

from .kernels import CONSTANTS, InteractionKind, PhysicalConstants
from .integrator import KernelConstant


class LimitConvention(str, Enum):
    TWO_SIDED = "two_sided"
    ONE_SIDED = "one_sided"


@dataclass(frozen=True)
class GaussianFit:
    mean: float
    sigma: float
    stderr: float
    count: int
    degenerate: bool = False


@dataclass(frozen=True)
class UpperLimit:
    bound: float
    g_hat: float
    sigma_stat: float
    sigma_syst: float
    confidence_level: float
    z_value: float
    convention: LimitConvention


@dataclass(frozen=True)
class ExclusionCurve:
    """95% CL (by default) upper bounds on |g| over a force-range grid."""

    kind: InteractionKind
    confidence_level: float
    convention: LimitConvention
    force_ranges: np.ndarray
    masses_ev: np.ndarray
    bounds: np.ndarray
    g_hats: np.ndarray
    sigma_stats: np.ndarray
    syst_lower: np.ndarray
    syst_upper: np.ndarray
    failures: list = field(default_factory=list)


def gaussian_fit(samples) -> GaussianFit:
    """Maximum-likelihood Gaussian fit: sample mean, sigma, stderr of mean."""
    samples = np.asarray(samples, dtype=float)
    if samples.size < 100:
        raise ValueError(f"need at least 100 samples, got {samples.size}")
    mean = float(samples.mean())
    sigma = float(samples.std(ddof=1))
    degenerate = bool(np.ptp(samples) == 0.0)
    return GaussianFit(
        mean=mean,
        sigma=sigma,
        stderr=sigma / np.sqrt(samples.size),
        count=samples.size,
        degenerate=degenerate,
    )


def fit_histogram(centers, counts, mean0: float, sigma0: float) -> tuple[float, float]:
    """Least-squares Gaussian fit to binned counts; falls back to moments."""
    centers = np.asarray(centers, dtype=float)
    counts = np.asarray(counts, dtype=float)

    def model(x, amp, mu, sig):
        return amp * np.exp(-0.5 * ((x - mu) / sig) ** 2)

    amp0 = counts.max() if counts.max() > 0 else 1.0
    try:
        popt, _ = curve_fit(
            model, centers, counts, p0=(amp0, mean0, max(sigma0, 1e-300)), maxfev=10_000
        )
        return float(popt[1]), float(abs(popt[2]))
    except (RuntimeError, ValueError):
        total = counts.sum()
        if total <= 0:
            return mean0, sigma0
        mu = float((centers * counts).sum() / total)
        var = float(((centers - mu) ** 2 * counts).sum() / total)
        return mu, float(np.sqrt(var))


def coupling_estimate(b_mean: float, b_err: float, kernel: KernelConstant
                      ) -> tuple[float, float]:
    """Invert the measured field through K(lambda): g_hat = B / K.

    Rejects a kernel constant consistent with zero (no inversion
    possible); a kernel above its precision target but well resolved is
    accepted, since the quoted statistical error dominates.
    """
    if kernel.rel_error >= 1.0 / 3.0:
        raise ValueError(
            "kernel constant consistent with zero "
            f"(relative error {kernel.rel_error:.2f}); increase pair count"
        )
    return b_mean / kernel.value, abs(b_err / kernel.value)


def z_value(confidence_level: float, convention: LimitConvention) -> float:
    if not 0.5 < confidence_level < 1:
        raise ValueError(f"confidence level must be in (0.5, 1), got {confidence_level}")
    if LimitConvention(convention) is LimitConvention.TWO_SIDED:
        return float(norm.ppf(0.5 + confidence_level / 2))
    return float(norm.ppf(confidence_level))


def upper_limit(g_hat: float, sigma_stat: float,
                syst_lower: float = 0.0, syst_upper: float = 0.0,
                confidence_level: float = 0.95,
                convention: LimitConvention = LimitConvention.TWO_SIDED
                ) -> UpperLimit:
    """Confidence bound on |g| from the estimate and both error sources."""
    z = z_value(confidence_level, convention)
    sigma_syst = max(abs(syst_lower), abs(syst_upper))
    sigma_total = float(np.hypot(sigma_stat, sigma_syst))
    return UpperLimit(
        bound=abs(g_hat) + z * sigma_total,
        g_hat=g_hat,
        sigma_stat=sigma_stat,
        sigma_syst=sigma_syst,
        confidence_level=confidence_level,
        z_value=z,
        convention=LimitConvention(convention),
    )


def lambda_to_mass(force_range, constants: PhysicalConstants = CONSTANTS):
    """Boson mass-energy (eV) for a force range lambda = hbar / (m c)."""
    force_range = np.asarray(force_range, dtype=float)
    if np.any(force_range <= 0):
        raise ValueError("force range must be positive")
    out = constants.hbar_c_ev_m / force_range
    return float(out) if out.ndim == 0 else out


def lambda_grid(lambda_min: float, lambda_max: float,
                points_per_decade: int = 40) -> np.ndarray:
    """Logarithmic force-range grid, points_per_decade per decade."""
    if not 1e-6 <= lambda_min < lambda_max <= 1e-2:
        raise ValueError("grid must lie within [1 um, 1 cm]")
    n = max(2, int(np.ceil(np.log10(lambda_max / lambda_min) * points_per_decade)) + 1)
    return np.logspace(np.log10(lambda_min), np.log10(lambda_max), n)


def exclusion_curve(kind: InteractionKind, force_ranges, measurement,
                    kernel_fn, budget_fn=None,
                    confidence_level: float = 0.95,
                    convention: LimitConvention = LimitConvention.TWO_SIDED,
                    constants: PhysicalConstants = CONSTANTS) -> ExclusionCurve:
    """Upper bound per force-range grid point.

    Parameters
    ----------
    measurement : tuple
        (mean, stderr) of the relevant channel in tesla.
    kernel_fn : callable
        kernel_fn(kind, lam) -> KernelConstant. Using a common seed
        across grid points keeps K(lambda) smooth in lambda.
    budget_fn : callable or None
        budget_fn(kind, lam, kernel) -> (syst_lower, syst_upper) in
        coupling units; omitted entries mean statistical-only bounds.

    Per-point failures are collected, not raised; the curve is emitted
    for the surviving points.
    """
    kind = InteractionKind(kind)
    force_ranges = np.asarray(force_ranges, dtype=float)
    if force_ranges.size == 0:
        raise ValueError("empty force-range grid")
    if np.any(np.diff(force_ranges) <= 0):
        raise ValueError("force-range grid must be strictly increasing")
    b_mean, b_err = measurement
    if b_err is None or not np.isfinite(b_err):
        raise ValueError("measurement stderr is required")
    rows = []
    failures = []
    for lam in force_ranges:
        try:
            kernel = kernel_fn(kind, float(lam))
            g_hat, sigma_stat = coupling_estimate(b_mean, b_err, kernel)
            lo, hi = budget_fn(kind, float(lam), kernel) if budget_fn else (0.0, 0.0)
            lim = upper_limit(g_hat, sigma_stat, lo, hi, confidence_level, convention)
            rows.append((float(lam), lim.bound, g_hat, sigma_stat, lo, hi))
        except Exception as exc:  # per-point failure, curve continues
            failures.append((float(lam), f"{type(exc).__name__}: {exc}"))
    if not rows:
        raise RuntimeError(f"no usable grid points; first failure: {failures[:1]}")
    arr = np.array([r[0] for r in rows])
    return ExclusionCurve(
        kind=kind,
        confidence_level=confidence_level,
        convention=LimitConvention(convention),
        force_ranges=arr,
        masses_ev=lambda_to_mass(arr, constants),
        bounds=np.array([r[1] for r in rows]),
        g_hats=np.array([r[2] for r in rows]),
        sigma_stats=np.array([r[3] for r in rows]),
        syst_lower=np.array([r[4] for r in rows]),
        syst_upper=np.array([r[5] for r in rows]),
        failures=failures,
    )
