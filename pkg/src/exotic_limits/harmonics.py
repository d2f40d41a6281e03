"""Fourier decomposition of a periodic field into harmonic coefficients.

The modulated field is decomposed as

    B(t) = b0 + sum_n [ a_n sin(2 pi n f t) + b_n cos(2 pi n f t) ]

with a_n, b_n obtained from the rectangle rule on a uniform grid over one
period. The rectangle rule is exact for trigonometric polynomials with
n < N_t/2, so the decomposition round-trips exactly for band-limited
series.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class FieldTimeSeries:
    """Field samples over one modulation period on a uniform grid.

    times[j] = j / (N_t f); values in tesla; errors are per-point
    one-sigma Monte Carlo uncertainties (zero for deterministic series).
    """

    times: np.ndarray
    values: np.ndarray
    errors: np.ndarray
    frequency: float

    def __post_init__(self):
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        object.__setattr__(self, "errors", np.asarray(self.errors, dtype=float))
        n = len(self.values)
        if len(self.times) != n or len(self.errors) != n:
            raise ValueError("times, values and errors must have equal length")
        if np.any(self.errors < 0):
            raise ValueError("per-point errors must be non-negative")

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class HarmonicCoefficients:
    """Sine/cosine coefficients a_n, b_n for n = 1..n_max plus the DC term.

    Errors are one-sigma Monte Carlo uncertainties on each coefficient;
    they are exact (per-sample) when produced by the integrator and an
    independence-assumption propagation when derived from a bare series.
    """

    a: np.ndarray
    b: np.ndarray
    b0: float
    a_err: np.ndarray
    b_err: np.ndarray
    b0_err: float
    frequency: float

    def __post_init__(self):
        object.__setattr__(self, "a", np.asarray(self.a, dtype=float))
        object.__setattr__(self, "b", np.asarray(self.b, dtype=float))
        object.__setattr__(self, "a_err", np.asarray(self.a_err, dtype=float))
        object.__setattr__(self, "b_err", np.asarray(self.b_err, dtype=float))
        if not (len(self.a) == len(self.b) == len(self.a_err) == len(self.b_err)):
            raise ValueError("coefficient arrays must have equal length")
        if not np.all(np.isfinite(self.a)) or not np.all(np.isfinite(self.b)):
            raise ValueError("coefficients must be finite")

    @property
    def n_max(self) -> int:
        return len(self.a)


def basis_matrix(n_samples: int, n_max: int) -> np.ndarray:
    """Rectangle-rule projection weights, shape (n_samples, 2 n_max).

    Columns 0..n_max-1 are sin(2 pi n j / N), columns n_max.. are the
    matching cosines. A series projected through (2/N) * (values @ W)
    yields (a_1..a_n_max, b_1..b_n_max).
    """
    j = np.arange(n_samples)
    cols = [np.sin(2 * np.pi * n * j / n_samples) for n in range(1, n_max + 1)]
    cols += [np.cos(2 * np.pi * n * j / n_samples) for n in range(1, n_max + 1)]
    return np.stack(cols, axis=1)


def fourier_coefficients(series: FieldTimeSeries, n_max: int) -> HarmonicCoefficients:
    """Extract harmonic coefficients from a sampled period.

    Parameters
    ----------
    series : FieldTimeSeries
        Uniformly sampled field over exactly one period.
    n_max : int
        Highest harmonic order; requires len(series) > 2 n_max.

    Error propagation assumes independent per-point errors, which is an
    approximation for common-random-number Monte Carlo series (the
    integrator provides exact per-sample coefficient errors instead).
    """
    n_t = len(series)
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if n_t <= 2 * n_max:
        raise ValueError(
            f"series with {n_t} samples cannot resolve harmonics up to {n_max}"
        )
    w = basis_matrix(n_t, n_max)
    proj = (2.0 / n_t) * (series.values @ w)
    var = (2.0 / n_t) ** 2 * (series.errors**2 @ w**2)
    b0 = float(series.values.mean())
    b0_err = float(np.sqrt(np.sum(series.errors**2)) / n_t)
    return HarmonicCoefficients(
        a=proj[:n_max],
        b=proj[n_max:],
        b0=b0,
        a_err=np.sqrt(var[:n_max]),
        b_err=np.sqrt(var[n_max:]),
        b0_err=b0_err,
        frequency=series.frequency,
    )


def reconstruct(coeffs: HarmonicCoefficients, n_samples: int) -> FieldTimeSeries:
    """Synthesize the truncated Fourier sum on a uniform period grid."""
    j = np.arange(n_samples)
    t = j / (n_samples * coeffs.frequency)
    values = np.full(n_samples, coeffs.b0)
    for n in range(1, coeffs.n_max + 1):
        phase = 2 * np.pi * n * j / n_samples
        values = values + coeffs.a[n - 1] * np.sin(phase) + coeffs.b[n - 1] * np.cos(phase)
    return FieldTimeSeries(
        times=t, values=values, errors=np.zeros(n_samples), frequency=coeffs.frequency
    )
