"""Second-stage lock-in model: demodulation, calibration, synthetic runs.

The full detection chain upstream of the second lock-in (FM microwave
demodulation, laser-noise cancellation) is abstracted into a single
calibration constant C (volts per tesla) and a white noise floor given
as an amplitude spectral density. The chain applies a phase delay phi
between the physical modulation and the demodulator reference; with the
reference set to the calibrated delay, the spin-velocity signal (sine
quadrature) and the monopole-dipole signal (cosine quadrature) land on
separate output channels.

Channel naming follows the measurement convention: the channel carrying
the sine coefficient is called in-phase and maps to the AV field. The
opposite mapping is available as an explicit convention value.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .limits import fit_histogram

_BLOCK_DRAW_CHUNK = 1 << 20  # fixed accumulation layout, part of determinism


class ChannelConvention(str, Enum):
    AV_IN_PHASE = "av_in_phase"
    AV_QUADRATURE = "av_quadrature"


class CalibrationError(RuntimeError):
    """Phase calibration response indistinguishable from noise."""


@dataclass(frozen=True)
class LockInChain:
    """Demodulation chain: volts-per-tesla constant, phase delay, mapping."""

    calibration_constant: float = 2.29e5
    phase_delay: float = np.deg2rad(-32.0)
    frequency: float = 1953.0
    convention: ChannelConvention = ChannelConvention.AV_IN_PHASE

    def __post_init__(self):
        if not self.calibration_constant > 0:
            raise ValueError("calibration constant must be positive")
        if not -np.pi < self.phase_delay <= np.pi:
            raise ValueError("phase delay must lie in (-pi, pi]")
        if not self.frequency > 0:
            raise ValueError("reference frequency must be positive")
        object.__setattr__(self, "convention", ChannelConvention(self.convention))


@dataclass(frozen=True)
class NoiseModel:
    """White sensor noise: amplitude spectral density (T/sqrt(Hz))."""

    amplitude_spectral_density: float = 1.4e-9
    duration: float = 3600.0
    seed: int = 0

    def __post_init__(self):
        if self.amplitude_spectral_density < 0:
            raise ValueError("noise ASD must be >= 0")
        if not self.duration > 0:
            raise ValueError("duration must be positive")


@dataclass(frozen=True)
class MeasurementResult:
    """Demodulated channel statistics of a (synthetic) run."""

    b_av: float
    b_av_stderr: float
    b_sp: float
    b_sp_stderr: float
    block_count: int
    block_sigma: float
    bin_centers: np.ndarray
    counts_av: np.ndarray
    counts_sp: np.ndarray
    sample_mean_av: float
    sample_mean_sp: float
    sample_sigma_av: float
    sample_sigma_sp: float
    block_values_av: np.ndarray | None = None
    block_values_sp: np.ndarray | None = None


def demodulate(samples, sample_rate: float, chain: LockInChain,
               reference_phase: float | None = None) -> tuple[float, float]:
    """Dual-phase demodulation of a uniformly sampled voltage record.

    Returns (X, Y) with X = 2 <s sin(w t + phi_ref)> and
    Y = 2 <s cos(w t + phi_ref)>. The record must span an integer number
    of modulation periods, where the sine/cosine projections are exactly
    orthogonal on the uniform grid.
    """
    samples = np.asarray(samples, dtype=float)
    if reference_phase is None:
        reference_phase = chain.phase_delay
    n = len(samples)
    periods = n * chain.frequency / sample_rate
    if abs(periods - round(periods)) > 1e-9 or round(periods) < 1:
        raise ValueError(
            f"record covers {periods:g} modulation periods; an integer count is required"
        )
    t = np.arange(n) / sample_rate
    phase = 2 * np.pi * chain.frequency * t + reference_phase
    x = 2.0 * np.mean(samples * np.sin(phase))
    y = 2.0 * np.mean(samples * np.cos(phase))
    return float(x), float(y)


def fields_from_channels(x: float, y: float, chain: LockInChain) -> tuple[float, float]:
    """Map demodulator outputs (volts) to (B_AV, B_SP) in tesla."""
    if chain.convention is ChannelConvention.AV_IN_PHASE:
        return x / chain.calibration_constant, y / chain.calibration_constant
    return y / chain.calibration_constant, x / chain.calibration_constant


def volts_to_field(volts, chain: LockInChain):
    """Convert demodulated volts to tesla through the calibration constant."""
    return np.asarray(volts, dtype=float) / chain.calibration_constant


def slope_to_calibration(slope_volts_per_hz: float, gamma_e: float) -> float:
    """Calibration constant from the spectroscopy slope (V/Hz -> V/T).

    C = slope * gamma_e / (2 pi). Note: with the published slope of
    0.816 V/MHz and gamma_e/2pi = 28 GHz/T this yields 2.28e4 V/T, a
    factor of ten below the separately published constant of 2.29e5 V/T;
    the two published values are mutually inconsistent and the directly
    calibrated constant is used for analysis defaults.
    """
    if not slope_volts_per_hz > 0:
        raise ValueError("slope must be positive")
    return slope_volts_per_hz * gamma_e / (2 * np.pi)


def calibrate_phase(injected_amplitude: float, xy: tuple[float, float],
                    chain: LockInChain, xy_noise: float = 0.0
                    ) -> tuple[float, float]:
    """Recover the chain phase delay from a calibration-field response.

    The calibration field oscillates in phase with the position
    modulation, B(t) = A cos(w t), so the zero-reference demodulator
    outputs are X = -C A sin(phi), Y = C A cos(phi).

    Parameters
    ----------
    injected_amplitude : float
        Known amplitude A of the injected field (T), > 0.
    xy : tuple
        Observed zero-reference demodulator outputs (volts).
    xy_noise : float
        One-sigma noise of each output (volts); propagated into the
        phase uncertainty.

    Raises
    ------
    CalibrationError
        If the response magnitude does not exceed three times the noise.
    """
    if not injected_amplitude > 0:
        raise ValueError("injected amplitude must be positive")
    x, y = xy
    response = float(np.hypot(x, y))
    if xy_noise > 0 and response <= 3.0 * xy_noise:
        raise CalibrationError(
            f"calibration response {response:.3g} V below noise floor {xy_noise:.3g} V"
        )
    phi = float(np.arctan2(-x, y))
    expected = chain.calibration_constant * injected_amplitude
    phi_err = float(xy_noise / expected) if xy_noise > 0 else 0.0
    return phi, phi_err


def block_noise_sigma(noise: NoiseModel, block_time: float) -> float:
    """Exact one-sigma demodulated noise per block, in tesla.

    For white noise of one-sided ASD S, a dual-phase boxcar demodulation
    over a block of length T has output noise S/sqrt(T) on each channel,
    independent of the sampling rate.
    """
    return noise.amplitude_spectral_density / np.sqrt(block_time)


def synthesize_run(signal_av: float, signal_sp: float, chain: LockInChain,
                   noise: NoiseModel, samples_per_period: int = 64,
                   block_time_constant: float = 10e-3,
                   mode: str = "auto", max_timedomain_blocks: int = 20_000,
                   histogram_bins: int = 201,
                   keep_blocks: bool = False,
                   keep_blocks_limit: int = 1_000_000) -> MeasurementResult:
    """Synthetic measurement: modulated fields, noise, blockwise demodulation.

    signal_av and signal_sp are the first-harmonic field amplitudes in
    tesla (sine and cosine quadrature respectively). The voltage record
    is demodulated in blocks of an integer number of periods matching the
    lock-in time constant; blockwise channel outputs are histogrammed and
    fitted with Gaussians.

    mode="timedomain" synthesizes the sampled voltage record explicitly;
    mode="block" draws the blockwise outputs from their exact sampling
    distribution (identical for ideal white Gaussian noise) and scales to
    arbitrarily long runs; "auto" switches on max_timedomain_blocks.
    """
    block_periods = max(1, round(block_time_constant * chain.frequency))
    block_time = block_periods / chain.frequency
    n_blocks = int(noise.duration / block_time)
    if n_blocks < 1:
        raise ValueError("duration shorter than one demodulation block")
    if mode == "auto":
        mode = "timedomain" if n_blocks <= max_timedomain_blocks else "block"

    c = chain.calibration_constant
    sigma_block_volts = c * block_noise_sigma(noise, block_time)
    rng = np.random.default_rng(noise.seed)

    # fixed histogram layout from the analytic block noise
    half_range = 8.0 * sigma_block_volts / c if sigma_block_volts > 0 else max(
        1e-12, 4 * max(abs(signal_av), abs(signal_sp), 1e-15)
    )
    center = 0.0
    edges = np.linspace(center - half_range, center + half_range, histogram_bins + 1)
    scale = max(abs(signal_av), abs(signal_sp))
    if scale > half_range / 2:
        edges = np.linspace(-scale - half_range, scale + half_range, histogram_bins + 1)
    counts_av = np.zeros(histogram_bins, dtype=np.int64)
    counts_sp = np.zeros(histogram_bins, dtype=np.int64)

    sums = np.zeros(2)
    sumsq = np.zeros(2)
    keep = keep_blocks and n_blocks <= keep_blocks_limit
    kept_av = [] if keep else None
    kept_sp = [] if keep else None

    if mode == "timedomain":
        fs = samples_per_period * chain.frequency
        n_s = block_periods * samples_per_period
        t = np.arange(n_s) / fs
        phase = 2 * np.pi * chain.frequency * t + chain.phase_delay
        sig = c * (signal_av * np.sin(phase) + signal_sp * np.cos(phase))
        sin_ref = np.sin(phase)
        cos_ref = np.cos(phase)
        sigma_sample = c * noise.amplitude_spectral_density * np.sqrt(fs / 2.0)
        batch = max(1, min(n_blocks, max(1, _BLOCK_DRAW_CHUNK // n_s)))
        done = 0
        while done < n_blocks:
            m = min(batch, n_blocks - done)
            if sigma_sample > 0:
                rec = sig[None, :] + rng.normal(0.0, sigma_sample, size=(m, n_s))
            else:
                rec = np.broadcast_to(sig, (m, n_s))
            x = 2.0 * (rec @ sin_ref) / n_s
            y = 2.0 * (rec @ cos_ref) / n_s
            b_av, b_sp = _accumulate(x, y, chain, edges, counts_av, counts_sp)
            sums += (b_av.sum(), b_sp.sum())
            sumsq += ((b_av**2).sum(), (b_sp**2).sum())
            if keep:
                kept_av.append(b_av)
                kept_sp.append(b_sp)
            done += m
    elif mode == "block":
        x_center = c * signal_av
        y_center = c * signal_sp
        done = 0
        while done < n_blocks:
            m = min(_BLOCK_DRAW_CHUNK, n_blocks - done)
            if sigma_block_volts > 0:
                x = x_center + rng.normal(0.0, sigma_block_volts, m)
                y = y_center + rng.normal(0.0, sigma_block_volts, m)
            else:
                x = np.full(m, x_center)
                y = np.full(m, y_center)
            b_av, b_sp = _accumulate(x, y, chain, edges, counts_av, counts_sp)
            sums += (b_av.sum(), b_sp.sum())
            sumsq += ((b_av**2).sum(), (b_sp**2).sum())
            if keep:
                kept_av.append(b_av)
                kept_sp.append(b_sp)
            done += m
    else:
        raise ValueError(f"unknown mode {mode!r}")

    mean = sums / n_blocks
    var = np.maximum(sumsq / n_blocks - mean**2, 0.0)
    sample_sigma = np.sqrt(var)
    centers = 0.5 * (edges[:-1] + edges[1:])

    fits = []
    for counts, mu0, sg0 in (
        (counts_av, mean[0], sample_sigma[0]),
        (counts_sp, mean[1], sample_sigma[1]),
    ):
        # a delta-spike histogram (noise-free run) has no Gaussian to fit
        if sg0 > 0 and np.count_nonzero(counts) >= 3:
            fits.append(fit_histogram(centers, counts, mu0, sg0))
        else:
            fits.append((mu0, float(sg0)))
    (mu_av, sg_av), (mu_sp, sg_sp) = fits

    return MeasurementResult(
        b_av=float(mu_av),
        b_av_stderr=float(sg_av / np.sqrt(n_blocks)),
        b_sp=float(mu_sp),
        b_sp_stderr=float(sg_sp / np.sqrt(n_blocks)),
        block_count=n_blocks,
        block_sigma=float(sigma_block_volts / c),
        bin_centers=centers,
        counts_av=counts_av,
        counts_sp=counts_sp,
        sample_mean_av=float(mean[0]),
        sample_mean_sp=float(mean[1]),
        sample_sigma_av=float(sample_sigma[0]),
        sample_sigma_sp=float(sample_sigma[1]),
        block_values_av=np.concatenate(kept_av) if keep and kept_av else None,
        block_values_sp=np.concatenate(kept_sp) if keep and kept_sp else None,
    )


def _accumulate(x, y, chain, edges, counts_av, counts_sp):
    if chain.convention is ChannelConvention.AV_IN_PHASE:
        b_av = x / chain.calibration_constant
        b_sp = y / chain.calibration_constant
    else:
        b_av = y / chain.calibration_constant
        b_sp = x / chain.calibration_constant
    counts_av += np.histogram(b_av, bins=edges)[0]
    counts_sp += np.histogram(b_sp, bins=edges)[0]
    return b_av, b_sp
