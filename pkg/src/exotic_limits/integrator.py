"""Monte Carlo volume integration of the effective field, plus a
deterministic quadrature oracle and the per-unit-coupling kernel constant.

The Monte Carlo estimator follows the three-step pair-sampling scheme:
draw N_MC random point pairs (one in the sphere, one in the sensing
slab), evaluate the projected kernel for each pair, and scale the sample
mean by the total nucleon number. A full period is evaluated with one
common set of pairs reused at every phase point (common random numbers),
which keeps the time dependence smooth and makes harmonic extraction
low-variance; it also zeroes the symmetry-forbidden coefficient rows
exactly.

Determinism contract: every chunk of pairs owns a counter-based
substream derived from (seed, chunk_index), chunk partials are reduced
in chunk order with exact (fsum) accumulation, and results are therefore
bit-identical for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .geometry import (
    ExperimentGeometry,
    distance_profile,
    sample_slab_points,
    sample_sphere_points,
    velocity_profile,
)
from .harmonics import FieldTimeSeries, HarmonicCoefficients, basis_matrix
from .kernels import CONSTANTS, CouplingHypothesis, InteractionKind, PhysicalConstants


class ConvergenceError(RuntimeError):
    """Deterministic quadrature failed its refinement check."""


@dataclass(frozen=True)
class MCConfig:
    """Monte Carlo settings.

    pair_count applies to field/series estimates; kernel_pair_count to
    the kernel constant, where the first harmonic must be resolved well
    below the systematic tolerances. chunk_size fixes the reduction
    layout and is part of the determinism contract (do not autodetect).
    """

    pair_count: int = 1 << 20
    seed: int = 23
    time_samples: int = 64
    chunk_size: int = 1 << 16
    threads: int = 1
    full_vector: bool = False
    kernel_pair_count: int = 1 << 23
    kernel_time_samples: int = 16
    kernel_rel_error_limit: float = 0.005
    row_pair_count: int = 1 << 18

    def __post_init__(self):
        if self.pair_count < 1 or self.kernel_pair_count < 1:
            raise ValueError("pair counts must be >= 1")
        if self.time_samples < 4:
            raise ValueError("need at least 4 time samples per period")
        if self.chunk_size < 1:
            raise ValueError("chunk_size must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass(frozen=True)
class FieldEstimate:
    """Volume-averaged effective field with its Monte Carlo standard error."""

    value: float
    error: float
    pair_count: int


@dataclass(frozen=True)
class KernelConstant:
    """First-harmonic field per unit coupling, K(lambda), in T.

    AV uses the sine coefficient a_1, SP the cosine coefficient b_1.
    meets_precision records whether the Monte Carlo relative error is
    below the configured limit; the short-range SP kernel has a heavy
    tail and may legitimately miss it at any practical pair count.
    """

    kind: InteractionKind
    force_range: float
    value: float
    rel_error: float
    pair_count: int
    meets_precision: bool


def _chunk_rng(seed: int, chunk_index: int) -> np.random.Generator:
    # Counter-based substream: independent of worker assignment.
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(chunk_index,)))
    )


def _chunk_sizes(total: int, chunk: int):
    sizes = [chunk] * (total // chunk)
    if total % chunk:
        sizes.append(total % chunk)
    return sizes


def _relative_velocity(geom: ExperimentGeometry, t):
    # Velocity of the sensor relative to the source, projected on +z.
    return -velocity_profile(geom.kinematics, t)


def _mc_pass(hyp, geom, t_grid, cfg, constants, weights):
    """Chunked kernel evaluation over the time grid.

    Returns per-time (sum, sumsq) and, when a projection weight matrix is
    given, per-sample-projection (sum, sumsq) accumulated exactly in
    chunk order.
    """
    n_t = len(t_grid)
    zc = distance_profile(geom.kinematics, t_grid) + geom.sphere.radius
    v_rel = _relative_velocity(geom, t_grid)
    dx0, dy0 = geom.sphere.lateral_offset
    lam = hyp.force_range
    theta = geom.slab.axis_angle
    if hyp.kind is InteractionKind.AV:
        prefactor = hyp.coupling / (2 * np.pi * constants.gamma_e) * np.cos(theta)
    else:
        prefactor = (
            hyp.coupling
            * constants.hbar
            / (4 * np.pi * constants.electron_mass * constants.gamma_e)
        )

    def eval_chunk(args):
        index, size = args
        rng = _chunk_rng(cfg.seed, index)
        src = sample_sphere_points(geom.sphere, rng, size)
        sen = sample_slab_points(geom.slab, rng, size)
        dx = sen[:, 0] - src[:, 0] - dx0
        dy = sen[:, 1] - src[:, 1] - dy0
        rho2 = dx * dx + dy * dy
        dz = (sen[:, 2] - src[:, 2])[:, None] - zc[None, :]
        r = np.sqrt(rho2[:, None] + dz * dz)
        decay = np.exp(-r / lam)
        if hyp.kind is InteractionKind.AV:
            k = prefactor * decay / r * v_rel[None, :]
        else:
            radial = (1.0 / (lam * r) + 1.0 / (r * r)) * decay
            if cfg.full_vector:
                proj = (dy[:, None] * np.sin(theta) + dz * np.cos(theta)) / r
            else:
                proj = dz / r * np.cos(theta)
            k = prefactor * radial * proj
        out = {
            "sum_t": k.sum(axis=0),
            "ssq_t": (k * k).sum(axis=0),
        }
        if weights is not None:
            p = (2.0 / n_t) * (k @ weights)
            dc = k.mean(axis=1)
            out["sum_p"] = p.sum(axis=0)
            out["ssq_p"] = (p * p).sum(axis=0)
            out["sum_dc"] = dc.sum()
            out["ssq_dc"] = (dc * dc).sum()
        return out

    jobs = list(enumerate(_chunk_sizes(cfg.pair_count, cfg.chunk_size)))
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            partials = list(pool.map(eval_chunk, jobs))
    else:
        partials = [eval_chunk(job) for job in jobs]

    def combine(key, width):
        cols = np.empty(width)
        for i in range(width):
            cols[i] = math.fsum(float(p[key][i]) for p in partials)
        return cols

    result = {
        "sum_t": combine("sum_t", n_t),
        "ssq_t": combine("ssq_t", n_t),
    }
    if weights is not None:
        width = weights.shape[1]
        result["sum_p"] = combine("sum_p", width)
        result["ssq_p"] = combine("ssq_p", width)
        result["sum_dc"] = math.fsum(float(p["sum_dc"]) for p in partials)
        result["ssq_dc"] = math.fsum(float(p["ssq_dc"]) for p in partials)
    return result


def _scaled_stats(sums, sumsqs, n, scale):
    mean = sums / n
    variance = np.maximum(sumsqs / n - mean * mean, 0.0)
    return scale * mean, scale * np.sqrt(variance / n)


def mc_average_field(
    hyp: CouplingHypothesis,
    geom: ExperimentGeometry,
    t: float,
    cfg: MCConfig,
    constants: PhysicalConstants = CONSTANTS,
) -> FieldEstimate:
    """Monte Carlo estimate of the slab-averaged effective field at time t.

    The pair-sample mean of the projected kernel, scaled by the nucleon
    number of the source; the standard error comes from the sample
    variance. Deterministic for a given (seed, chunk layout).
    """
    acc = _mc_pass(hyp, geom, np.atleast_1d(float(t)), cfg, constants, None)
    mean, err = _scaled_stats(
        acc["sum_t"], acc["ssq_t"], cfg.pair_count, geom.sphere.nucleon_count
    )
    return FieldEstimate(float(mean[0]), float(err[0]), cfg.pair_count)


def field_time_series(
    hyp: CouplingHypothesis,
    geom: ExperimentGeometry,
    cfg: MCConfig,
    constants: PhysicalConstants = CONSTANTS,
) -> FieldTimeSeries:
    """Effective field sampled at N_t uniform phase points over one period.

    One common pair sample is reused at every phase point, so the series
    is smooth in t and symmetry-forbidden harmonics vanish identically.
    """
    series, _ = mc_harmonics(hyp, geom, cfg, n_max=1, constants=constants)
    return series


def mc_harmonics(
    hyp: CouplingHypothesis,
    geom: ExperimentGeometry,
    cfg: MCConfig,
    n_max: int = 3,
    constants: PhysicalConstants = CONSTANTS,
) -> tuple[FieldTimeSeries, HarmonicCoefficients]:
    """Time series and harmonic coefficients from a single Monte Carlo pass.

    Coefficient errors are exact under common random numbers: every pair
    contributes a full mini-series, and its rectangle-rule projection is
    accumulated per sample, so the quoted sigma is the standard error of
    the per-pair projection mean.
    """
    n_t = cfg.time_samples
    if n_t <= 2 * n_max:
        raise ValueError(f"time_samples={n_t} cannot resolve harmonics up to {n_max}")
    freq = geom.kinematics.frequency
    t_grid = np.arange(n_t) / (n_t * freq)
    weights = basis_matrix(n_t, n_max)
    acc = _mc_pass(hyp, geom, t_grid, cfg, constants, weights)
    scale = geom.sphere.nucleon_count
    values, errors = _scaled_stats(acc["sum_t"], acc["ssq_t"], cfg.pair_count, scale)
    proj, proj_err = _scaled_stats(acc["sum_p"], acc["ssq_p"], cfg.pair_count, scale)
    b0, b0_err = _scaled_stats(
        np.asarray(acc["sum_dc"]), np.asarray(acc["ssq_dc"]), cfg.pair_count, scale
    )
    series = FieldTimeSeries(times=t_grid, values=values, errors=errors, frequency=freq)
    coeffs = HarmonicCoefficients(
        a=proj[:n_max],
        b=proj[n_max:],
        b0=float(b0),
        a_err=proj_err[:n_max],
        b_err=proj_err[n_max:],
        b0_err=float(b0_err),
        frequency=freq,
    )
    return series, coeffs


def kernel_constant(
    kind: InteractionKind,
    force_range: float,
    geom: ExperimentGeometry,
    cfg: MCConfig,
    constants: PhysicalConstants = CONSTANTS,
    pair_count: int | None = None,
    reference_coupling: float = 1e-20,
) -> KernelConstant:
    """First-harmonic effective field per unit coupling, K(lambda).

    Computed at a reference coupling and divided out; exact by linearity
    of the kernels. The relative Monte Carlo error is attached;
    meets_precision flags whether it satisfies the configured limit.
    """
    kind = InteractionKind(kind)
    run_cfg = replace(
        cfg,
        pair_count=pair_count or cfg.kernel_pair_count,
        time_samples=cfg.kernel_time_samples,
    )
    hyp = CouplingHypothesis(kind, reference_coupling, force_range)
    _, coeffs = mc_harmonics(hyp, geom, run_cfg, n_max=1, constants=constants)
    if kind is InteractionKind.AV:
        value, err = coeffs.a[0], coeffs.a_err[0]
    else:
        value, err = coeffs.b[0], coeffs.b_err[0]
    if value == 0.0:
        raise ValueError("kernel constant vanished; geometry or range is degenerate")
    rel = float(abs(err / value))
    return KernelConstant(
        kind=kind,
        force_range=force_range,
        value=float(value / reference_coupling),
        rel_error=rel,
        pair_count=run_cfg.pair_count,
        meets_precision=rel < cfg.kernel_rel_error_limit,
    )


# --- deterministic quadrature oracle -----------------------------------

def _yukawa_ball_factor(x):
    """f(x) = x cosh x - sinh x, stable for small x (f ~ x^3/3)."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x[None]
        scalar = True
    else:
        scalar = False
    out = np.where(
        x < 0.1,
        x**3 / 3.0 + x**5 / 30.0 + x**7 / 840.0,
        x * np.cosh(np.minimum(x, 700.0)) - np.sinh(np.minimum(x, 700.0)),
    )
    return float(out[0]) if scalar else out


def _ball_yukawa_amplitude(s, radius, lam):
    """Closed-form screened-source strength of a uniform ball.

    Returns A(s) = 4 pi lam^3 f(R/lam) exp(-s/lam) for exterior distance
    s; the ball integral of exp(-r/lam)/r is A(s)/s and the ball
    integral of the monopole-dipole radial kernel is
    A(s) (1/(lam s) + 1/s^2) (z/s). Written in an overflow-safe form
    (the exponent never exceeds -(s - R)/lam < 0).
    """
    x = radius / lam
    if x < 0.1:
        factor = _yukawa_ball_factor(x)
        return 4 * np.pi * lam**3 * factor * np.exp(-s / lam)
    # e^{-s/lam} f(x) = [(x-1) e^{x-s/lam} + (x+1) e^{-x-s/lam}] / 2
    combined = 0.5 * (
        (x - 1.0) * np.exp(x - s / lam) + (x + 1.0) * np.exp(-x - s / lam)
    )
    return 4 * np.pi * lam**3 * combined


def _slab_midpoint_grid(geom: ExperimentGeometry, n: tuple[int, int, int]):
    lx, ly = geom.slab.extent
    h = geom.slab.thickness
    xs = (np.arange(n[0]) + 0.5) / n[0] * lx - lx / 2
    ys = (np.arange(n[1]) + 0.5) / n[1] * ly - ly / 2
    zs = -(np.arange(n[2]) + 0.5) / n[2] * h
    return np.meshgrid(xs, ys, zs, indexing="ij")


def _quad_once(hyp, geom, t, constants, n, full_vector=False):
    """Slab-averaged field via the exact ball reduction of the kernel.

    Both kernels integrate over the sphere in closed form for exterior
    points (the sphere acts as a screened point source), leaving a 3-D
    midpoint quadrature over the slab.
    """
    lam = hyp.force_range
    radius = geom.sphere.radius
    dx0, dy0 = geom.sphere.lateral_offset
    zc = distance_profile(geom.kinematics, float(t)) + radius
    x, y, z = _slab_midpoint_grid(geom, n)
    rx = x - dx0
    ry = y - dy0
    rz = z - zc
    s = np.sqrt(rx**2 + ry**2 + rz**2)
    theta = geom.slab.axis_angle
    amp = _ball_yukawa_amplitude(s, radius, lam)
    if hyp.kind is InteractionKind.AV:
        v_rel = _relative_velocity(geom, float(t))
        per_electron = (
            hyp.coupling / (2 * np.pi * constants.gamma_e) * (amp / s) * v_rel * np.cos(theta)
        )
    else:
        # gradient of the ball potential restores the (1/(lam s) + 1/s^2)
        # kernel along each displacement component
        prefactor = (
            hyp.coupling
            * constants.hbar
            / (4 * np.pi * constants.electron_mass * constants.gamma_e)
        )
        if full_vector:
            projection = (rz * np.cos(theta) + ry * np.sin(theta)) / s
        else:
            projection = rz / s * np.cos(theta)
        per_electron = prefactor * amp * (1.0 / (lam * s) + 1.0 / s**2) * projection
    return geom.sphere.nucleon_density * float(per_electron.mean())


def quad_average_field(
    hyp: CouplingHypothesis,
    geom: ExperimentGeometry,
    t: float,
    slab_nodes: tuple[int, int, int] = (16, 16, 8),
    constants: PhysicalConstants = CONSTANTS,
    rel_tolerance: float = 1e-3,
    full_vector: bool = False,
) -> float:
    """Deterministic oracle for :func:`mc_average_field` (no randomness).

    Evaluates the slab quadrature at the given node counts and at twice
    the node counts; returns the Richardson extrapolation of the
    (second-order) midpoint rule and raises :class:`ConvergenceError`
    if the two refinement levels disagree beyond rel_tolerance.
    """
    coarse = _quad_once(hyp, geom, t, constants, slab_nodes, full_vector)
    fine = _quad_once(hyp, geom, t, constants, tuple(2 * k for k in slab_nodes),
                      full_vector)
    extrapolated = (4.0 * fine - coarse) / 3.0
    scale = max(abs(fine), abs(coarse))
    if scale > 0 and abs(fine - coarse) > rel_tolerance * scale:
        raise ConvergenceError(
            f"quadrature not converged: |delta|/|value| = {abs(fine - coarse) / scale:.2e}"
            f" at nodes {slab_nodes}"
        )
    return extrapolated


def sphere_ball_quadrature(radius: float, n_z: int, n_rho: int, n_phi: int):
    """Midpoint nodes and weights for a ball, cylindrical shells clipped
    to the sphere: each z slice carries its own radial grid on
    [0, sqrt(R^2 - z^2)], so no cell straddles the boundary.

    Returns (points (N, 3), weights (N,)); weights sum to the ball volume
    up to the slice-area midpoint error.
    """
    dz = 2 * radius / n_z
    zs = (np.arange(n_z) + 0.5) * dz - radius
    points = []
    weights = []
    dphi = 2 * np.pi / n_phi
    phi = (np.arange(n_phi) + 0.5) * dphi
    cos_phi, sin_phi = np.cos(phi), np.sin(phi)
    for z in zs:
        rho_max = np.sqrt(max(radius**2 - z**2, 0.0))
        if rho_max <= 0:
            continue
        drho = rho_max / n_rho
        rho = (np.arange(n_rho) + 0.5) * drho
        p, c = np.meshgrid(rho, cos_phi, indexing="ij")
        _, s = np.meshgrid(rho, sin_phi, indexing="ij")
        points.append(
            np.column_stack([(p * c).ravel(), (p * s).ravel(), np.full(p.size, z)])
        )
        weights.append(np.repeat(rho * drho * dphi * dz, n_phi))
    return np.vstack(points), np.concatenate(weights)


def pair_quadrature_field(
    hyp: CouplingHypothesis,
    geom: ExperimentGeometry,
    t: float,
    sphere_nodes: tuple[int, int, int] = (16, 12, 16),
    slab_nodes: tuple[int, int, int] = (12, 12, 8),
    constants: PhysicalConstants = CONSTANTS,
) -> float:
    """Literal tensor quadrature over both volumes (6-D midpoint).

    Slower and less accurate than :func:`quad_average_field`; retained as
    an independent cross-check of the ball reduction used there.
    """
    src, w = sphere_ball_quadrature(geom.sphere.radius, *sphere_nodes)
    x, y, z = _slab_midpoint_grid(geom, slab_nodes)
    sen = np.column_stack([x.ravel(), y.ravel(), z.ravel()])
    dx0, dy0 = geom.sphere.lateral_offset
    zc = distance_profile(geom.kinematics, float(t)) + geom.sphere.radius
    lam = hyp.force_range
    theta = geom.slab.axis_angle
    v_rel = _relative_velocity(geom, float(t))
    total = 0.0
    chunk = max(1, 2_000_000 // max(len(src), 1))
    for i in range(0, len(sen), chunk):
        blk = sen[i : i + chunk]
        dx = blk[:, 0][:, None] - src[:, 0][None, :] - dx0
        dy = blk[:, 1][:, None] - src[:, 1][None, :] - dy0
        dz = blk[:, 2][:, None] - src[:, 2][None, :] - zc
        r = np.sqrt(dx * dx + dy * dy + dz * dz)
        decay = np.exp(-r / lam)
        if hyp.kind is InteractionKind.AV:
            k = hyp.coupling / (2 * np.pi * constants.gamma_e) * decay / r * v_rel * np.cos(theta)
        else:
            k = (
                hyp.coupling
                * constants.hbar
                / (4 * np.pi * constants.electron_mass * constants.gamma_e)
                * (1.0 / (lam * r) + 1.0 / (r * r))
                * decay
                * (dz / r)
                * np.cos(theta)
            )
        total += float((k * w[None, :]).sum())
    return geom.sphere.nucleon_density * total / len(sen)
