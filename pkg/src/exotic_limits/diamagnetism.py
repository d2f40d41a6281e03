"""Diamagnetic background of the source sphere in the bias field.

The sphere's diamagnetic response to the bias field B0 produces an
ordinary magnetic field at the sensor. Because the sphere is uniformly
magnetized (to first order in chi), its exterior field is exactly that
of a point dipole at the center with moment m = chi B0 V / mu0; the
numerical volume integral is kept as an oracle route for that identity.

Only the component along the sensor axis is detectable, and only its
modulation at the vibration frequency passes the demodulation chain.
The axis-projected map changes sign along y (the axis lies in the y-z
plane), so the slab average is a small cancellation residual of the
much larger pointwise field.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ExperimentGeometry, SourceSphere, sphere_center
from .integrator import sphere_ball_quadrature
from .kernels import CONSTANTS, PhysicalConstants


@dataclass(frozen=True)
class BiasField:
    """Static bias field applied along the sensor axis (T)."""

    magnitude: float = 2e-3

    def __post_init__(self):
        if self.magnitude < 0:
            raise ValueError(f"bias magnitude must be >= 0, got {self.magnitude}")

    def vector(self, axis: np.ndarray) -> np.ndarray:
        return self.magnitude * np.asarray(axis, dtype=float)


@dataclass(frozen=True)
class DiamagneticExtent:
    """Extremes of the slab-averaged projection over one vibration cycle.

    modulation_amplitude = peak_to_peak / 2 is the field swing seen by
    the demodulation chain (the static mean is invisible to it).
    """

    minimum: float
    maximum: float
    peak_to_peak: float

    @property
    def modulation_amplitude(self) -> float:
        return 0.5 * self.peak_to_peak


def analytic_dipole_field(point, center, sphere: SourceSphere, bias: BiasField,
                          axis, constants: PhysicalConstants = CONSTANTS):
    """Exact exterior field of the uniformly magnetized sphere (T).

    Point dipole of moment m = chi B0 V / mu0 at the sphere center;
    valid (and exact) for any exterior point.
    """
    point = np.asarray(point, dtype=float)
    rel = point - np.asarray(center, dtype=float)
    r = np.linalg.norm(rel, axis=-1)
    if np.any(r <= sphere.radius):
        raise ValueError("analytic dipole field is exterior-only")
    m = sphere.susceptibility * bias.magnitude * sphere.volume / constants.mu0
    m_vec = m * np.asarray(axis, dtype=float)
    mdotr = np.einsum("...i,i->...", rel, m_vec)
    return (constants.mu0 / (4 * np.pi)) * (
        3.0 * rel * (mdotr / r**5)[..., None] - m_vec / (r**3)[..., None]
    )


def induced_field_at(point, center, sphere: SourceSphere, bias: BiasField, axis,
                     constants: PhysicalConstants = CONSTANTS,
                     method: str = "quadrature",
                     sphere_nodes: tuple[int, int, int] = (48, 32, 48),
                     mc_samples: int = 1 << 16,
                     rng: np.random.Generator | None = None):
    """Volume integral of the dipole-density kernel over the sphere (T).

    The integrand is chi/(4 pi) [3 r (B0 . r)/r^5 - B0/r^3] per unit
    volume. method="quadrature" uses cylindrical shells clipped to the
    ball; method="mc" averages over uniform interior samples. Agreement
    with :func:`analytic_dipole_field` is the oracle check for both.
    """
    point = np.asarray(point, dtype=float)
    if np.linalg.norm(point - np.asarray(center)) <= sphere.radius:
        raise ValueError("field point must lie outside the sphere")
    if method == "quadrature":
        nodes, weights = sphere_ball_quadrature(sphere.radius, *sphere_nodes)
    elif method == "mc":
        if rng is None:
            rng = np.random.default_rng(0)
        from .geometry import sample_sphere_points

        nodes = sample_sphere_points(sphere, rng, mc_samples)
        weights = np.full(mc_samples, sphere.volume / mc_samples)
    else:
        raise ValueError(f"unknown method {method!r}")
    b0_vec = bias.vector(axis)
    rel = point[None, :] - (nodes + np.asarray(center, dtype=float)[None, :])
    r = np.linalg.norm(rel, axis=1)
    bdotr = rel @ b0_vec
    kernel = (sphere.susceptibility / (4 * np.pi)) * (
        3.0 * rel * (bdotr / r**5)[:, None] - b0_vec[None, :] / (r**3)[:, None]
    )
    return (kernel * weights[:, None]).sum(axis=0)


def diamag_sensor_average(geom: ExperimentGeometry, bias: BiasField, t: float,
                          constants: PhysicalConstants = CONSTANTS,
                          slab_nodes: tuple[int, int, int] = (160, 160, 12)) -> float:
    """Slab-averaged, axis-projected diamagnetic field at time t (T).

    Uses the exact dipole form of the exterior field (equivalent to the
    volume integral, see :func:`analytic_dipole_field`), averaged over a
    midpoint grid on the slab. The result is a cancellation residual:
    roughly a thousand times smaller than the pointwise map extrema and
    correspondingly sensitive to the axis angle.
    """
    axis = geom.slab.axis
    center = sphere_center(geom, float(t))
    lx, ly = geom.slab.extent
    h = geom.slab.thickness
    xs = (np.arange(slab_nodes[0]) + 0.5) / slab_nodes[0] * lx - lx / 2
    ys = (np.arange(slab_nodes[1]) + 0.5) / slab_nodes[1] * ly - ly / 2
    zs = -(np.arange(slab_nodes[2]) + 0.5) / slab_nodes[2] * h
    x, y, z = np.meshgrid(xs, ys, zs, indexing="ij")
    rx = x - center[0]
    ry = y - center[1]
    rz = z - center[2]
    r2 = rx * rx + ry * ry + rz * rz
    r = np.sqrt(r2)
    m = geom.sphere.susceptibility * bias.magnitude * geom.sphere.volume / constants.mu0
    # projection of the dipole field on its own moment axis: the kernel
    # is (3 (n.rhat)^2 - 1)/r^3, zero on the magic-angle cone
    ndotr = axis[0] * rx + axis[1] * ry + axis[2] * rz
    b_par = (constants.mu0 * m / (4 * np.pi)) * (3.0 * ndotr**2 / r2 - 1.0) / (r2 * r)
    return float(b_par.mean())


def diamag_vibration_extent(geom: ExperimentGeometry, bias: BiasField,
                            time_samples: int = 32,
                            constants: PhysicalConstants = CONSTANTS,
                            slab_nodes: tuple[int, int, int] = (160, 160, 12)
                            ) -> DiamagneticExtent:
    """Extremes of the slab average over one vibration cycle."""
    freq = geom.kinematics.frequency
    t_grid = np.arange(time_samples) / (time_samples * freq)
    values = np.array(
        [diamag_sensor_average(geom, bias, t, constants, slab_nodes) for t in t_grid]
    )
    return DiamagneticExtent(
        minimum=float(values.min()),
        maximum=float(values.max()),
        peak_to_peak=float(values.max() - values.min()),
    )


def misalignment_scan(geom: ExperimentGeometry, bias: BiasField,
                      max_offset: float = 10e-6, steps: int = 5,
                      time_samples: int = 8,
                      constants: PhysicalConstants = CONSTANTS,
                      slab_nodes: tuple[int, int, int] = (96, 96, 8)) -> dict:
    """Scan lateral sphere offsets over [-max_offset, max_offset]^2.

    Returns the worst-case modulation amplitude of the slab average (the
    quantity the demodulation chain can confuse with a signal) together
    with the offset where it occurs. The static shift of the average is
    reported for reference but is invisible to the lock-in.
    """
    offsets = np.linspace(-max_offset, max_offset, steps)
    centered = diamag_vibration_extent(
        geom, bias, time_samples, constants, slab_nodes
    )
    centered_mean = 0.5 * (centered.minimum + centered.maximum)
    worst_amplitude = 0.0
    worst_offset = (0.0, 0.0)
    worst_shift = 0.0
    for dx in offsets:
        for dy in offsets:
            shifted = geom.with_updates(lateral_offset=(float(dx), float(dy)))
            extent = diamag_vibration_extent(
                shifted, bias, time_samples, constants, slab_nodes
            )
            if extent.modulation_amplitude > worst_amplitude:
                worst_amplitude = extent.modulation_amplitude
                worst_offset = (float(dx), float(dy))
            mean = 0.5 * (extent.minimum + extent.maximum)
            worst_shift = max(worst_shift, abs(mean - centered_mean))
    return {
        "max_modulation_amplitude": worst_amplitude,
        "worst_offset": worst_offset,
        "max_static_shift": worst_shift,
        "centered": centered,
    }


def diamag_map(geom: ExperimentGeometry, bias: BiasField, t: float,
               grid: tuple[int, int] = (121, 121),
               constants: PhysicalConstants = CONSTANTS):
    """Axis-projected field over the slab x-y plane at mid-depth.

    Returns (x, y, map) with map[i, j] = B_parallel(x_i, y_j) in tesla.
    """
    axis = geom.slab.axis
    center = sphere_center(geom, float(t))
    lx, ly = geom.slab.extent
    xs = np.linspace(-lx / 2, lx / 2, grid[0])
    ys = np.linspace(-ly / 2, ly / 2, grid[1])
    x, y = np.meshgrid(xs, ys, indexing="ij")
    z = -geom.slab.thickness / 2
    rx = x - center[0]
    ry = y - center[1]
    rz = z - center[2]
    r2 = rx * rx + ry * ry + rz * rz
    m = geom.sphere.susceptibility * bias.magnitude * geom.sphere.volume / constants.mu0
    ndotr = axis[0] * rx + axis[1] * ry + axis[2] * rz
    b_par = (constants.mu0 * m / (4 * np.pi)) * (3.0 * ndotr**2 / r2 - 1.0) / (
        r2 * np.sqrt(r2)
    )
    return xs, ys, b_par
