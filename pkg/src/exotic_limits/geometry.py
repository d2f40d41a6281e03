"""Experiment geometry: source sphere, sensor slab, vibration kinematics.

Frame convention
----------------
z points along the vibration axis, upward from the sensor surface. The
sensor slab occupies z in [-h, 0] and is centered at the origin in x-y.
The sphere center sits at (dx, dy, d(t) + R), where d(t) is the gap
between the sphere bottom and the sensor surface. The sensor (NV) axis
lies in the y-z plane, n = (0, sin(theta), cos(theta)), so x is always
perpendicular to the axis.

All lengths are SI meters. Sampling is inverse-transform (no rejection),
so a run consumes a fixed, reproducible number of random variates.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

MAGIC_ANGLE = float(np.arccos(1.0 / np.sqrt(3.0)))


class GeometryError(ValueError):
    """Invalid or inconsistent geometry parameters."""


@dataclass(frozen=True)
class SourceSphere:
    """Nucleon source: a homogeneous sphere.

    Parameters
    ----------
    radius : float
        Sphere radius (m).
    nucleon_density : float
        Nucleon number density (m^-3).
    susceptibility : float
        Magnetic volume susceptibility (dimensionless, negative for
        diamagnets).
    lateral_offset : tuple of float
        (dx, dy) displacement of the sphere axis from the slab center (m).
    """

    radius: float
    nucleon_density: float
    susceptibility: float = 0.0
    lateral_offset: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not self.radius > 0:
            raise GeometryError(f"sphere radius must be positive, got {self.radius}")
        if not self.nucleon_density > 0:
            raise GeometryError(
                f"nucleon density must be positive, got {self.nucleon_density}"
            )
        if not abs(self.susceptibility) < 1:
            raise GeometryError(
                f"|susceptibility| must be < 1, got {self.susceptibility}"
            )
        if not all(np.isfinite(self.lateral_offset)):
            raise GeometryError(f"lateral offset must be finite, got {self.lateral_offset}")

    @property
    def volume(self) -> float:
        return 4.0 / 3.0 * np.pi * self.radius**3

    @property
    def nucleon_count(self) -> float:
        return self.nucleon_density * self.volume


@dataclass(frozen=True)
class VibrationKinematics:
    """Vertical sphere vibration: d(t) = d0 + A (1 + cos(2 pi f t)).

    gap_min is the minimal bottom-of-sphere to sensor-surface distance d0.
    """

    gap_min: float
    amplitude: float
    frequency: float

    def __post_init__(self):
        if not self.gap_min > 0:
            raise GeometryError(f"minimal gap must be positive, got {self.gap_min}")
        if self.amplitude < 0:
            raise GeometryError(f"amplitude must be >= 0, got {self.amplitude}")
        if not self.frequency > 0:
            raise GeometryError(f"frequency must be positive, got {self.frequency}")

    @property
    def period(self) -> float:
        return 1.0 / self.frequency


@dataclass(frozen=True)
class SensorSlab:
    """Sensing layer: rectangular slab of thickness h below the surface.

    axis_angle is the polar angle theta between the sensor (NV) axis and
    the vibration axis; the axis itself is (0, sin theta, cos theta).
    """

    extent: tuple[float, float]
    thickness: float
    axis_angle: float = MAGIC_ANGLE

    def __post_init__(self):
        if not (self.extent[0] > 0 and self.extent[1] > 0):
            raise GeometryError(f"slab extent must be positive, got {self.extent}")
        if not self.thickness > 0:
            raise GeometryError(f"slab thickness must be positive, got {self.thickness}")
        if not 0 <= self.axis_angle <= np.pi / 2:
            raise GeometryError(
                f"axis angle must lie in [0, pi/2], got {self.axis_angle}"
            )

    @property
    def volume(self) -> float:
        return self.extent[0] * self.extent[1] * self.thickness

    @property
    def axis(self) -> np.ndarray:
        """Unit vector of the sensor axis in the lab frame."""
        return np.array([0.0, np.sin(self.axis_angle), np.cos(self.axis_angle)])


@dataclass(frozen=True)
class ExperimentGeometry:
    sphere: SourceSphere
    kinematics: VibrationKinematics
    slab: SensorSlab = field(
        default_factory=lambda: SensorSlab((660e-6, 661e-6), 23e-6)
    )

    def with_updates(self, **kwargs) -> "ExperimentGeometry":
        """Return a copy with named subfields replaced.

        Keys may address nested fields, e.g. ``gap_min`` (kinematics),
        ``radius`` (sphere), ``thickness``/``axis_angle`` (slab),
        ``lateral_offset`` (sphere).
        """
        sphere, kin, slab = self.sphere, self.kinematics, self.slab
        for key, value in kwargs.items():
            if key in ("radius", "nucleon_density", "susceptibility", "lateral_offset"):
                sphere = replace(sphere, **{key: value})
            elif key in ("gap_min", "amplitude", "frequency"):
                kin = replace(kin, **{key: value})
            elif key in ("extent", "thickness", "axis_angle"):
                slab = replace(slab, **{key: value})
            else:
                raise KeyError(f"unknown geometry parameter {key!r}")
        return ExperimentGeometry(sphere, kin, slab)


def distance_profile(kin: VibrationKinematics, t):
    """Gap between sphere bottom and sensor surface at time t (s -> m).

    d(t) = d0 + A [1 + cos(2 pi f t)]; t = 0 is maximum gap.
    """
    return kin.gap_min + kin.amplitude * (1.0 + np.cos(2 * np.pi * kin.frequency * t))


def velocity_profile(kin: VibrationKinematics, t):
    """Signed sphere velocity along +z (m/s), the time derivative of the gap."""
    return -2 * np.pi * kin.frequency * kin.amplitude * np.sin(
        2 * np.pi * kin.frequency * t
    )


def sphere_center(geom: ExperimentGeometry, t):
    """Sphere center position(s) in the lab frame at time t."""
    d = distance_profile(geom.kinematics, t)
    dx, dy = geom.sphere.lateral_offset
    d = np.asarray(d, dtype=float)
    out = np.empty(d.shape + (3,))
    out[..., 0] = dx
    out[..., 1] = dy
    out[..., 2] = d + geom.sphere.radius
    return out


def sample_sphere_points(sphere: SourceSphere, rng: np.random.Generator, n: int):
    """Draw n points uniformly from the ball, sphere-centered coordinates.

    Inverse transform: radius = R u^(1/3), direction uniform on the unit
    sphere. Consumes exactly 3n variates in a fixed call order.
    """
    r = sphere.radius * rng.random(n) ** (1.0 / 3.0)
    cos_polar = 2.0 * rng.random(n) - 1.0
    azimuth = 2.0 * np.pi * rng.random(n)
    sin_polar = np.sqrt(1.0 - cos_polar**2)
    return np.column_stack(
        [
            r * sin_polar * np.cos(azimuth),
            r * sin_polar * np.sin(azimuth),
            r * cos_polar,
        ]
    )


def sample_slab_points(slab: SensorSlab, rng: np.random.Generator, n: int):
    """Draw n points uniformly from the slab volume (lab frame)."""
    lx, ly = slab.extent
    x = (rng.random(n) - 0.5) * lx
    y = (rng.random(n) - 0.5) * ly
    z = -rng.random(n) * slab.thickness
    return np.column_stack([x, y, z])


def pair_displacement(source_point, sensor_point, geom: ExperimentGeometry, t):
    """Displacement vector(s) from source nucleon to sensor electron.

    source_point is sphere-centered; sensor_point is in the lab frame.
    Volumes are disjoint for any valid geometry (gap_min > 0), so the
    result is never the zero vector.
    """
    center = sphere_center(geom, t)
    return np.asarray(sensor_point) - (np.asarray(source_point) + center)
