"""Pairwise potentials and effective-field kernels for the two interactions.

Two couplings between a polarized electron and an unpolarized nucleon are
modeled, identified by :class:`InteractionKind`:

* ``AV`` -- axial-vector/vector, spin- and velocity-dependent; coupling
  product g = g_A^e g_V^N.
* ``SP`` -- scalar/pseudoscalar, monopole-dipole; g = g_S^N g_P^e.

Both fall off as exp(-r/lambda) with the force range lambda. The
"projected" kernels give the effective-field contribution along the
sensor axis for one pair; they are the integrands of the volume average.

Sign conventions (fixed here once, used consistently everywhere):

* e_r points from the source nucleon to the sensor electron.
* The velocity entering the AV kernel is the velocity of the sensor
  relative to the source, projected on +z. With the sensor at rest this
  is minus the sphere velocity. Both choices appear in the literature;
  this one makes the first-harmonic coefficients of both interactions
  positive for positive coupling in the frame of :mod:`.geometry`.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class InteractionKind(str, Enum):
    AV = "av"
    SP = "sp"


@dataclass(frozen=True)
class PhysicalConstants:
    """Physical constants (SI). gamma_e defaults to 2 pi x 28 GHz/T."""

    hbar: float = 1.054571817e-34
    c: float = 299792458.0
    electron_mass: float = 9.1093837015e-31
    gamma_e: float = 2 * np.pi * 28e9
    mu0: float = 4e-7 * np.pi

    def __post_init__(self):
        for name in ("hbar", "c", "electron_mass", "gamma_e", "mu0"):
            if not getattr(self, name) > 0:
                raise ValueError(f"constant {name} must be positive")

    @property
    def hbar_c_ev_m(self) -> float:
        """hbar c expressed in eV*m, for force-range <-> boson-mass conversion."""
        return self.hbar * self.c / 1.602176634e-19


CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class CouplingHypothesis:
    """One interaction hypothesis: kind, coupling product and force range."""

    kind: InteractionKind
    coupling: float
    force_range: float

    def __post_init__(self):
        object.__setattr__(self, "kind", InteractionKind(self.kind))
        if not self.force_range > 0:
            raise ValueError(f"force range must be positive, got {self.force_range}")
        if not np.isfinite(self.coupling):
            raise ValueError(f"coupling must be finite, got {self.coupling}")


def _check_r(r):
    if np.any(np.asarray(r) <= 0):
        raise ValueError("kernel is singular at r = 0; points must be distinct")


def potential_av(r_vec, v_vec, spin_dir, hyp: CouplingHypothesis,
                 constants: PhysicalConstants = CONSTANTS):
    """Spin- and velocity-dependent pair potential (J).

    V = g (hbar / 4 pi) (exp(-r/lambda) / r) (sigma . v)
    """
    if hyp.kind is not InteractionKind.AV:
        raise ValueError("potential_av requires an AV hypothesis")
    r_vec = np.asarray(r_vec, dtype=float)
    r = np.linalg.norm(r_vec, axis=-1)
    _check_r(r)
    sv = np.dot(np.asarray(spin_dir, dtype=float), np.asarray(v_vec, dtype=float))
    return hyp.coupling * constants.hbar / (4 * np.pi) * np.exp(-r / hyp.force_range) / r * sv


def potential_sp(r_vec, spin_dir, hyp: CouplingHypothesis,
                 constants: PhysicalConstants = CONSTANTS):
    """Monopole-dipole pair potential (J).

    V = g (hbar^2 / 8 pi m_e) (1/(lambda r) + 1/r^2) exp(-r/lambda) (sigma . e_r)
    """
    if hyp.kind is not InteractionKind.SP:
        raise ValueError("potential_sp requires an SP hypothesis")
    r_vec = np.asarray(r_vec, dtype=float)
    r = np.linalg.norm(r_vec, axis=-1)
    _check_r(r)
    lam = hyp.force_range
    radial = (1.0 / (lam * r) + 1.0 / r**2) * np.exp(-r / lam)
    se = np.einsum("...i,...i->...", np.broadcast_to(spin_dir, r_vec.shape), r_vec) / r
    return hyp.coupling * constants.hbar**2 / (8 * np.pi * constants.electron_mass) * radial * se


def projected_field_av(r, v, axis_angle, hyp: CouplingHypothesis,
                       constants: PhysicalConstants = CONSTANTS):
    """AV effective field along the sensor axis for one pair (T).

    B = (g / 2 pi gamma_e) (exp(-r/lambda) / r) v cos(theta)

    Depends on the displacement only through its magnitude r. v is the
    signed relative velocity along +z (see module docstring).
    """
    r = np.asarray(r, dtype=float)
    _check_r(r)
    return (
        hyp.coupling
        / (2 * np.pi * constants.gamma_e)
        * np.exp(-r / hyp.force_range)
        / r
        * v
        * np.cos(axis_angle)
    )


def projected_field_sp(r, z, axis_angle, hyp: CouplingHypothesis,
                       constants: PhysicalConstants = CONSTANTS):
    """SP effective field along the sensor axis for one pair (T).

    B = g (hbar / 4 pi m_e gamma_e) (1/(lambda r) + 1/r^2) exp(-r/lambda)
        (z / r) cos(theta)

    z is the component of the nucleon-to-electron displacement along the
    vibration axis; the kernel is odd in z.
    """
    r = np.asarray(r, dtype=float)
    _check_r(r)
    lam = hyp.force_range
    return (
        hyp.coupling
        * constants.hbar
        / (4 * np.pi * constants.electron_mass * constants.gamma_e)
        * (1.0 / (lam * r) + 1.0 / r**2)
        * np.exp(-r / lam)
        * (z / r)
        * np.cos(axis_angle)
    )


def field_vector_av(r_vec, v_vec, hyp: CouplingHypothesis,
                    constants: PhysicalConstants = CONSTANTS):
    """Full vector effective field of the AV interaction, B parallel to v."""
    r_vec = np.asarray(r_vec, dtype=float)
    r = np.linalg.norm(r_vec, axis=-1)
    _check_r(r)
    scal = hyp.coupling / (2 * np.pi * constants.gamma_e) * np.exp(-r / hyp.force_range) / r
    return scal[..., None] * np.asarray(v_vec, dtype=float)


def field_vector_sp(r_vec, hyp: CouplingHypothesis,
                    constants: PhysicalConstants = CONSTANTS):
    """Full vector effective field of the SP interaction, B parallel to e_r."""
    r_vec = np.asarray(r_vec, dtype=float)
    r = np.linalg.norm(r_vec, axis=-1)
    _check_r(r)
    lam = hyp.force_range
    scal = (
        hyp.coupling
        * constants.hbar
        / (4 * np.pi * constants.electron_mass * constants.gamma_e)
        * (1.0 / (lam * r) + 1.0 / r**2)
        * np.exp(-r / lam)
        / r
    )
    return scal[..., None] * r_vec
