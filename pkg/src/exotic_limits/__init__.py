"""Exotic spin-dependent interaction search: simulation and inference.

Modules mirror the analysis chain of an NV-ensemble magnetometer
experiment probing two exotic electron-nucleon couplings:

geometry -> kernels -> integrator -> harmonics -> lockin ->
systematics -> limits, with diamagnetism as the dominant mundane
background and a CLI (`exotic-limits`) on top.
"""

from .geometry import (
    ExperimentGeometry,
    SensorSlab,
    SourceSphere,
    VibrationKinematics,
)
from .kernels import CONSTANTS, CouplingHypothesis, InteractionKind, PhysicalConstants

__all__ = [
    "CONSTANTS",
    "CouplingHypothesis",
    "ExperimentGeometry",
    "InteractionKind",
    "PhysicalConstants",
    "SensorSlab",
    "SourceSphere",
    "VibrationKinematics",
]

__version__ = "0.1.0"
