"""Run configuration: flat key/value file with unit-suffixed quantities.

The config is a single JSON object of flat keys. Quantities may be bare
numbers (SI) or strings with a unit suffix ("9.3um", "1.953kHz",
"-32deg", "0.5pT"). Every key has a default taken from the published
experiment, so an empty file reproduces the reference setup. Unknown
keys are rejected with the offending key named.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import (
    MAGIC_ANGLE,
    ExperimentGeometry,
    SensorSlab,
    SourceSphere,
    VibrationKinematics,
)
from .integrator import MCConfig
from .kernels import PhysicalConstants
from .lockin import ChannelConvention, LockInChain, NoiseModel
from .systematics import BudgetRow, ParameterKind


class ConfigError(ValueError):
    """Config file cannot be parsed or validated; maps to exit code 2."""


_UNIT_FACTORS = {
    "length": {"m": 1.0, "cm": 1e-2, "mm": 1e-3, "um": 1e-6, "µm": 1e-6, "nm": 1e-9},
    "frequency": {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9},
    "angle": {"rad": 1.0, "deg": np.pi / 180.0},
    "field": {"T": 1.0, "mT": 1e-3, "uT": 1e-6, "nT": 1e-9, "pT": 1e-12, "G": 1e-4},
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "min": 60.0, "h": 3600.0},
    "dimensionless": {},
}

_QUANTITY_RE = re.compile(r"^\s*([-+0-9.eE]+)\s*([a-zA-Zµ/]*)\s*$")


def parse_quantity(raw, dimension: str, key: str = "") -> float:
    """Parse a number or unit-suffixed string into SI units."""
    if isinstance(raw, (int, float)) and not isinstance(raw, bool):
        return float(raw)
    if not isinstance(raw, str):
        raise ConfigError(f"{key}: expected number or unit string, got {raw!r}")
    match = _QUANTITY_RE.match(raw)
    if not match:
        raise ConfigError(f"{key}: cannot parse quantity {raw!r}")
    number, suffix = match.groups()
    try:
        value = float(number)
    except ValueError as exc:
        raise ConfigError(f"{key}: bad numeric part in {raw!r}") from exc
    if not suffix:
        return value
    factors = _UNIT_FACTORS.get(dimension, {})
    if suffix not in factors:
        raise ConfigError(
            f"{key}: unit {suffix!r} not valid for {dimension} "
            f"(accepted: {sorted(factors) or 'bare numbers only'})"
        )
    return value * factors[suffix]


_SCHEMA = {
    # geometry
    "radius": ("length", "978um"),
    "nucleon_density": ("dimensionless", 6.8e30),
    "susceptibility": ("dimensionless", -16e-6),
    "offset_x": ("length", 0.0),
    "offset_y": ("length", 0.0),
    "gap_min": ("length", "9.3um"),
    "amplitude": ("length", "718nm"),
    "frequency": ("frequency", "1.953kHz"),
    "slab_x": ("length", "660um"),
    "slab_y": ("length", "661um"),
    "thickness": ("length", "23um"),
    "axis_angle": ("angle", MAGIC_ANGLE),
    # physical constants
    "hbar": ("dimensionless", 1.054571817e-34),
    "speed_of_light": ("dimensionless", 299792458.0),
    "electron_mass": ("dimensionless", 9.1093837015e-31),
    "gamma_e": ("dimensionless", 2 * np.pi * 28e9),
    "mu0": ("dimensionless", 4e-7 * np.pi),
    # detection chain
    "bias_field": ("field", "20G"),
    "calibration_constant": ("dimensionless", 2.29e5),
    "calibration_sigma": ("dimensionless", 0.03e5),
    "phase_delay": ("angle", "-32deg"),
    "phase_sigma": ("angle", "9deg"),
    "channel_convention": ("enum", "av_in_phase"),
    "noise_asd": ("field", "1.4nT"),
    "lockin_time_constant": ("time", "10ms"),
    "samples_per_period": ("int", 64),
    # measurement statistics (published run)
    "measured_b_av": ("field", "0.1pT"),
    "measured_b_av_stderr": ("field", "1.4pT"),
    "measured_b_sp": ("field", "-1.3pT"),
    "measured_b_sp_stderr": ("field", "1.4pT"),
    "duration": ("time", "291.9h"),
    # Monte Carlo
    "mc_pairs": ("int", 1 << 20),
    "seed": ("int", 23),
    "time_samples": ("int", 64),
    "chunk_size": ("int", 1 << 16),
    "threads": ("int", 1),
    "full_vector": ("bool", False),
    "kernel_pairs": ("int", 1 << 23),
    "kernel_time_samples": ("int", 16),
    "kernel_rel_error_limit": ("dimensionless", 0.005),
    "row_pairs": ("int", 1 << 18),
    # inference
    "confidence_level": ("dimensionless", 0.95),
    "limit_convention": ("enum", "two_sided"),
    "reference_coupling": ("dimensionless", 1e-20),
    "av_force_range": ("length", "330um"),
    "sp_force_range": ("length", "30um"),
    # budget
    "budget_rows": ("rows", None),
    "budget_samples": ("int", 100_000),
    "budget_nodes": ("int", 9),
    # diamagnetism numerics
    "diamag_slab_nodes": ("int", 160),
    "diamag_time_samples": ("int", 32),
    "misalignment_max": ("length", "10um"),
    "misalignment_steps": ("int", 5),
}

# Table of budget rows for the published setup. Field-offset amplitudes
# per channel: the demodulated diamagnetic modulation is cosine-like, so
# the AV (sine) channel sees only the centered residual modulation while
# the SP channel takes the worst-case misaligned amplitude.
_DEFAULT_BUDGET_ROWS = [
    {"name": "diamagnetism", "kind": "field_offset", "delta_av": "0.002pT", "delta_sp": "0.5pT"},
    {"name": "theta", "kind": "kernel", "parameter": "axis_angle", "sigma": "1.3deg"},
    {"name": "distance", "kind": "kernel", "parameter": "gap_min", "sigma": "0.5um"},
    {"name": "radius", "kind": "kernel", "parameter": "radius", "sigma": "3um"},
    {"name": "thickness", "kind": "kernel", "parameter": "thickness", "sigma": "1um"},
    {"name": "amplitude", "kind": "kernel", "parameter": "amplitude", "sigma": "7nm"},
    {"name": "deviation", "kind": "kernel", "parameter": "lateral_offset", "sigma": "10um"},
    {"name": "phase", "kind": "phase", "sigma": "9deg"},
    {"name": "calibration", "kind": "calibration", "sigma": 0.03e5},
]

_ROW_DIMENSIONS = {
    "axis_angle": "angle",
    "gap_min": "length",
    "radius": "length",
    "thickness": "length",
    "amplitude": "length",
    "lateral_offset": "length",
}


@dataclass
class RunConfig:
    """Resolved, validated configuration in SI units."""

    values: dict = field(default_factory=dict)
    budget_rows: list = field(default_factory=list)

    def __getitem__(self, key):
        return self.values[key]

    def geometry(self) -> ExperimentGeometry:
        v = self.values
        return ExperimentGeometry(
            sphere=SourceSphere(
                radius=v["radius"],
                nucleon_density=v["nucleon_density"],
                susceptibility=v["susceptibility"],
                lateral_offset=(v["offset_x"], v["offset_y"]),
            ),
            kinematics=VibrationKinematics(
                gap_min=v["gap_min"], amplitude=v["amplitude"], frequency=v["frequency"]
            ),
            slab=SensorSlab(
                extent=(v["slab_x"], v["slab_y"]),
                thickness=v["thickness"],
                axis_angle=v["axis_angle"],
            ),
        )

    def constants(self) -> PhysicalConstants:
        v = self.values
        return PhysicalConstants(
            hbar=v["hbar"],
            c=v["speed_of_light"],
            electron_mass=v["electron_mass"],
            gamma_e=v["gamma_e"],
            mu0=v["mu0"],
        )

    def mc(self, seed: int | None = None, threads: int | None = None) -> MCConfig:
        v = self.values
        return MCConfig(
            pair_count=v["mc_pairs"],
            seed=seed if seed is not None else v["seed"],
            time_samples=v["time_samples"],
            chunk_size=v["chunk_size"],
            threads=threads if threads is not None else v["threads"],
            full_vector=v["full_vector"],
            kernel_pair_count=v["kernel_pairs"],
            kernel_time_samples=v["kernel_time_samples"],
            kernel_rel_error_limit=v["kernel_rel_error_limit"],
            row_pair_count=v["row_pairs"],
        )

    def chain(self) -> LockInChain:
        v = self.values
        return LockInChain(
            calibration_constant=v["calibration_constant"],
            phase_delay=v["phase_delay"],
            frequency=v["frequency"],
            convention=ChannelConvention(v["channel_convention"]),
        )

    def noise(self, duration: float | None = None, seed: int | None = None) -> NoiseModel:
        v = self.values
        return NoiseModel(
            amplitude_spectral_density=v["noise_asd"],
            duration=duration if duration is not None else v["duration"],
            seed=seed if seed is not None else v["seed"],
        )

    def resolved(self) -> dict:
        """Full SI-resolved mapping for provenance embedding.

        The worker-thread count is execution detail, not provenance:
        results are bit-identical at any thread count by construction,
        so it is excluded to keep reruns byte-stable.
        """
        out = dict(self.values)
        out.pop("threads", None)
        out["budget_rows"] = [
            {
                "name": r.name,
                "kind": r.kind.value,
                "parameter": r.parameter,
                "mean": r.mean,
                "sigma": r.sigma,
                "delta_av": r.delta_av,
                "delta_sp": r.delta_sp,
            }
            for r in self.budget_rows
        ]
        return out


def _parse_budget_row(raw: dict, index: int, sample_count: int) -> BudgetRow:
    if not isinstance(raw, dict):
        raise ConfigError(f"budget_rows[{index}]: expected an object, got {raw!r}")
    known = {"name", "kind", "parameter", "mean", "sigma", "delta_av", "delta_sp"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"budget_rows[{index}]: unknown keys {sorted(unknown)}")
    name = raw.get("name")
    kind = raw.get("kind")
    if not name or not kind:
        raise ConfigError(f"budget_rows[{index}]: 'name' and 'kind' are required")
    try:
        kind = ParameterKind(kind)
    except ValueError as exc:
        raise ConfigError(f"budget_rows[{index}]: unknown kind {kind!r}") from exc
    parameter = raw.get("parameter")
    if kind is ParameterKind.KERNEL:
        dimension = _ROW_DIMENSIONS.get(parameter)
        if dimension is None:
            raise ConfigError(
                f"budget_rows[{index}]: kernel parameter {parameter!r} is not one of "
                f"{sorted(_ROW_DIMENSIONS)}"
            )
    elif kind is ParameterKind.PHASE:
        dimension = "angle"
    else:
        dimension = "dimensionless"
    key = f"budget_rows[{index}].{name}"
    mean = raw.get("mean")
    return BudgetRow(
        name=name,
        kind=kind,
        parameter=parameter,
        mean=None if mean is None else parse_quantity(mean, dimension, key),
        sigma=parse_quantity(raw.get("sigma", 0.0), dimension, key),
        delta_av=parse_quantity(raw.get("delta_av", 0.0), "field", key),
        delta_sp=parse_quantity(raw.get("delta_sp", 0.0), "field", key),
        sample_count=sample_count,
    )


def resolve_config(overrides: dict | None = None) -> RunConfig:
    """Validate overrides against the schema and fill paper defaults."""
    overrides = dict(overrides or {})
    unknown = set(overrides) - set(_SCHEMA)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    values = {}
    for key, (dimension, default) in _SCHEMA.items():
        if key == "budget_rows":
            continue
        raw = overrides.get(key, default)
        if dimension == "int":
            if isinstance(raw, bool) or not isinstance(raw, (int, float)) or raw != int(raw):
                raise ConfigError(f"{key}: expected an integer, got {raw!r}")
            values[key] = int(raw)
        elif dimension == "bool":
            if not isinstance(raw, bool):
                raise ConfigError(f"{key}: expected true/false, got {raw!r}")
            values[key] = raw
        elif dimension == "enum":
            values[key] = str(raw)
        else:
            values[key] = parse_quantity(raw, dimension, key)

    _validate(values)
    sample_count = values["budget_samples"]
    raw_rows = overrides.get("budget_rows")
    if raw_rows is None:
        raw_rows = _DEFAULT_BUDGET_ROWS
    if not isinstance(raw_rows, list):
        raise ConfigError("budget_rows: expected a list of row objects")
    rows = [_parse_budget_row(r, i, sample_count) for i, r in enumerate(raw_rows)]
    return RunConfig(values=values, budget_rows=rows)


def _validate(values: dict) -> None:
    checks = [
        ("radius", values["radius"] > 0, "must be positive"),
        ("gap_min", values["gap_min"] > 0, "must be positive"),
        ("amplitude", values["amplitude"] >= 0, "must be >= 0"),
        ("frequency", values["frequency"] > 0, "must be positive"),
        ("thickness", values["thickness"] > 0, "must be positive"),
        ("axis_angle", 0 <= values["axis_angle"] <= np.pi / 2, "must lie in [0, pi/2]"),
        ("calibration_constant", values["calibration_constant"] > 0, "must be positive"),
        ("noise_asd", values["noise_asd"] >= 0, "must be >= 0"),
        ("duration", values["duration"] > 0, "must be positive"),
        ("mc_pairs", values["mc_pairs"] >= 1, "must be >= 1"),
        ("time_samples", values["time_samples"] >= 4, "must be >= 4"),
        (
            "confidence_level",
            0.5 < values["confidence_level"] < 1,
            "must lie in (0.5, 1)",
        ),
        ("budget_samples", values["budget_samples"] >= 1000, "must be >= 1000"),
    ]
    for key, ok, message in checks:
        if not ok:
            raise ConfigError(f"{key}: {message} (got {values[key]!r})")
    try:
        ChannelConvention(values["channel_convention"])
    except ValueError:
        raise ConfigError(
            f"channel_convention: must be one of "
            f"{[c.value for c in ChannelConvention]}, got {values['channel_convention']!r}"
        ) from None
    if values["limit_convention"] not in ("two_sided", "one_sided"):
        raise ConfigError(
            f"limit_convention: must be 'two_sided' or 'one_sided', "
            f"got {values['limit_convention']!r}"
        )


def load_config(path: str | Path | None) -> RunConfig:
    """Load and resolve a config file; None or an empty file give defaults."""
    if path is None:
        return resolve_config({})
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text().strip()
    if not text:
        return resolve_config({})
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return resolve_config(raw)
