import numpy as np
import pytest

from exotic_limits.config import resolve_config

_ACCEPTANCE_LINES = {}


def record_acceptance(criterion: int, passed: bool, detail: str) -> None:
    """Collect one PASS/FAIL line per acceptance criterion for the summary."""
    _ACCEPTANCE_LINES[criterion] = f"criterion {criterion}: " + (
        f"PASS - {detail}" if passed else f"FAIL - {detail}"
    )
    print(_ACCEPTANCE_LINES[criterion])


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_ACCEPTANCE_LINES):
        terminalreporter.write_line(_ACCEPTANCE_LINES[key])
from exotic_limits.geometry import (
    ExperimentGeometry,
    SensorSlab,
    SourceSphere,
    VibrationKinematics,
)
from exotic_limits.integrator import MCConfig


@pytest.fixture(scope="session")
def paper_config():
    return resolve_config({})


@pytest.fixture(scope="session")
def paper_geometry(paper_config):
    return paper_config.geometry()


@pytest.fixture(scope="session")
def paper_constants(paper_config):
    return paper_config.constants()


@pytest.fixture(scope="session")
def fast_mc():
    """Reduced Monte Carlo settings for unit tests (not benchmarks)."""
    return MCConfig(
        pair_count=1 << 16,
        seed=23,
        time_samples=32,
        chunk_size=1 << 14,
        kernel_pair_count=1 << 17,
        kernel_time_samples=16,
        row_pair_count=1 << 14,
    )


@pytest.fixture(scope="session")
def shrunken_geometry():
    """Small volumes where the quadrature oracle is cheap and accurate."""
    return ExperimentGeometry(
        sphere=SourceSphere(radius=20e-6, nucleon_density=6.8e30),
        kinematics=VibrationKinematics(gap_min=5e-6, amplitude=0.5e-6, frequency=1953.0),
        slab=SensorSlab(extent=(20e-6, 20e-6), thickness=5e-6),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
