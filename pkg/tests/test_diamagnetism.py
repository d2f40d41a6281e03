import numpy as np
import pytest

from exotic_limits.diamagnetism import (
    BiasField,
    analytic_dipole_field,
    diamag_map,
    diamag_sensor_average,
    diamag_vibration_extent,
    induced_field_at,
    misalignment_scan,
)
from exotic_limits.geometry import SourceSphere


@pytest.fixture(scope="module")
def setup(paper_geometry):
    return {
        "geom": paper_geometry,
        "sphere": paper_geometry.sphere,
        "axis": paper_geometry.slab.axis,
        "bias": BiasField(2e-3),
        "center": np.array([0.0, 0.0, 988e-6]),
    }


class TestAnalyticDipole:
    def test_far_field_inverse_cube(self, setup):
        # on the bias axis the field falls as 1/r^3: ratio 8 between
        # distances differing by a factor two
        s = setup
        p1 = s["center"] + s["axis"] * 100 * s["sphere"].radius
        p2 = s["center"] + s["axis"] * 200 * s["sphere"].radius
        b1 = analytic_dipole_field(p1, s["center"], s["sphere"], s["bias"], s["axis"])
        b2 = analytic_dipole_field(p2, s["center"], s["sphere"], s["bias"], s["axis"])
        ratio = np.linalg.norm(b1) / np.linalg.norm(b2)
        assert ratio == pytest.approx(8.0, rel=1e-9)
        # and stays parallel to the bias axis there
        b1_hat = b1 / np.linalg.norm(b1)
        assert abs(abs(b1_hat @ s["axis"]) - 1.0) < 1e-12

    def test_on_axis_field_is_twice_equatorial(self, setup):
        s = setup
        d = 3 * s["sphere"].radius
        on_axis = analytic_dipole_field(
            s["center"] + s["axis"] * d, s["center"], s["sphere"], s["bias"], s["axis"]
        )
        perp = np.array([1.0, 0.0, 0.0])
        equatorial = analytic_dipole_field(
            s["center"] + perp * d, s["center"], s["sphere"], s["bias"], s["axis"]
        )
        assert np.linalg.norm(on_axis) == pytest.approx(
            2 * np.linalg.norm(equatorial), rel=1e-9
        )

    def test_axial_projection_negative_for_diamagnet(self, setup):
        s = setup
        point = s["center"] + s["axis"] * 2 * s["sphere"].radius
        b = analytic_dipole_field(point, s["center"], s["sphere"], s["bias"], s["axis"])
        assert s["sphere"].susceptibility < 0
        assert b @ s["axis"] < 0

    def test_interior_rejected(self, setup):
        s = setup
        with pytest.raises(ValueError):
            analytic_dipole_field(
                s["center"] + np.array([0, 0, 0.5 * s["sphere"].radius]),
                s["center"], s["sphere"], s["bias"], s["axis"],
            )


class TestVolumeIntegralRoute:
    def test_zero_susceptibility(self, setup):
        s = setup
        sphere = SourceSphere(s["sphere"].radius, 6.8e30, susceptibility=0.0)
        point = s["center"] + np.array([0.0, 0.0, -2 * sphere.radius])
        b = induced_field_at(point, s["center"], sphere, s["bias"], s["axis"],
                             sphere_nodes=(16, 12, 16))
        assert np.all(b == 0.0)

    def test_quadrature_matches_analytic_dipole(self, setup, rng):
        # exterior equivalence, the oracle pair for the diamagnetism path
        s = setup
        for _ in range(10):
            u = rng.normal(size=3)
            u /= np.linalg.norm(u)
            point = s["center"] + u * s["sphere"].radius * rng.uniform(1.5, 4.0)
            bq = induced_field_at(point, s["center"], s["sphere"], s["bias"],
                                  s["axis"], sphere_nodes=(96, 64, 96))
            ba = analytic_dipole_field(point, s["center"], s["sphere"], s["bias"],
                                       s["axis"])
            assert np.linalg.norm(bq - ba) < 1e-3 * np.linalg.norm(ba)

    def test_mc_route_agrees_loosely(self, setup):
        s = setup
        point = s["center"] + np.array([0.0, 0.0, -2.5 * s["sphere"].radius])
        bq = induced_field_at(point, s["center"], s["sphere"], s["bias"], s["axis"],
                              method="mc", mc_samples=1 << 16,
                              rng=np.random.default_rng(6))
        ba = analytic_dipole_field(point, s["center"], s["sphere"], s["bias"], s["axis"])
        assert np.linalg.norm(bq - ba) < 0.02 * np.linalg.norm(ba)

    def test_interior_point_rejected(self, setup):
        s = setup
        with pytest.raises(ValueError):
            induced_field_at(s["center"], s["center"], s["sphere"], s["bias"], s["axis"])


class TestSensorAverage:
    def test_zero_susceptibility_gives_zero(self, setup):
        geom = setup["geom"].with_updates(susceptibility=0.0)
        assert diamag_sensor_average(geom, setup["bias"], 0.0, slab_nodes=(40, 40, 6)) == 0.0

    def test_linear_in_bias(self, setup):
        geom = setup["geom"]
        single = diamag_sensor_average(geom, BiasField(2e-3), 0.0, slab_nodes=(40, 40, 6))
        double = diamag_sensor_average(geom, BiasField(4e-3), 0.0, slab_nodes=(40, 40, 6))
        assert double == pytest.approx(2 * single, rel=1e-12)

    def test_linear_in_susceptibility(self, setup):
        geom = setup["geom"]
        doubled = geom.with_updates(susceptibility=2 * geom.sphere.susceptibility)
        single = diamag_sensor_average(geom, setup["bias"], 0.0, slab_nodes=(40, 40, 6))
        double = diamag_sensor_average(doubled, setup["bias"], 0.0, slab_nodes=(40, 40, 6))
        assert double == pytest.approx(2 * single, rel=1e-12)

    def test_average_is_cancellation_residual(self, setup):
        # the sensor-axis projection changes sign across the slab, so the
        # average sits far below the pointwise extrema
        geom, bias = setup["geom"], setup["bias"]
        avg = diamag_sensor_average(geom, bias, 0.0, slab_nodes=(80, 80, 8))
        _, _, field_map = diamag_map(geom, bias, 0.0, grid=(81, 81))
        assert abs(avg) < 0.05 * np.max(np.abs(field_map))

    def test_no_vibration_means_no_modulation(self, setup):
        geom = setup["geom"].with_updates(amplitude=0.0)
        extent = diamag_vibration_extent(geom, setup["bias"], time_samples=8,
                                         slab_nodes=(40, 40, 6))
        assert extent.peak_to_peak == pytest.approx(0.0, abs=1e-22)

    def test_modulation_amplitude_is_half_peak_to_peak(self, setup):
        extent = diamag_vibration_extent(setup["geom"], setup["bias"],
                                         time_samples=8, slab_nodes=(40, 40, 6))
        assert extent.modulation_amplitude == pytest.approx(extent.peak_to_peak / 2)


class TestMap:
    def test_sign_reversal_along_y(self, setup):
        _, _, field_map = diamag_map(setup["geom"], setup["bias"], 0.0, grid=(41, 41))
        center_column = field_map[20, :]  # x = 0, scan along y
        assert center_column.min() < 0 < center_column.max()

    def test_symmetric_in_x(self, setup):
        _, _, field_map = diamag_map(setup["geom"], setup["bias"], 0.0, grid=(41, 41))
        assert np.allclose(field_map, field_map[::-1, :], rtol=1e-10)

    def test_zero_susceptibility_zero_map(self, setup):
        geom = setup["geom"].with_updates(susceptibility=0.0)
        _, _, field_map = diamag_map(geom, setup["bias"], 0.0, grid=(21, 21))
        assert np.all(field_map == 0.0)


class TestMisalignmentScan:
    def test_centered_offset_included_and_worst_is_larger(self, setup):
        scan = misalignment_scan(setup["geom"], setup["bias"], max_offset=10e-6,
                                 steps=3, time_samples=8, slab_nodes=(48, 48, 6))
        assert scan["max_modulation_amplitude"] >= scan["centered"].modulation_amplitude
        assert max(abs(o) for o in scan["worst_offset"]) <= 10e-6
