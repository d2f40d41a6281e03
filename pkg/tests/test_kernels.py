import numpy as np
import pytest

from exotic_limits.kernels import (
    CONSTANTS,
    CouplingHypothesis,
    InteractionKind,
    PhysicalConstants,
    field_vector_av,
    field_vector_sp,
    potential_av,
    potential_sp,
    projected_field_av,
    projected_field_sp,
)

AV = CouplingHypothesis(InteractionKind.AV, 1e-20, 1e-4)
SP = CouplingHypothesis(InteractionKind.SP, 1e-20, 1e-4)
Z = np.array([0.0, 0.0, 1.0])


class TestPotentialAV:
    def test_velocity_perpendicular_to_spin(self):
        v = potential_av([1e-4, 0, 0], [0, 1e-3, 0], Z, AV)
        assert v == 0.0

    def test_zero_coupling(self):
        hyp = CouplingHypothesis(InteractionKind.AV, 0.0, 1e-4)
        assert potential_av([0, 0, -1e-4], [0, 0, 1e-3], Z, hyp) == 0.0

    def test_closed_form_spot_value(self):
        # frozen from a 30-digit independent evaluation of
        # g (hbar/4pi) (e^-1 / 1e-4) * 1e-3
        v = potential_av([0, 0, -1e-4], [0, 0, 1e-3], Z, AV)
        assert v == pytest.approx(3.08725011078e-55, rel=1e-10)

    def test_wrong_kind_rejected(self):
        with pytest.raises(ValueError):
            potential_av([0, 0, 1e-4], [0, 0, 1e-3], Z, SP)

    def test_singular_origin_rejected(self):
        with pytest.raises(ValueError):
            potential_av([0.0, 0.0, 0.0], [0, 0, 1e-3], Z, AV)


class TestPotentialSP:
    def test_displacement_perpendicular_to_spin(self):
        assert potential_sp([1e-4, 0, 0], Z, SP) == 0.0

    def test_long_range_limit_drops_yukawa_term(self):
        # lambda -> infinity leaves g hbar^2/(8 pi m_e) (1/r^2) (sigma.e_r)
        far = CouplingHypothesis(InteractionKind.SP, 1e-20, 1e6)
        r = 1e-4
        got = potential_sp([0, 0, r], Z, far)
        expected = (
            1e-20 * CONSTANTS.hbar**2 / (8 * np.pi * CONSTANTS.electron_mass) / r**2
        )
        assert got == pytest.approx(expected, rel=1e-6)

    def test_closed_form_spot_value(self):
        # frozen from a 30-digit independent evaluation; e_r = -z so the
        # projection is negative
        v = potential_sp([0, 0, -1e-4], Z, SP)
        assert v == pytest.approx(-3.57403647222e-52, rel=1e-10)


class TestProjectedAV:
    def test_zero_velocity(self):
        assert projected_field_av(1e-4, 0.0, 0.5, AV) == 0.0

    def test_perpendicular_axis(self):
        assert projected_field_av(1e-4, 1e-3, np.pi / 2, AV) == pytest.approx(
            0.0, abs=1e-30
        )

    def test_linearity_in_coupling(self):
        double = CouplingHypothesis(InteractionKind.AV, 2e-20, 1e-4)
        base = projected_field_av(1e-4, 1e-3, 0.9553, AV)
        assert projected_field_av(1e-4, 1e-3, 0.9553, double) == 2 * base

    def test_depends_only_on_distance(self):
        # any displacement with the same norm gives the same field
        vecs = [(1e-4, 0, 0), (0, 1e-4, 0), (6e-5, 0, 8e-5)]
        r = [np.linalg.norm(v) for v in vecs]
        fields = projected_field_av(np.array(r), 1e-3, 0.9553, AV)
        assert np.allclose(fields, fields[0], rtol=1e-12)


class TestProjectedSP:
    def test_zero_axial_component(self):
        assert projected_field_sp(1e-4, 0.0, 0.9553, SP) == 0.0

    def test_odd_in_z(self):
        r = np.hypot(1e-4, 3e-5)
        up = projected_field_sp(r, 3e-5, 0.9553, SP)
        down = projected_field_sp(r, -3e-5, 0.9553, SP)
        assert up == -down

    def test_matches_full_vector_on_axis(self):
        # on the vibration axis the full vector projection reduces to the
        # tabulated scalar form exactly
        theta = np.arccos(1 / np.sqrt(3))
        axis = np.array([0.0, np.sin(theta), np.cos(theta)])
        for z in (-2e-4, -5e-5, 7e-5):
            r_vec = np.array([0.0, 0.0, z])
            full = field_vector_sp(r_vec, SP) @ axis
            scalar = projected_field_sp(abs(z), z, theta, SP)
            assert scalar == pytest.approx(full, rel=1e-12)

    def test_av_full_vector_projection_equals_projected(self):
        theta = np.arccos(1 / np.sqrt(3))
        axis = np.array([0.0, np.sin(theta), np.cos(theta)])
        v_vec = np.array([0.0, 0.0, -4e-3])
        r_vec = np.array([3e-5, -2e-5, -9e-5])
        full = field_vector_av(r_vec, v_vec, AV) @ axis
        scalar = projected_field_av(np.linalg.norm(r_vec), v_vec[2], theta, AV)
        assert scalar == pytest.approx(full, rel=1e-12)


class TestKernelShape:
    def test_monotone_decay(self):
        r = np.logspace(-5, -2, 40)
        av = np.abs(projected_field_av(r, 1e-3, 0.9553, AV))
        sp = np.abs(projected_field_sp(r, r, 0.9553, SP))  # fixed direction
        assert np.all(np.diff(av) < 0)
        assert np.all(np.diff(sp) < 0)

    def test_linearity_exact(self):
        r = np.logspace(-5, -3, 7)
        base = projected_field_sp(r, 0.3 * r, 0.9553, SP)
        double = projected_field_sp(
            r, 0.3 * r, 0.9553, CouplingHypothesis(InteractionKind.SP, 2e-20, 1e-4)
        )
        assert np.array_equal(double, 2 * base)


class TestTypes:
    def test_constants_positive(self):
        with pytest.raises(ValueError):
            PhysicalConstants(hbar=-1e-34)

    def test_gamma_default_is_28_ghz(self):
        assert CONSTANTS.gamma_e == pytest.approx(2 * np.pi * 28e9)

    def test_hypothesis_validation(self):
        with pytest.raises(ValueError):
            CouplingHypothesis(InteractionKind.AV, 1e-20, 0.0)
        with pytest.raises(ValueError):
            CouplingHypothesis(InteractionKind.AV, np.nan, 1e-4)
        assert CouplingHypothesis("sp", -1e-20, 1e-4).kind is InteractionKind.SP
