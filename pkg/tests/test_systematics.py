import numpy as np
import pytest

from exotic_limits.integrator import kernel_constant
from exotic_limits.kernels import InteractionKind
from exotic_limits.systematics import (
    BudgetEntry,
    BudgetRow,
    ParameterKind,
    build_budget,
    calibration_correction,
    combine_budget,
    field_offset_correction,
    kernel_sensitivity,
    phase_correction,
)

B_MEAN = 0.1e-12


class TestKernelSensitivity:
    def test_zero_sigma_is_exactly_zero(self, paper_geometry, fast_mc):
        row = BudgetRow("theta", ParameterKind.KERNEL, sigma=0.0, parameter="axis_angle")
        entry = kernel_sensitivity(row, InteractionKind.AV, 330e-6, paper_geometry,
                                   B_MEAN, fast_mc)
        assert entry.lower == 0.0 and entry.upper == 0.0

    def test_axis_angle_row_matches_analytic_projection(self, paper_geometry, fast_mc):
        # the axis angle enters both kernels only through cos(theta), so the
        # re-integration route must reproduce g0 cos(theta0)/cos(theta_i)
        # percentiles regardless of Monte Carlo noise (common seeds cancel)
        sigma = np.deg2rad(1.3)
        row = BudgetRow("theta", ParameterKind.KERNEL, sigma=sigma,
                        parameter="axis_angle", sample_count=200_000)
        entry = kernel_sensitivity(row, InteractionKind.AV, 330e-6, paper_geometry,
                                   B_MEAN, fast_mc)
        theta0 = paper_geometry.slab.axis_angle
        k0 = kernel_constant(InteractionKind.AV, 330e-6, paper_geometry, fast_mc,
                             pair_count=fast_mc.row_pair_count).value
        g0 = B_MEAN / k0
        rng = np.random.default_rng(99)
        thetas = rng.normal(theta0, sigma, 400_000)
        deltas = g0 * (np.cos(theta0) / np.cos(thetas) - 1.0)
        lo, hi = np.percentile(deltas, [16, 84])
        assert entry.lower == pytest.approx(lo, rel=0.05)
        assert entry.upper == pytest.approx(hi, rel=0.05)

    @pytest.mark.parametrize("parameter,sigma", [("radius", 3e-6), ("thickness", 1e-6)])
    def test_symmetric_parameter_gives_symmetric_interval(
        self, paper_geometry, fast_mc, parameter, sigma
    ):
        # these enter the kernel smoothly and almost linearly over +-1 sigma
        row = BudgetRow(parameter, ParameterKind.KERNEL, sigma=sigma, parameter=parameter)
        entry = kernel_sensitivity(row, InteractionKind.AV, 330e-6, paper_geometry,
                                   B_MEAN, fast_mc)
        scale = max(abs(entry.lower), entry.upper)
        assert abs(entry.upper + entry.lower) <= 0.01 * scale

    def test_lateral_offset_consistent_between_axes(self, paper_geometry, fast_mc):
        # the radial treatment of the deviation row assumes near symmetry
        # between x and y offsets of the almost-square slab
        kx = kernel_constant(
            InteractionKind.AV, 330e-6,
            paper_geometry.with_updates(lateral_offset=(10e-6, 0.0)),
            fast_mc, pair_count=fast_mc.row_pair_count,
        )
        ky = kernel_constant(
            InteractionKind.AV, 330e-6,
            paper_geometry.with_updates(lateral_offset=(0.0, 10e-6)),
            fast_mc, pair_count=fast_mc.row_pair_count,
        )
        assert kx.value == pytest.approx(ky.value, rel=5e-3)

    def test_interval_brackets_zero(self, paper_geometry, fast_mc):
        row = BudgetRow("distance", ParameterKind.KERNEL, sigma=0.5e-6,
                        parameter="gap_min", sample_count=10_000)
        entry = kernel_sensitivity(row, InteractionKind.SP, 30e-6, paper_geometry,
                                   -1.3e-12, fast_mc)
        assert entry.lower <= 0.0 <= entry.upper


class TestSimpleCorrections:
    def test_field_offset_mapping(self):
        lo, hi = field_offset_correction(0.5e-12, 1.7e8)
        assert hi == pytest.approx(0.5e-12 / 1.7e8, rel=1e-12)
        assert lo == -hi
        assert field_offset_correction(0.0, 1.7e8) == (0.0, 0.0)

    def test_phase_zero_sigma(self, rng):
        assert phase_correction(0.0, 1e-23, 10_000, rng) == (0.0, 0.0)

    def test_phase_one_sided_and_scales_with_coupling(self):
        rng1 = np.random.default_rng(5)
        rng2 = np.random.default_rng(5)
        lo1, hi1 = phase_correction(np.deg2rad(9), 1e-23, 100_000, rng1)
        lo2, hi2 = phase_correction(np.deg2rad(9), 2e-23, 100_000, rng2)
        assert lo1 == 0.0  # capture loss cannot fake a smaller coupling
        assert hi1 > 0
        assert hi2 == pytest.approx(2 * hi1, rel=1e-9)

    def test_phase_negative_central_coupling_flips_side(self):
        rng = np.random.default_rng(5)
        lo, hi = phase_correction(np.deg2rad(9), -1e-23, 100_000, rng)
        assert hi == 0.0 and lo < 0

    def test_calibration_exact_linear(self):
        lo, hi = calibration_correction(2.29e5, 0.03e5, 8.8e-24)
        assert hi == pytest.approx(8.8e-24 * 0.03 / 2.29, rel=1e-12)
        assert lo == -hi
        assert calibration_correction(2.29e5, 0.0, 8.8e-24) == (0.0, 0.0)
        lo2, hi2 = calibration_correction(2.29e5, 0.06e5, 8.8e-24)
        assert hi2 == pytest.approx(2 * hi, rel=1e-12)


class TestCombine:
    def test_single_entry_is_its_own_total(self):
        entry = BudgetEntry("only", "x", -2e-25, 3e-25)
        budget = combine_budget(InteractionKind.AV, 330e-6, 1e-23, 1e10, [entry])
        assert budget.total_lower == -2e-25
        assert budget.total_upper == 3e-25
        assert budget.symmetric_total == 3e-25

    def test_quadrature_per_side(self):
        entries = [
            BudgetEntry("a", "", -3e-25, 4e-25),
            BudgetEntry("b", "", -4e-25, 3e-25),
        ]
        budget = combine_budget(InteractionKind.AV, 330e-6, 1e-23, 1e10, entries)
        assert budget.total_upper == pytest.approx(5e-25)
        assert budget.total_lower == pytest.approx(-5e-25)

    def test_growing_a_sigma_never_shrinks_total(self, paper_geometry, fast_mc):
        rows = [
            BudgetRow("theta", ParameterKind.KERNEL, sigma=np.deg2rad(s),
                      parameter="axis_angle", sample_count=20_000)
            for s in (1.3, 2.6)
        ]
        budgets = [
            build_budget(InteractionKind.AV, 330e-6, paper_geometry, fast_mc, [row],
                         B_MEAN)
            for row in rows
        ]
        assert budgets[1].total_upper >= budgets[0].total_upper
        assert abs(budgets[1].total_lower) >= abs(budgets[0].total_lower)

    def test_empty_budget_rejected(self):
        with pytest.raises(ValueError):
            combine_budget(InteractionKind.AV, 330e-6, 1e-23, 1e10, [])

    def test_entry_must_bracket_zero(self):
        with pytest.raises(ValueError):
            BudgetEntry("bad", "", 1e-25, 2e-25)


class TestBuildBudget:
    def test_bit_exact_reproducibility(self, paper_geometry, fast_mc, paper_config):
        rows = paper_config.budget_rows
        a = build_budget(InteractionKind.SP, 30e-6, paper_geometry, fast_mc, rows,
                         -1.3e-12, node_count=5)
        b = build_budget(InteractionKind.SP, 30e-6, paper_geometry, fast_mc, rows,
                         -1.3e-12, node_count=5)
        assert a.total_lower == b.total_lower
        assert a.total_upper == b.total_upper
        for ea, eb in zip(a.entries, b.entries):
            assert (ea.lower, ea.upper) == (eb.lower, eb.upper)

    def test_row_kinds_dispatch(self, paper_geometry, fast_mc, paper_config):
        budget = build_budget(
            InteractionKind.AV, 330e-6, paper_geometry, fast_mc,
            paper_config.budget_rows, B_MEAN, node_count=5,
        )
        names = [e.name for e in budget.entries]
        assert names == ["diamagnetism", "theta", "distance", "radius",
                         "thickness", "amplitude", "deviation", "phase",
                         "calibration"]
        assert all(e.lower <= 0 <= e.upper for e in budget.entries)

    def test_row_validation(self):
        with pytest.raises(ValueError):
            BudgetRow("x", ParameterKind.KERNEL, sigma=1.0)  # no parameter
        with pytest.raises(ValueError):
            BudgetRow("x", ParameterKind.PHASE, sigma=-1.0)
        with pytest.raises(ValueError):
            BudgetRow("x", ParameterKind.PHASE, sigma=1.0, sample_count=10)
