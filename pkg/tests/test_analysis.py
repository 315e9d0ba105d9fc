import math

import numpy as np
import pytest

from app.utils.analysis import (
    conjecture_report,
    find_roots,
    fit_expansion,
    harness_report,
    nudge_off_breakpoints,
    radius_grid,
    random_partition_trials,
    search_harness_roots,
    search_limit_cycles,
    sweep_melnikov,
)
from app.utils.errors import InvalidInputError
from app.utils.melnikov import m1_general, grazing_tolerance
from app.utils.model import PerturbedSystem, ShapeFunction


class TestSweep:
    def test_m1_vanishes_and_m2_is_positive(self, example_system):
        curve = sweep_melnikov(example_system, [0.5, 1.5, 2.5, 3.5])
        assert max(abs(v) for v in curve.column("m1_quad")) <= 2e-10
        assert all(v == 0.0 for v in curve.column("m1_closed"))
        np.testing.assert_allclose(curve.column("m2_quad"), [math.pi * r * r for r in curve.radii], rtol=1e-8)
        assert curve.order == 2

    def test_grazing_point_is_nudged_and_flagged(self, example_system):
        curve = sweep_melnikov(example_system, [0.5, 1.0, 1.5])
        sample = curve.samples[1]
        assert sample.grazing
        assert sample.r == 1.0 + 10.0 * grazing_tolerance(1.0)
        assert not curve.samples[0].grazing

    def test_nudge_leaves_other_radii(self, example_partition):
        assert nudge_off_breakpoints(example_partition, 1.3) == (1.3, False)

    def test_nudge_stays_below_the_next_radius(self, example_system):
        curve = sweep_melnikov(example_system, [0.5, 1.0, 1.000000005, 1.5])
        radii = curve.radii
        assert len(radii) == 4
        assert all(b > a for a, b in zip(radii, radii[1:]))
        assert radii[1] == 1.0 - 10.0 * grazing_tolerance(1.0)
        assert curve.samples[1].grazing
        assert all(not s.note for s in curve.samples)

    def test_nudge_without_room_keeps_the_radius(self, example_partition):
        tol = grazing_tolerance(1.0)
        r, nudged = nudge_off_breakpoints(example_partition, 1.0, lower=1.0 - 2.0 * tol, upper=1.0 + 2.0 * tol)
        assert (r, nudged) == (1.0, True)

    def test_m2_does_not_depend_on_the_shape(self, cubic_system):
        curve = sweep_melnikov(cubic_system, [0.5, 1.5, 2.5])
        assert max(abs(v) for v in curve.column("m1_quad")) <= 2e-10
        np.testing.assert_allclose(curve.column("m2_quad"), [math.pi * r * r for r in curve.radii], rtol=1e-8)
        assert curve.order == 2

    def test_quadrature_limit_reaches_the_samples(self, example_partition):
        wiggly = ShapeFunction(h=lambda x: -np.cos(300.0 * x) / 300.0, h_prime=lambda x: np.sin(300.0 * x),
                               label="wiggly")
        curve = sweep_melnikov(PerturbedSystem(example_partition, wiggly), [2.5, 3.5], tol=1e-14, limit=1)
        assert curve.radii == [2.5, 3.5]
        assert all("m1_quad" in s.note for s in curve.samples)
        assert all(math.isfinite(s.m2_quad) for s in curve.samples)

    def test_finite_difference_m2_on_request(self, example_system):
        assert all(math.isnan(v) for v in sweep_melnikov(example_system, [1.5]).column("m2_fd"))
        curve = sweep_melnikov(example_system, [0.5, 1.5], epsilon_step=1e-6)
        np.testing.assert_allclose(curve.column("m2_fd"), curve.column("m2_quad"), rtol=1e-6)

    @pytest.mark.parametrize("grid", [[], [1.0, 0.5], [0.0, 1.0], [1.0, 1.0]])
    def test_rejects_bad_grid(self, example_system, grid):
        with pytest.raises(InvalidInputError) as excinfo:
            sweep_melnikov(example_system, grid)
        assert excinfo.value.field == "r_grid"

    def test_parallel_sweep_keeps_order(self, example_system):
        grid = list(radius_grid(0.25, 4.0, 12))
        serial = sweep_melnikov(example_system, grid)
        threaded = sweep_melnikov(example_system, grid, jobs=4)
        assert serial.samples == threaded.samples

    def test_log_grid(self):
        np.testing.assert_allclose(radius_grid(0.1, 10.0, 3, "log"), [0.1, 1.0, 10.0])
        with pytest.raises(InvalidInputError):
            radius_grid(1.0, 2.0, 3, "cubic")


class TestExpansionFit:
    def test_recovers_second_order_coefficient(self, example_system):
        fit = fit_expansion(example_system, 1.5, [0.02, 0.01, 0.005, 0.0025])
        assert abs(fit.c1) <= 1e-4
        assert fit.c2 == pytest.approx(7.068583, rel=0.02)
        assert fit.c2_relative_error <= 5e-3
        assert fit.c3 is not None
        assert fit.residual_norm >= 0.0
        assert math.isfinite(fit.c2_uncertainty)

    def test_halving_the_grid_changes_c2_little(self, example_system):
        coarse = fit_expansion(example_system, 1.5, [0.02, 0.01, 0.005, 0.0025])
        fine = fit_expansion(example_system, 1.5, [0.01, 0.005, 0.0025, 0.00125])
        assert abs(fine.c2 - coarse.c2) <= 5e-3 * coarse.target_m2

    def test_two_term_basis(self, example_system):
        fit = fit_expansion(example_system, 1.5, [0.02, 0.01, 0.005, 0.0025], terms=2)
        assert fit.c3 is None
        assert fit.c2 == pytest.approx(2.25 * math.pi, rel=0.02)

    def test_zero_perturbation_system(self, zero_system):
        fit = fit_expansion(zero_system, 1.2, [0.02, 0.01, 0.005, 0.0025])
        assert fit.c2 == pytest.approx(math.pi * 1.44, rel=1e-3)

    @pytest.mark.parametrize("epsilons", [
        [0.02, 0.01, 0.005],
        [0.02, 0.01, 0.005, 0.0],
        [0.1, 0.05, 0.025, 0.0125],
        [0.02, 0.02, 0.01, 0.005],
    ])
    def test_rejects_bad_grids(self, example_system, epsilons):
        with pytest.raises(InvalidInputError) as excinfo:
            fit_expansion(example_system, 1.5, epsilons)
        assert excinfo.value.field == "epsilons"


class TestFindRoots:
    def test_two_simple_roots(self):
        report = find_roots(lambda r: (r - 1.0) * (r - 2.0), interval=(0.0, 3.0))
        assert [root.location for root in report.roots] == pytest.approx([1.0, 2.0], abs=1e-9)
        assert all(root.multiplicity == "simple" for root in report.roots)
        assert report.predicted_cycles == 2

    def test_van_der_pol_root(self, van_der_pol):
        report = search_harness_roots(van_der_pol, 0.25, 4.0)
        assert report.predicted_cycles == 1
        root = report.roots[0]
        assert root.location == pytest.approx(2.0, abs=1e-6)
        assert root.derivative == pytest.approx(-4.0 * math.pi, rel=0.05)

    def test_positive_function_has_no_roots(self):
        report = find_roots(lambda r: math.pi * r * r, interval=(0.1, 4.0))
        assert report.roots == []
        assert report.predicted_cycles == 0
        assert "no sign change detected" in report.notes

    def test_touching_root_is_only_suspected(self):
        report = find_roots(lambda r: (r - 1.5) ** 2 + 1e-9, interval=(0.0, 3.0), count=101)
        assert report.predicted_cycles == 0
        assert [root.multiplicity for root in report.roots] == ["suspected even"]
        assert report.roots[0].location == pytest.approx(1.5, abs=0.05)

    def test_exact_zero_sample(self):
        report = find_roots(samples=([0.0, 1.0, 2.0], [-1.0, 0.0, 1.0]))
        assert [root.location for root in report.roots] == [1.0]
        assert report.roots[0].multiplicity == "simple"

    def test_identically_zero(self):
        report = find_roots(samples=([0.0, 1.0, 2.0], [0.0, 0.0, 0.0]))
        assert report.roots == []
        assert report.notes

    def test_sampled_roots_use_interpolation(self):
        rs = np.linspace(0.0, 3.0, 31)
        report = find_roots(samples=(rs, rs - 1.55))
        assert report.roots[0].location == pytest.approx(1.55)
        assert "roots refined by interpolation between samples" in report.notes

    @pytest.mark.parametrize("kwargs, field", [
        ({"function": math.sin, "interval": (2.0, 1.0)}, "interval"),
        ({"function": math.sin, "interval": (0.0, math.inf)}, "interval"),
        ({"samples": ([0.0, 1.0], [1.0, math.nan])}, "samples"),
        ({"samples": ([0.0, 1.0, 2.0], [1.0, 2.0])}, "samples"),
        ({}, "samples"),
    ])
    def test_rejects_bad_input(self, kwargs, field):
        with pytest.raises(InvalidInputError) as excinfo:
            find_roots(**kwargs)
        assert excinfo.value.field == field


class TestLimitCycleSearch:
    @pytest.mark.slow
    def test_measured_displacement_has_no_roots(self, example_system):
        report = search_limit_cycles(example_system, 0.01, 0.25, 4.0, count=24)
        assert report.confirmed_roots == []
        assert all(value > 0.0 for _, value in report.samples)


class TestReports:
    def test_van_der_pol_report_predicts_one_cycle(self, van_der_pol):
        report = harness_report(van_der_pol, (0.25, 4.0))
        assert report.predicted_cycles == 1
        assert "limit cycle predicted near r=2.000000" in report.verdict
        assert m1_general(van_der_pol, 2.0) == pytest.approx(0.0, abs=1e-9)

    def test_melnikov_only_report(self, example_system):
        report = conjecture_report(example_system, (0.25, 4.0), epsilons=(), count=8)
        assert "consistent with Conjecture" in report.verdict
        assert report.evidence["m1_vanishes"]["holds"]
        assert report.evidence["m2_positive"]["holds"]
        assert report.predicted_cycles == 0
        assert any("Melnikov-level evidence only" in caveat for caveat in report.caveats)
        assert any("corroboration" in caveat for caveat in report.caveats)

    @pytest.mark.slow
    def test_full_report(self, example_system):
        report = conjecture_report(example_system, (0.25, 4.0), epsilons=(0.005, 0.01, 0.02), count=16,
                                   seed=11, trials=3)
        assert report.verdict == "no limit cycle detected; evidence consistent with Conjecture"
        assert report.evidence["displacement_positive"]["holds"]
        assert report.evidence["expansion_fit"]["holds"]
        assert report.evidence["randomized_checks"]["holds"]
        assert report.failures == []
        assert len(report.displacements) == 48
        assert report.to_dict()["predicted_cycles"] == 0


class TestRandomizedTrials:
    def test_linear_and_cubic_shapes(self):
        rows = random_partition_trials(seed=1234, trials=100, shapes=("linear", "cubic"))
        assert len(rows) == 100 * 10 * 2
        assert max(row["relative_total"] for row in rows) <= 1e-12
        assert max(abs(row["m1_quad"]) for row in rows) <= 2e-10

    def test_higher_degree_shapes(self):
        rows = random_partition_trials(seed=99, trials=100, shapes=("power-4", "power-6", "random-polynomial"))
        assert max(row["relative_total"] for row in rows) <= 1e-12
        assert max(abs(row["m1_quad"]) for row in rows) <= 2e-10

    def test_seed_is_reproducible(self):
        first = random_partition_trials(seed=5, trials=3)
        second = random_partition_trials(seed=5, trials=3)
        assert first == second

    def test_unknown_shape(self):
        with pytest.raises(InvalidInputError):
            random_partition_trials(seed=0, trials=1, shapes=("quartic",))
