import math

import numpy as np
import pytest

from app.utils.errors import InvalidInputError, NumericalFailure, PreconditionError
from app.utils.melnikov import (
    MelnikovSample,
    check_zero_divergence,
    crossing_schedule,
    first_nonvanishing_order,
    m1_closed_form,
    m1_general,
    m1_quadrature,
    m2_closed_form,
    m2_quadrature,
    sample_melnikov,
)
from app.utils.model import PerturbedSystem, ShapeFunction, ZonePartition, zero_harness


class TestCrossingSchedule:
    def test_orbit_inside_first_zone(self, example_partition):
        schedule = crossing_schedule(example_partition, 0.5)
        assert schedule.crossing_times == ()
        assert len(schedule.segments) == 1
        assert schedule.segments[0].zone == 0
        assert schedule.segments[0].t_end == pytest.approx(2.0 * math.pi)
        assert not schedule.grazing

    def test_one_breakpoint_crossed(self, example_partition):
        schedule = crossing_schedule(example_partition, 1.5)
        assert schedule.crossing_times == pytest.approx((0.729728, 2.411865), abs=1e-6)
        assert [s.zone for s in schedule.segments] == [0, 1, 0]
        assert schedule.m == 1

    def test_zones_match_dense_sampling(self, example_partition):
        schedule = crossing_schedule(example_partition, 2.7)
        for t in np.linspace(0.0, 2.0 * math.pi, 2001)[:-1]:
            if min(abs(t - c) for c in schedule.crossing_times) < 1e-9:
                continue
            assert schedule.zone_at(t) == example_partition.zone_index(2.7 * math.sin(t))

    def test_grazing_radius(self, example_partition):
        schedule = crossing_schedule(example_partition, 1.0)
        assert schedule.grazing
        assert [s.zone for s in schedule.segments] == [0]

    @pytest.mark.parametrize("r", [0.0, -1.0, math.nan, math.inf])
    def test_rejects_bad_radius(self, example_partition, r):
        with pytest.raises(InvalidInputError) as excinfo:
            crossing_schedule(example_partition, r)
        assert excinfo.value.field == "r"


class TestFirstOrder:
    def test_closed_form_linear_pieces(self, example_partition):
        pieces = m1_closed_form(example_partition, ShapeFunction.linear(), 1.5)
        assert pieces.first == pytest.approx(1.75)
        assert pieces.second == pytest.approx(-0.625)
        assert pieces.third == pytest.approx(-1.125)
        assert pieces.total == 0.0

    def test_closed_form_cubic_pieces(self, example_partition):
        pieces = m1_closed_form(example_partition, ShapeFunction.cubic(), 1.5)
        assert pieces.first == pytest.approx(2.28125)
        assert pieces.second == pytest.approx(-1.015625)
        assert pieces.third == pytest.approx(-1.265625)
        assert pieces.total == 0.0

    def test_pieces_scale_with_the_partition(self, example_partition):
        doubled = ZonePartition((2.0, 4.0), example_partition.slopes)
        base = m1_closed_form(example_partition, ShapeFunction.linear(), 1.5)
        scaled = m1_closed_form(doubled, ShapeFunction.linear(), 3.0)
        assert (scaled.first, scaled.second, scaled.third) == pytest.approx((7.0, -2.5, -4.5))
        assert scaled.first == pytest.approx(4.0 * base.first)
        assert scaled.total == 0.0

    @pytest.mark.parametrize("r", [0.5, 1.5, 2.5, 4.0])
    def test_quadrature_vanishes(self, example_system, cubic_system, r):
        assert m1_quadrature(example_system, r, 1e-10) == pytest.approx(0.0, abs=1e-10)
        assert m1_quadrature(cubic_system, r, 1e-10) == pytest.approx(0.0, abs=1e-10)

    def test_relaxed_slopes_still_vanish(self, relaxed_system):
        for r in (0.7, 1.5, 3.2):
            assert m1_closed_form(relaxed_system.partition, relaxed_system.shape, r).total == pytest.approx(0.0, abs=1e-12)
            assert m1_quadrature(relaxed_system, r) == pytest.approx(0.0, abs=2e-10)

    def test_quadrature_failure_carries_estimate(self, example_partition):
        wiggly = ShapeFunction(h=lambda x: -np.cos(300.0 * x) / 300.0, h_prime=lambda x: np.sin(300.0 * x),
                               label="wiggly")
        system = PerturbedSystem(example_partition, wiggly)
        with pytest.raises(NumericalFailure) as excinfo:
            m1_quadrature(system, 2.5, tol=1e-14, limit=1)
        assert excinfo.value.estimate is not None
        assert excinfo.value.error > 1e-14


class TestGeneralFirstOrder:
    def test_van_der_pol_values(self, van_der_pol):
        assert m1_general(van_der_pol, 1.0) == pytest.approx(math.pi * 0.75, abs=1e-9)
        assert m1_general(van_der_pol, 2.0) == pytest.approx(0.0, abs=1e-9)
        r = 3.0
        assert m1_general(van_der_pol, r) == pytest.approx(math.pi * r * r * (1.0 - r * r / 4.0), rel=1e-9)

    def test_wrapped_family_matches_quadrature(self, example_system):
        harness = example_system.as_harness()
        for r in (0.5, 1.5, 2.5):
            assert m1_general(harness, r) == pytest.approx(m1_quadrature(example_system, r), abs=1e-10)

    def test_zero_harness(self):
        assert m1_general(zero_harness(), 1.3) == 0.0

    def test_divergence_weight_is_applied(self):
        # x' = y, y' = -x - 2c y: weight exp(-int div f) enters the integrand
        base = zero_harness()
        damped = type(base)(
            f1=lambda x, y: y,
            f2=lambda x, y: -x,
            g1=lambda x, y, eps: 0.0,
            g2=lambda x, y, eps: y,
            orbit=base.orbit,
            label="weighted",
            divergence=lambda x, y: 0.1,
        )
        period = 2.0 * math.pi
        r = 1.0
        # integral of exp(-0.1 t) r^2 cos^2 t over one period
        expected = r * r * (1.0 - math.exp(-0.1 * period)) * (0.5 / 0.1 + 0.5 * 0.1 / (0.01 + 4.0))
        assert m1_general(damped, r, validate=False) == pytest.approx(expected, rel=1e-8)


class TestSecondOrder:
    def test_closed_form(self):
        assert m2_closed_form(1.0) == math.pi
        assert m2_closed_form(1.5) == pytest.approx(7.068583, abs=1e-6)
        assert m2_closed_form(1e-8) > 0.0
        with pytest.raises(InvalidInputError):
            m2_closed_form(0.0)

    @pytest.mark.parametrize("r", [0.5, 1.0, 1.5, 2.0, 5.0])
    def test_quadrature_matches_pi_r_squared(self, example_system, r):
        assert m2_quadrature(example_system, r) == pytest.approx(math.pi * r * r, rel=1e-8)
        assert m2_closed_form(r) == math.pi * r * r

    def test_finite_difference_mode_agrees(self, example_system):
        analytic = m2_quadrature(example_system, 1.5)
        estimated = m2_quadrature(example_system, 1.5, mode="finite_difference")
        assert estimated == pytest.approx(analytic, abs=1e-7)

    def test_unknown_mode(self, example_system):
        with pytest.raises(InvalidInputError) as excinfo:
            m2_quadrature(example_system, 1.0, mode="symbolic")
        assert excinfo.value.field == "mode"

    def test_nonzero_divergence_names_the_point(self, example_partition):
        class Damped(PerturbedSystem):
            def zone_g(self, i, x, y, eps):
                return super().zone_g(i, x, y, eps) + 0.5 * y

        system = Damped(example_partition, ShapeFunction.linear())
        with pytest.raises(PreconditionError) as excinfo:
            check_zero_divergence(system, 1.5)
        assert excinfo.value.point is not None
        assert "at (x, y)" in str(excinfo.value)
        with pytest.raises(PreconditionError):
            m2_quadrature(system, 1.5)


class TestSamples:
    def test_sample_fields(self, example_system):
        sample = sample_melnikov(example_system, 1.5)
        assert sample.m1_closed == 0.0
        assert sample.m1_quad == pytest.approx(0.0, abs=1e-10)
        assert sample.m2_quad == pytest.approx(sample.m2_closed, rel=1e-8)
        assert not sample.grazing
        assert sample.note == ""

    def test_grazing_sample_is_flagged(self, example_system):
        assert sample_melnikov(example_system, 2.0).grazing

    def test_first_nonvanishing_order(self):
        vanishing = [MelnikovSample(r=1.0, m1_quad=1e-12, m2_quad=math.pi)]
        assert first_nonvanishing_order(vanishing) == 2
        assert first_nonvanishing_order([MelnikovSample(r=1.0, m1_quad=0.3, m2_quad=1.0)]) == 1
        assert first_nonvanishing_order([MelnikovSample(r=1.0, m1_quad=0.0, m2_quad=0.0)]) is None
