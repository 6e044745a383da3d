import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cusped_flow.concatenation import (
    Concatenation,
    closeness_outside,
    cusp_normalizer,
    exterior_angle_total,
    leg_end,
    leg_start,
    splice_at_infinity,
    twist_concatenate,
    twist_family,
    twist_spiral_analysis,
)
from cusped_flow.errors import CuspMismatch, EndpointMismatch
from cusped_flow.hyp_geometry import BoundaryPoint, Geodesic, HalfPlanePoint, geodesic_between
from cusped_flow.metric_engine import integrate_geodesic, wp_cusp_model

INF = BoundaryPoint.infinity()
I = HalfPlanePoint(0.0, 1.0)
AXIS = Geodesic(BoundaryPoint.cusp(0), INF)
W = wp_cusp_model()


def polyline(*pts):
    ps = [HalfPlanePoint(*p) for p in pts]
    return Concatenation.from_segments([geodesic_between(a, b) for a, b in zip(ps, ps[1:])])


class TestExteriorAngles:
    def test_single_segment(self):
        assert exterior_angle_total(polyline((0, 1), (0, 3))) == 0.0

    def test_right_angle(self):
        # the vertical line x = 0 meets the unit circle orthogonally at i
        C = polyline((0, 2), (0, 1), (math.sin(0.5), math.cos(0.5)))
        assert exterior_angle_total(C) == pytest.approx(math.pi / 2, abs=1e-12)

    def test_gap_rejected(self):
        a = geodesic_between(HalfPlanePoint(0, 1), HalfPlanePoint(0, 2))
        b = geodesic_between(HalfPlanePoint(0.1, 2), HalfPlanePoint(0.3, 2))
        with pytest.raises(EndpointMismatch):
            Concatenation.from_segments([a, b])

    def test_large_twist_output_is_nearly_straight(self):
        C = twist_concatenate(AXIS, AXIS, 0.5, 200)
        assert len(C.segments) == 3
        assert C.ea_total <= 0.05


class TestCuspNormalizer:
    @pytest.mark.parametrize("c", [Fraction(0), Fraction(3, 7), Fraction(-5, 3), Fraction(2), Fraction(-22, 9)])
    def test_sends_cusp_to_infinity(self, c):
        g = cusp_normalizer(BoundaryPoint(c, True))
        assert g.apply_boundary(BoundaryPoint(c, True)).is_infinite

    def test_infinity(self):
        assert cusp_normalizer(INF).apply_boundary(INF).is_infinite


class TestTwistSpiral:
    @pytest.mark.parametrize("n", [1, 2, 3, 8, 64])
    def test_closed_form_gap(self, n):
        a = twist_spiral_analysis(INF, I, I, n)
        assert a.initial_angle_gap == pytest.approx(math.atan(2.0 / n), abs=1e-12)
        assert a.terminal_angle_gap == pytest.approx(math.atan(2.0 / n), abs=1e-12)

    def test_n2_is_quarter_turn(self):
        assert twist_spiral_analysis(INF, I, I, 2).initial_angle_gap == pytest.approx(math.pi / 4, abs=1e-14)

    def test_height_grows(self):
        tops = [twist_spiral_analysis(INF, I, I, n).max_height for n in (2, 8, 32)]
        assert tops == sorted(tops) and tops[-1] > 10

    def test_rational_cusp_equivariance(self):
        # moving the whole configuration by g must not change the gaps
        c = BoundaryPoint(Fraction(2, 5), True)
        g = cusp_normalizer(c).inverse()
        a = twist_spiral_analysis(c, g.apply(I), g.apply(I), 4)
        assert a.initial_angle_gap == pytest.approx(math.atan(0.5), abs=1e-9)

    def test_wp_degenerate_n0(self):
        a = twist_spiral_analysis(None, (1.0, 0.0), (1.0, 0.0), 0, W)
        assert a.initial_angle_gap == pytest.approx(math.pi)
        assert a.terminal_angle_gap == pytest.approx(math.pi)

    def test_wp_family(self):
        fam = twist_family(None, (1.0, 0.0), (1.0, 0.0), [1, 2, 4, 8, 16], W)
        gaps = [a.initial_angle_gap for a in fam.analyses]
        assert all(b <= a for a, b in zip(gaps, gaps[1:]))
        mins = [a.min_ell for a in fam.analyses]
        assert all(b < a for a, b in zip(mins, mins[1:]))
        assert fam.L0 > 0 and fam.length_bound_holds()

    def test_hyperbolic_rate(self):
        ns = np.array([8, 16, 32, 64, 128])
        gaps = [twist_spiral_analysis(INF, I, I, int(n)).initial_angle_gap for n in ns]
        slope = np.polyfit(np.log(ns), np.log(gaps), 1)[0]
        assert slope == pytest.approx(-1.0, abs=0.02)


class TestTwistConcatenate:
    def test_level_two(self):
        C = twist_concatenate(AXIS, AXIS, 0.5, 8)
        assert len(C.segments) == 3
        assert C.exterior_angles == pytest.approx([math.atan(4 / 8)] * 2, abs=1e-12)

    def test_level_one(self):
        C = twist_concatenate(AXIS, AXIS, 1.0, 8)
        assert C.exterior_angles == pytest.approx([math.atan(2 / 8)] * 2, abs=1e-12)

    def test_doubling_halves(self):
        a = twist_concatenate(AXIS, AXIS, 0.5, 64).ea_total
        b = twist_concatenate(AXIS, AXIS, 0.5, 128).ea_total
        assert b / a == pytest.approx(0.5, abs=0.01)

    def test_twist_equivariance(self):
        shifted = Geodesic(BoundaryPoint.cusp(3), INF)
        a = twist_concatenate(AXIS, shifted, 0.5, 5)
        b = twist_concatenate(AXIS, AXIS, 0.5, 8)
        assert a.exterior_angles == pytest.approx(b.exterior_angles, abs=1e-12)
        assert np.allclose(leg_end(a.segments[-1]), leg_end(b.segments[-1]), atol=1e-12)

    def test_cusp_mismatch(self):
        other = Geodesic(BoundaryPoint.cusp(0), BoundaryPoint.cusp(1))
        with pytest.raises(CuspMismatch):
            twist_concatenate(AXIS, other, 0.5, 3)

    def test_agrees_with_inputs_outside_the_horoball(self):
        C = twist_concatenate(AXIS, AXIS, 0.5, 10)
        first, last = C.segments[0], C.segments[-1]
        assert leg_start(first)[0] == pytest.approx(0.0) and leg_end(first)[0] == pytest.approx(0.0)
        assert leg_start(last)[0] == pytest.approx(10.0) and leg_end(last)[0] == pytest.approx(10.0)
        assert leg_end(first)[1] == pytest.approx(2.0)

    @given(st.integers(20, 400))
    def test_chord_close_to_legs_below_level(self, n):
        C = splice_at_infinity(0.0, float(n), 2.0)
        near = closeness_outside(C, 2.0)
        far = closeness_outside(splice_at_infinity(0.0, float(2 * n), 2.0), 2.0)
        assert near["max_angle"] <= math.atan(4.0 / n) + 1e-9
        assert far["max_distance"] <= near["max_distance"] + 1e-12

    def test_cusp_model(self):
        g1 = integrate_geodesic(W, (1.0, 0.0), W.cusp_direction((1.0, 0.0)), 10)
        g2 = integrate_geodesic(W, (0.8, 0.3), W.cusp_direction((0.8, 0.3)), 10)
        small = twist_concatenate(g1, g2, 0.5, 40, W).ea_total
        big = twist_concatenate(g1, g2, 0.5, 5, W).ea_total
        assert small < big
