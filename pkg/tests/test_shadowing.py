import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from cusped_flow.concatenation import Concatenation
from cusped_flow.errors import DomainError, ProjectionFailure
from cusped_flow.hyp_geometry import GeodesicSegment, HalfPlanePoint, UnitTangent, dist, geodesic_between
from cusped_flow.metric_engine import wp_cusp_model
from cusped_flow.shadowing import (
    bound_from_ea,
    distance_profile,
    polygon_checks,
    random_polygonal,
    run_trial,
    shadowing_experiment,
    verify_derivative_bound,
)

B_01 = 0.40303530556388645


def bent(turns, lengths, start=UnitTangent(HalfPlanePoint(0.0, 1.0), 0.3)):
    segs, t = [], start
    for i, L in enumerate(lengths):
        seg = GeodesicSegment.from_tangent(t, L)
        segs.append(seg)
        if i < len(turns):
            t = UnitTangent(seg.end, seg.end_tangent.dir + turns[i])
    return Concatenation.from_segments(segs)


def chord_of(C):
    return geodesic_between(C.segments[0].start, C.segments[-1].end)


def brute_max_distance(C, chord, n=400):
    worst = 0.0
    for seg in C.segments:
        for s in np.linspace(0.0, seg.length, n):
            p = seg.point(float(s))
            r = minimize_scalar(lambda u: dist(p, chord.point(u)), bounds=(0.0, chord.length),
                                method="bounded", options={"xatol": 1e-12})
            worst = max(worst, r.fun, 0.0)
    return worst


class TestBound:
    def test_zero(self):
        assert bound_from_ea(0.0) == 0.0

    def test_frozen_value(self):
        assert bound_from_ea(0.1) == pytest.approx(B_01, rel=1e-14)

    def test_matches_high_precision(self):
        mpmath.mp.dps = 40
        phi = mpmath.mpf("0.1") + mpmath.asin(mpmath.mpf("0.1"))
        ref = mpmath.acosh((mpmath.sin(phi) ** 2 + 1) / mpmath.cos(phi) ** 2)
        assert bound_from_ea(0.1) == pytest.approx(float(ref), rel=1e-14)

    def test_curvature_scaling(self):
        assert bound_from_ea(0.2, kappa=-4.0) == pytest.approx(bound_from_ea(0.2) / 2, rel=1e-14)

    @pytest.mark.parametrize("ea,kappa", [(-0.01, -1.0), (0.6, -1.0), (0.1, 0.0), (0.1, 1.0)])
    def test_domain(self, ea, kappa):
        with pytest.raises(DomainError):
            bound_from_ea(ea, kappa)

    @given(st.floats(0.0, 0.5), st.floats(0.0, 0.5))
    def test_monotone(self, a, b):
        lo, hi = sorted((a, b))
        assert bound_from_ea(lo) <= bound_from_ea(hi)


class TestProfile:
    def test_straight_curve(self):
        C = bent([], [2.0])
        prof = distance_profile(C, chord_of(C))
        assert prof.max_F < 1e-9
        assert np.max(np.abs(prof.dF)) < 1e-6

    def test_right_angle_against_brute_force(self):
        C = bent([math.pi / 2], [1.0, 1.0])
        chord = chord_of(C)
        prof = distance_profile(C, chord)
        assert prof.max_F == pytest.approx(brute_max_distance(C, chord), abs=1e-6)
        # isosceles right triangle with legs 1: altitude from the right-angle vertex
        alt = math.asinh(math.sinh(1.0) * math.sin(math.atan(math.tanh(1.0) / math.sinh(1.0))))
        assert prof.max_F == pytest.approx(alt, abs=1e-6)

    @settings(max_examples=25)
    @given(st.lists(st.floats(-0.2, 0.2), min_size=1, max_size=4), st.floats(0.3, 2.0))
    def test_derivative_bound(self, turns, L):
        C = bent(turns, [L] * (len(turns) + 1))
        prof = distance_profile(C, chord_of(C), per_unit=128)
        rep = verify_derivative_bound(prof, C.ea_total)
        assert rep.passed, rep
        assert prof.convexity_defect() > -1e-4

    def test_derivative_bound_at_quarter_turn(self):
        C = bent([math.pi / 2], [1.5, 0.7])
        prof = distance_profile(C, chord_of(C))
        assert verify_derivative_bound(prof, C.ea_total).passed

    def test_rejects_cusp_model(self):
        W = wp_cusp_model()
        from cusped_flow.metric_engine import integrate_geodesic

        g = integrate_geodesic(W, (1.0, 0.0), (0.0, 1.0), 0.5)
        C = Concatenation.from_segments([g], W)
        with pytest.raises(ProjectionFailure):
            distance_profile(C, g)


class TestPolygon:
    @settings(max_examples=25)
    @given(st.integers(0, 10_000))
    def test_random_polygonal(self, seed):
        C = random_polygonal(np.random.default_rng(seed), 0.3)
        checks = polygon_checks(C, chord_of(C))
        assert all(checks["interior"])
        assert all(s >= -1e-9 for s in checks["angle_slack"])


class TestExperiment:
    def test_two_hundred_trials(self):
        summary = shadowing_experiment(200, seed=7, ea_max=0.1)
        assert summary.pass_rate == 1.0
        assert summary.derivative_pass_rate == 1.0
        assert summary.quantiles["max"] <= B_01 + 1e-3

    def test_empty(self):
        summary = shadowing_experiment(0, seed=1)
        assert summary.rows == () and summary.quantiles == {}

    def test_twist_family(self):
        summary = shadowing_experiment(20, seed=3, ea_max=0.2, family="twist")
        assert summary.pass_rate == 1.0

    def test_trial_is_reproducible(self):
        assert run_trial("polygonal", 0.1, 5, 2) == run_trial("polygonal", 0.1, 5, 2)

    def test_unknown_family(self):
        with pytest.raises(ValueError):
            shadowing_experiment(1, seed=0, family="spiral")
