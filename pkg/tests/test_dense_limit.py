import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cusped_flow.dense_limit import (
    ConcatenationPlan,
    accumulation_distance,
    build_concatenation,
    chord_between,
    chord_profile,
    chordal_limit,
    check_no_degeneration,
    coverage_curve,
    coverage_grid,
    default_plan,
    density_coverage,
    horocycle_point,
    minimal_twist,
    retained_segment,
    singular_geodesic_sequence,
)
from cusped_flow.errors import AngleBudgetInfeasible
from cusped_flow.hyp_geometry import BoundaryPoint, Geodesic
from cusped_flow.shadowing import bound_from_ea


@pytest.fixture(scope="module")
def full():
    return build_concatenation(default_plan(), 17)


@pytest.fixture(scope="module")
def limit(full):
    return chordal_limit(full, [2, 4, 8])


class TestSequence:
    def test_first_is_axis(self):
        g = singular_geodesic_sequence(5)[0]
        assert g.start.value == 0 and g.end.is_infinite

    @given(st.integers(0, 1000))
    @settings(max_examples=20)
    def test_distinct_rational(self, seed):
        seq = singular_geodesic_sequence(12, seed)
        keys = set()
        for g in seq[1:]:
            assert isinstance(g.start.value, Fraction) and isinstance(g.end.value, Fraction)
            keys.add(frozenset((g.start.value, g.end.value)))
        assert len(keys) == 11

    def test_count_checked(self):
        with pytest.raises(ValueError):
            singular_geodesic_sequence(0)

    def test_horocycle_point_height(self):
        g = Geodesic(BoundaryPoint(Fraction(1, 2), True), BoundaryPoint(Fraction(3), True))
        seg = retained_segment(g, 5.0)
        p = horocycle_point(g, True, 5.0)
        assert seg.start.z == pytest.approx(p.z)
        # the horocycle of height 5 at 1/2 is the circle of diameter 1/(5 * 2^2) tangent at 1/2
        r = 1.0 / (2 * 5.0 * 4)
        assert abs(p.z - complex(0.5, r)) == pytest.approx(r, rel=1e-9)


class TestPlan:
    @pytest.mark.parametrize("d1,d2", [(0.4, 0.2), (0.3, 0.2), (0.5, 0.0), (1.5, 0.2)])
    def test_rejects_bad_deltas(self, d1, d2):
        with pytest.raises(ValueError):
            ConcatenationPlan(tuple(singular_geodesic_sequence(3)), d1, d2)

    def test_rejects_large_budget(self):
        with pytest.raises(ValueError):
            ConcatenationPlan(tuple(singular_geodesic_sequence(3)), eps0=0.4)

    def test_positions(self):
        assert [ConcatenationPlan.position(j) for j in range(7)] == [0, 1, -1, 2, -2, 3, -3]

    def test_budget(self):
        p = default_plan(3)
        assert [p.budget(k) for k in (1, 2, 4)] == pytest.approx([0.1, 0.025, 0.00625])


class TestTwist:
    @pytest.mark.parametrize("Y,eps", [(5.0, 0.1), (2.0, 0.05), (5.0, 0.0123), (1.0, 0.3)])
    def test_closed_form(self, Y, eps):
        # each angle of a splice from 0 to n at height Y is atan(2Y/n)
        n = minimal_twist(0.0, 0.0, Y, eps)
        assert 2 * math.atan(2 * Y / n) <= eps
        assert 2 * math.atan(2 * Y / (n - 1)) > eps
        assert n == math.ceil(2 * Y / math.tan(eps / 2)) or n == math.ceil(2 * Y / math.tan(eps / 2)) + 1

    def test_cap(self):
        with pytest.raises(AngleBudgetInfeasible) as err:
            minimal_twist(0.0, 0.0, 5.0, 1e-4, n_cap=1000)
        assert err.value.achieved > 1e-4


class TestBuild:
    def test_single_generator(self):
        C = build_concatenation(default_plan(), 1)
        assert C.splices == () and C.exterior_angles == ()
        assert len(C.segments) == 1
        lim = chordal_limit(C, [])
        assert lim.limit_tangent == C.legs[0].segment.tangent(0.5 * C.legs[0].segment.length)

    def test_two_generators_small_budget(self):
        C = build_concatenation(default_plan(eps0=0.05), 2)
        assert len(C.exterior_angles) == 2
        assert sum(C.exterior_angles) <= 0.05

    def test_budgets_respected(self, full):
        for sp in full.splices:
            assert sum(sp.angles) <= full.plan.budget(sp.budget_index) + 1e-15
        assert full.ea_total <= full.plan.eps0 * math.pi**2 / 6

    def test_order_and_frames(self, full):
        assert sorted(full.legs) == list(range(-8, 9))
        for sp in full.splices:
            assert sp.right == sp.left + 1
            assert full.legs[sp.left].frame.entries is not None

    def test_twists_grow(self, full):
        tw = sorted(full.twists.values())
        assert tw[-1] >= 100 * tw[0]

    def test_legs_meet_in_central_frame(self):
        C = build_concatenation(default_plan(), 4)
        flat = C.to_concatenation()
        for a, b in zip(flat.segments, flat.segments[1:]):
            assert abs(a.end.z - b.start.z) < 1e-6 * max(1.0, abs(a.end.z))


class TestChordalLimit:
    def test_cauchy(self, limit):
        gaps = limit.cauchy_gaps
        assert len(gaps) == 2 and gaps[1] < gaps[0] < 1e-6
        assert limit.limit_tangent is not None and limit.certified_depth == 8

    def test_derivative_bounds(self, limit):
        assert all(r.passed for r in limit.derivative_reports)

    def test_windows_shrink(self, limit):
        w = limit.window_max_F
        assert all(b < a for a, b in zip(w, w[1:]))

    def test_chord_containment(self, full):
        ch = chord_between(full, -4, 4)
        prof, _, angles = chord_profile(full, ch)
        ea = float(sum(angles))
        assert prof.max_F <= max(full.plan.delta2, bound_from_ea(ea)) + 1e-9

    def test_no_degeneration(self):
        rep = check_no_degeneration(build_concatenation(default_plan(), 6))
        assert rep["passed"] and rep["connected"]
        assert all(v == 1 for v in rep["runs"].values())
        assert rep["crossings"] > 0

    def test_json(self, limit):
        js = limit.to_json()
        assert js["n"] == [2, 4, 8] and js["limit"]["certified_depth"] == 8


class TestCoverage:
    def test_empty(self):
        assert density_coverage(np.zeros((0, 3)), 0.3) == 0.0

    def test_grid_covers_itself(self):
        g = coverage_grid(4, 4, 4)
        assert density_coverage(g, 1e-9, g) == 1.0

    @given(st.floats(0.05, 0.5), st.floats(0.0, 0.5))
    @settings(max_examples=20)
    def test_monotone_in_eps(self, eps, extra):
        rng = np.random.default_rng(1)
        pts = np.stack([rng.uniform(-0.5, 0.5, 30), rng.uniform(0.9, 3.0, 30), rng.uniform(-math.pi, math.pi, 30)], 1)
        assert density_coverage(pts, eps) <= density_coverage(pts, eps + extra)

    def test_curve_grows(self):
        rows = coverage_curve(default_plan(), [1, 4, 8])
        cov = [r["coverage"] for r in rows]
        assert cov[0] < cov[1] < cov[2]

    def test_accumulation_shrinks_with_budget(self):
        d = [accumulation_distance(build_concatenation(default_plan(eps0=e), 5)) for e in (0.2, 0.05, 0.01)]
        assert d[0] > d[1] > d[2]
        assert d[2] < 0.01
