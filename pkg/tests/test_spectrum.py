import itertools
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from cusped_flow.errors import DomainError, InsufficientData
from cusped_flow.metric_engine import hyperbolic_backend, wp_cusp_model
from cusped_flow.spectrum import (
    FD_AREA,
    H_STAR,
    axis_height,
    bounded_cf_subshift,
    cf_period_of,
    class_from_period,
    class_key,
    classes_by_forms,
    closed_geodesics_in_horseshoe,
    cusp_area_divergence,
    enumerate_closed_geodesics,
    fricke_traces,
    fundamental_domain_area,
    growth_rate_fit,
    height_bound,
    horseshoe_entropy_fit,
    horseshoe_orbit_counts,
    is_balanced,
    is_primitive_element,
    length_from_trace,
    minimal_period,
    nonsimple_sample,
    periodic_counts_from_orbits,
    primitive_orbit_counts,
    quotient_sector_area,
    recurrence_mc,
    return_times,
    simple_geodesic_census,
    trace3_tangent,
    trace_bound,
    word_element,
)

S = (0, -1, 1, 0)
T = (1, 1, 0, 1)
Ti = (1, -1, 0, 1)


def mul(m, n):
    a, b, c, d = m
    e, f, g, h = n
    return (a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)


@pytest.fixture(scope="module")
def census():
    return enumerate_closed_geodesics(12.0)


class TestCensus:
    def test_shortest(self, census):
        assert census.lengths[0] == pytest.approx(length_from_trace(3))
        assert census.lengths[0] == pytest.approx(1.9248473002384139, abs=1e-12)

    def test_matches_form_oracle(self, census):
        assert census.keys() == classes_by_forms(trace_bound(12.0))
        assert len(census) == len(census.keys())

    def test_small_traces_by_hand(self):
        # D = 5: the unit (1 + sqrt 5)/2 has norm -1, so x^2 + xy - y^2 and its
        # negative are one class.  D = 12: 2 + sqrt 3 has norm +1, so x^2 - 3y^2
        # and -x^2 + 3y^2 stay apart.
        assert len(enumerate_closed_geodesics(length_from_trace(3) + 1e-9)) == 1
        assert len(enumerate_closed_geodesics(length_from_trace(4) + 1e-9)) == 1 + 2

    def test_empty_below_shortest(self):
        assert len(enumerate_closed_geodesics(1.0)) == 0

    def test_word_enumeration(self, census):
        keys = census.keys()
        tmax = trace_bound(12.0)
        seen = 0
        for n in range(1, 9):
            for w in itertools.product((S, T, Ti), repeat=n):
                M = (1, 0, 0, 1)
                for g in w:
                    M = mul(M, g)
                t = abs(M[0] + M[3])
                if t <= 2 or t > tmax or not is_primitive_element(M):
                    continue
                assert class_key(M) in keys
                seen += 1
        assert seen > 100

    @given(st.lists(st.integers(1, 6), min_size=1, max_size=5))
    def test_cf_period_roundtrip(self, period):
        assume(len(minimal_period(period)) == len(period))
        cls = class_from_period(period)
        back = cf_period_of(cls.representative.entries)
        assert class_from_period(back).key == cls.key

    def test_growth(self, census):
        fit = growth_rate_fit(census)
        assert abs(fit.slope - 1.0) <= 0.15
        # prime geodesic theorem: log Li(e^T) has slope close to 1 - 1/T on the window
        Ts = np.linspace(8, 12, 41)
        from scipy.special import expi

        ref = np.polyfit(Ts, np.log(expi(Ts)), 1)[0]
        assert fit.slope == pytest.approx(ref, abs=0.03)

    def test_growth_stable_under_window(self, census):
        a = growth_rate_fit(census, (8.0, 12.0)).slope
        b = growth_rate_fit(census, (8.5, 11.5)).slope
        assert abs(a - b) < 0.05

    def test_insufficient(self):
        with pytest.raises(InsufficientData):
            growth_rate_fit(enumerate_closed_geodesics(5.0), (4.0, 5.0))


class TestHorseshoe:
    @pytest.mark.parametrize("N", [1, 2, 3, 4])
    def test_entropy(self, N):
        assert bounded_cf_subshift(N).entropy == pytest.approx(math.log(N), abs=1e-12)

    def test_periodic_points_from_orbits(self):
        orb = primitive_orbit_counts(3, 12)
        for k in range(1, 13):
            assert periodic_counts_from_orbits(orb, k) == 3**k == bounded_cf_subshift(3).periodic_points(k)

    @pytest.mark.parametrize("N", [1, 2, 3])
    def test_orbit_counts_match_necklaces(self, N):
        classes = closed_geodesics_in_horseshoe(N, 8)
        expected = {k: v for k, v in primitive_orbit_counts(N, 8).items() if v}
        assert horseshoe_orbit_counts(classes) == expected

    @pytest.mark.parametrize("N", [1, 2])
    def test_heights(self, N):
        classes = closed_geodesics_in_horseshoe(N, 8)
        top = max(axis_height(c.cf_period) for c in classes)
        assert top <= height_bound(N) + 1e-12
        # the cycle (N, 1) attains the bound
        assert axis_height((N, 1)) == pytest.approx(height_bound(N), abs=1e-12)

    def test_golden_height(self):
        assert height_bound(1) == pytest.approx(math.sqrt(5) / 2)

    def test_entropy_fit(self):
        fit = horseshoe_entropy_fit(2)
        assert fit["slope"] == pytest.approx(math.log(2), abs=1e-9)

    def test_domain(self):
        with pytest.raises(DomainError):
            bounded_cf_subshift(0)


class TestSimple:
    def test_fricke_matches_matrices(self):
        for (p, q), t in fricke_traces(12).items():
            from cusped_flow.spectrum import christoffel_word

            assert word_element(christoffel_word(p, q)).trace == t

    def test_markov_traces(self):
        # traces are three times Markov numbers
        markov = {1, 2, 5, 13, 29, 34, 89, 169, 194, 233, 433, 610, 985}
        traces = {t for t in fricke_traces(8).values()}
        assert {t // 3 for t in traces if t // 3 < 200} <= markov
        assert all(t % 3 == 0 for t in traces)

    def test_heights_below_limit(self):
        rows = simple_geodesic_census(30)
        assert len(rows) > 100
        assert max(r.height for r in rows) <= H_STAR + 1e-12
        assert all(is_balanced(r.word) for r in rows)

    def test_nonsimple_exceed(self):
        rows = nonsimple_sample(20, seed=0)
        assert all(r.height > H_STAR for r in rows)
        assert not any(is_balanced(r.word) for r in rows)

    def test_balanced(self):
        assert is_balanced("aab") and not is_balanced("aabb")


class TestAreas:
    def test_fundamental_domain(self):
        assert fundamental_domain_area() == pytest.approx(FD_AREA, abs=1e-6)

    def test_cusp_area_grows(self):
        rows = cusp_area_divergence(0.1, [1, 10, 100], wp_cusp_model())
        areas = [r["area"] for r in rows]
        assert areas == pytest.approx([0.1, 1.0, 10.0])
        assert rows[1]["quadrature"] == pytest.approx(1.0, rel=1e-8)

    def test_sector_finite(self):
        assert quotient_sector_area(0.1) == pytest.approx(0.0025, rel=1e-12)

    def test_domain(self):
        with pytest.raises(DomainError):
            cusp_area_divergence(0.0, [1.0])


class TestRecurrence:
    def test_trace3_return(self):
        z, th = trace3_tangent()
        rt = return_times(np.array([z]), np.array([th]), 3.0, 0.05, dt=0.005)
        assert rt[0] == pytest.approx(length_from_trace(3), abs=1e-4)

    def test_zero_samples(self):
        stats = recurrence_mc(None, 0, 10.0, 0.1, 0)
        assert stats.fraction(10.0) == 0.0 and stats.to_json()["samples"] == 0

    def test_cusp_model_rejected(self):
        with pytest.raises(DomainError):
            recurrence_mc(wp_cusp_model(), 5, 1.0, 0.1, 0)

    @settings(max_examples=5)
    @given(st.integers(0, 100))
    def test_fraction_monotone(self, seed):
        stats = recurrence_mc(hyperbolic_backend(), 20, 10.0, 0.3, seed, dt=0.02)
        f = [stats.fraction(t) for t in (2.0, 5.0, 10.0)]
        assert f == sorted(f)
