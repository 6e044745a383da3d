"""Acceptance criteria, one test each; every test also records a PASS/FAIL line.

Tolerances are fixed here and never loosened to make a run pass.
"""

import itertools
import json
import math
import time

import numpy as np
import pytest

from cusped_flow import cli
from cusped_flow.concatenation import twist_family
from cusped_flow.dense_limit import build_concatenation, chordal_limit, coverage_curve, default_plan
from cusped_flow.hyp_geometry import BoundaryPoint, HalfPlanePoint, UnitTangent, dist, flow
from cusped_flow.metric_engine import (
    DEFAULT_ELL_MIN,
    chord_bvp,
    hyperbolic_backend,
    integrate_geodesic,
    wp_cusp_model,
)
from cusped_flow.shadowing import shadowing_experiment
from cusped_flow.spectrum import (
    FD_AREA,
    H_STAR,
    axis_height,
    bounded_cf_subshift,
    class_key,
    closed_geodesics_in_horseshoe,
    cusp_area_divergence,
    enumerate_closed_geodesics,
    even_word,
    fundamental_domain_area,
    growth_rate_fit,
    height_bound,
    horseshoe_orbit_counts,
    is_primitive_element,
    nonsimple_sample,
    periodic_counts_from_orbits,
    recurrence_mc,
    return_times,
    simple_geodesic_census,
    trace3_tangent,
    trace_bound,
)

RESULTS = []

TOL_ORACLE = 1e-6
TOL_DERIV = 1e-3
TOL_TWIST = 1e-6
TOL_SHORTEST = 1e-9
TOL_ENTROPY = 1e-10
TOL_ENTROPY_K = 0.05
TOL_RETURN = 1e-3
TOL_RADIAL = 1e-4
TOL_AREA = 1e-6


def record(k, ok, detail):
    RESULTS.append(f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}")
    print(RESULTS[-1])
    assert ok, detail


@pytest.fixture(scope="module")
def shadow_summary():
    t0 = time.perf_counter()
    s = shadowing_experiment(200, seed=2024, ea_max=0.1)
    return s, time.perf_counter() - t0


def test_criterion_01_hyperbolic_oracle():
    H = hyperbolic_backend()
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst_end = worst_len = 0.0
    for _ in range(250):
        p = HalfPlanePoint(float(rng.uniform(-2, 2)), float(np.exp(rng.uniform(-1.5, 1.5))))
        t = UnitTangent(p, float(rng.uniform(-math.pi, math.pi)))
        L = float(rng.uniform(0.1, 4.0))
        path = integrate_geodesic(H, (p.x, p.y), t, L)
        exact = flow(t, L).base
        end = HalfPlanePoint(*path.end)
        worst_end = max(worst_end, dist(end, exact))
        worst_len = max(worst_len, abs(path.total_length - L), abs(dist(p, end) - L))
    for _ in range(250):
        p = HalfPlanePoint(float(rng.uniform(-2, 2)), float(np.exp(rng.uniform(-1.5, 1.5))))
        q = HalfPlanePoint(float(rng.uniform(-2, 2)), float(np.exp(rng.uniform(-1.5, 1.5))))
        res = chord_bvp(H, (p.x, p.y), (q.x, q.y))
        worst_end = max(worst_end, dist(HalfPlanePoint(*res.segment.end), q))
        worst_len = max(worst_len, abs(res.segment.total_length - dist(p, q)))
    elapsed = time.perf_counter() - t0
    ok = worst_end <= TOL_ORACLE and worst_len <= TOL_ORACLE and elapsed < 10.0
    record(1, ok, f"500 cases, endpoint err {worst_end:.2e}, length err {worst_len:.2e}, {elapsed:.1f} s")


def test_criterion_02_shadowing_bound(shadow_summary):
    s, elapsed = shadow_summary
    n = len(s.rows)
    ok = n >= 200 and s.pass_rate == 1.0 and s.slope is not None and s.slope > 0 and elapsed < 120
    record(2, ok, f"{n} trials, pass rate {s.pass_rate:.3f}, log-log slope {s.slope:.3f}, {elapsed:.1f} s")


def test_criterion_03_derivative_bound(shadow_summary):
    s, _ = shadow_summary
    worst = max(r.max_abs_dF - r.ea_total for r in s.rows)
    ok = s.derivative_pass_rate == 1.0 and worst <= TOL_DERIV
    record(3, ok, f"derivative pass rate {s.derivative_pass_rate:.3f}, max(|F'| - ea) {worst:.2e}")


def test_criterion_04_twisting():
    i = HalfPlanePoint(0.0, 1.0)
    fam = twist_family(BoundaryPoint.infinity(), i, i, list(range(1, 65)))
    err = max(abs(a.initial_angle_gap - math.atan(2.0 / a.n)) for a in fam.analyses)
    wp = twist_family(None, (1.0, 0.0), (1.0, 0.0), [0, 1, 2, 4, 8, 16, 32, 64], wp_cusp_model())
    tail = [max(a.initial_angle_gap, a.terminal_angle_gap) for a in wp.analyses if a.n >= wp.n0]
    mono = all(b <= a + 1e-12 for a, b in zip(tail, tail[1:]))
    last = wp.analyses[-1]
    final = max(last.initial_angle_gap, last.terminal_angle_gap)
    grows = wp.L0 is not None and wp.L0 > 0 and wp.length_bound_holds()
    ok = err <= TOL_TWIST and mono and final < 0.02 and grows
    record(4, ok, f"closed-form err {err:.1e}; cusp model n0={wp.n0}, gap(64)={final:.4f}, L0={wp.L0:.4f}, "
                  f"monotone={mono}")


def test_criterion_05_dense_construction():
    t0 = time.perf_counter()
    plan = default_plan()
    cov = [r["coverage"] for r in coverage_curve(plan, [4, 8, 12], eps=0.3)]
    lim = chordal_limit(build_concatenation(plan, 17), [2, 4, 8])
    gaps, win = lim.cauchy_gaps, lim.window_max_F
    elapsed = time.perf_counter() - t0
    ok = (all(b > a for a, b in zip(cov, cov[1:])) and gaps[-1] <= 0.5 * gaps[-2]
          and all(b < a for a, b in zip(win, win[1:])) and elapsed < 300)
    record(5, ok, f"coverage {[round(c, 4) for c in cov]}, gaps {[float(f'{g:.2e}') for g in gaps]}, "
                  f"window max F {[round(w, 5) for w in win]}, {elapsed:.1f} s")


def test_criterion_06_census():
    t0 = time.perf_counter()
    census = enumerate_closed_geodesics(12.0)
    shortest = float(census.lengths[0])
    target = 2.0 * math.acosh(1.5)
    keys = census.keys()
    gens = ((0, -1, 1, 0), (1, 1, 0, 1), (1, -1, 0, 1))
    tmax = trace_bound(12.0)
    shortest_word = {}
    for n in range(1, 9):
        for w in itertools.product(gens, repeat=n):
            M = (1, 0, 0, 1)
            for a, b, c, d in w:
                M = (M[0] * a + M[1] * c, M[0] * b + M[1] * d, M[2] * a + M[3] * c, M[2] * b + M[3] * d)
            t = abs(M[0] + M[3])
            if t <= 2 or t > tmax or not is_primitive_element(M):
                continue
            shortest_word.setdefault(class_key(M), n)
    missing = sum(k not in keys for k in shortest_word)
    # a cycle (a_1, ..., a_2m) is spelled T^a_1 S T^-a_2 S ..., so its shortest word has sum(a) + 2m letters
    predicted = {}
    for c in census.classes:
        w = even_word(c.cf_period)
        if sum(w) + len(w) <= 8:
            predicted[c.key] = sum(w) + len(w)
    exact = predicted == shortest_word
    fit = growth_rate_fit(census, (8.0, 12.0))
    elapsed = time.perf_counter() - t0
    ok = (abs(shortest - target) <= TOL_SHORTEST and missing == 0 and exact
          and abs(fit.slope - 1.0) <= 0.15 and elapsed < 120)
    record(6, ok, f"shortest {shortest:.12f}, {len(census)} classes, word classes {len(shortest_word)} "
                  f"(missing {missing}, sets equal {exact}), slope {fit.slope:.3f}, {elapsed:.1f} s")


def test_criterion_07_entropy():
    e = {N: bounded_cf_subshift(N).entropy for N in (1, 2, 3, 4)}
    devs = {}
    for N in (2, 3, 4):
        p16 = bounded_cf_subshift(N).periodic_points(16)
        devs[N] = abs(math.log(p16) / 16 - e[N])
    # the subshift count agrees with closed geodesics found by enumeration where that is feasible
    kmax = {2: 16, 3: 10, 4: 8}
    census_ok = True
    for N, k in kmax.items():
        orbits = horseshoe_orbit_counts(closed_geodesics_in_horseshoe(N, k))
        census_ok &= periodic_counts_from_orbits(orbits, k) == bounded_cf_subshift(N).periodic_points(k)
    increasing = e[1] < e[2] < e[3] < e[4]
    ok = (abs(e[2] - math.log(2)) <= TOL_ENTROPY and all(d <= TOL_ENTROPY_K for d in devs.values())
          and increasing and census_ok)
    record(7, ok, f"entropy(2) - log 2 = {e[2] - math.log(2):.1e}, k=16 deviations "
                  f"{ {N: float(f'{d:.1e}') for N, d in devs.items()} }, census counts agree={census_ok}")


def test_criterion_08_cusp_avoidance():
    excess = {}
    for N in (1, 2, 3, 4):
        classes = closed_geodesics_in_horseshoe(N, 8 if N < 4 else 6)
        excess[N] = max(axis_height(c.cf_period) for c in classes) - height_bound(N)
    bounds = [height_bound(N) for N in (1, 2, 3, 4)]
    simple = simple_geodesic_census(30)
    top = max(r.height for r in simple)
    non = nonsimple_sample(20, seed=0)
    above = sum(r.height > H_STAR for r in non)
    ok = (all(v <= 1e-12 for v in excess.values()) and all(b > a for a, b in zip(bounds, bounds[1:]))
          and top <= H_STAR + 1e-12 and above >= 10)
    record(8, ok, f"max height - bound {max(excess.values()):.1e}, {len(simple)} simple classes max height "
                  f"{top:.6f} <= H*={H_STAR}, {above}/{len(non)} non-simple above H*")


def test_criterion_09_recurrence():
    stats = recurrence_mc(hyperbolic_backend(), 1000, 50.0, 0.2, seed=0)
    Ts = [5.0, 10.0, 25.0, 50.0]
    curve = [stats.fraction(T) for T in Ts]
    mono = all(b >= a for a, b in zip(curve, curve[1:]))
    z, th = trace3_tangent()
    rt = float(return_times(np.array([z]), np.array([th]), 3.0, 0.05, dt=0.005)[0])
    ret_ok = abs(rt - 1.9248) <= TOL_RETURN
    ok = curve[-1] >= 0.9 and mono and ret_ok
    record(9, ok, f"recurrent fraction by T=50 {curve[-1]:.3f} (need >= 0.9), curve {curve}, "
                  f"trace-3 return {rt:.7f}")


def test_criterion_10_cusp_model():
    W = wp_cusp_model()
    rng = np.random.default_rng(3)
    pts = np.stack([np.exp(rng.uniform(np.log(1e-6), np.log(3.0), 400)), rng.uniform(-5, 5, 400)], axis=1)
    det_err = max(abs(np.linalg.det(W.metric_at(tuple(p))) - 0.25) for p in pts)
    K = min(W.curvature_at((ell, 0.0)) for ell in (1e-2, 1e-3, 1e-4, 1e-5))
    from scipy import integrate

    rad = 0.0
    for ell0 in (0.3, 1.0, 2.0):
        quad, _ = integrate.quad(lambda ell: math.sqrt(W.metric_at((ell, 0.0))[0, 0]), 0.0, ell0, limit=200)
        path = integrate_geodesic(W, (ell0, 0.0), np.array([-1.0, 0.0]), 10.0)
        tail = math.sqrt(2 * math.pi * DEFAULT_ELL_MIN)
        rad = max(rad, abs(path.total_length + tail - quad) if path.terminated_at_cusp else math.inf)
    rows = cusp_area_divergence(0.1, [1.0, 10.0, 100.0, 1000.0], W)
    linear = all(r["area"] == 0.1 * r["T"] for r in rows) and all(
        abs(r["quadrature"] - r["area"]) <= 1e-8 * r["area"] for r in rows)
    fd = abs(fundamental_domain_area() - FD_AREA)
    ok = det_err <= 1e-12 and K < -1e3 and rad <= TOL_RADIAL and linear and fd <= TOL_AREA
    record(10, ok, f"|det - 1/4| {det_err:.1e}, min K {K:.3e}, radial err {rad:.1e}, area linear={linear}, "
                   f"FD area err {fd:.1e}")


def test_criterion_11_determinism(tmp_path):
    runs = [
        ["shadow", "--seed", "5", "--trials", "40"],
        ["dense", "--seed", "0", "--N", "2,4", "--indices", "1,2,3"],
        ["recur", "--seed", "3", "--samples", "40", "--t-horizon", "10"],
        ["twist", "--backend", "wp_cusp_model"],
    ]
    same = {}
    for argv in runs:
        hashes = []
        for rep in ("a", "b"):
            out = tmp_path / f"{argv[0]}_{rep}"
            cli.main(argv + ["--out-dir", str(out)])
            m = (out / "manifest.json").read_text()
            arts = json.loads(m)["artifacts"]
            hashes.append({k: (out / k).read_bytes() for k in arts})
        same[argv[0]] = hashes[0] == hashes[1] and bool(hashes[0])
    record(11, all(same.values()), f"byte-identical reruns {same}")
