"""Distance from a concatenation to one of its chords.

The profile F(s) is the hyperbolic distance from C(s) to the chord,
computed in closed form by nearest-point projection, and F'(s) is
cos(theta) with theta the angle between C'(s) and the projection fiber.
The comparison bound B(ea) turns a small exterior-angle budget into a
uniform bound on F.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .concatenation import Concatenation, leg_length, leg_points, leg_velocities
from .errors import DomainError, ProjectionFailure
from .hyp_geometry import (
    GeodesicSegment,
    HalfPlanePoint,
    UnitTangent,
    _project_axis,
    direction_to,
    geodesic_between,
    segment_axis_range,
    wrap_angle,
)
from .metric_engine import HYPERBOLIC, GeodesicPath, hyperbolic_backend

SAMPLES_PER_UNIT = 512
TOL_DERIV = 1e-3
TOL_CONV = 1e-6
TOL_MAXF = 1e-4
TOL_BOUND = 1e-3
EA_LIMIT = 0.5


def bound_from_ea(ea: float, kappa: float = -1.0) -> float:
    """Comparison bound on the chord distance for total exterior angle ``ea``.

    With phi = ea + arcsin(ea) the bound is
    arccosh((sin^2 phi + 1) / cos^2 phi) / sqrt(|kappa|).
    """
    if not 0.0 <= ea <= EA_LIMIT:
        raise DomainError(f"exterior angle {ea} outside [0, {EA_LIMIT}]")
    if not kappa < 0:
        raise DomainError("curvature bound must be negative")
    phi = ea + math.asin(ea)
    s2 = math.sin(phi) ** 2
    # arccosh(1 + x) with x = 2 sin^2 / cos^2, kept accurate near zero
    x = 2.0 * s2 / (1.0 - s2)
    return math.log1p(x + math.sqrt(x * (x + 2.0))) / math.sqrt(-kappa)


def _as_segment(chord) -> GeodesicSegment:
    if isinstance(chord, GeodesicSegment):
        return chord
    if isinstance(chord, GeodesicPath):
        p, q = chord.start, chord.end
        return geodesic_between(HalfPlanePoint(*p), HalfPlanePoint(*q))
    raise TypeError(f"unsupported chord type {type(chord).__name__}")


@dataclass(frozen=True, eq=False)
class DistanceProfile:
    """Samples (s, F, F') per leg; F' is one-sided using that leg's tangent."""

    s: np.ndarray
    F: np.ndarray
    dF: np.ndarray
    leg: np.ndarray
    jump_list: tuple
    max_F: float
    max_F_location: float
    fd_mismatch: float
    resolution: int

    def segment_slices(self):
        for k in np.unique(self.leg):
            yield np.nonzero(self.leg == k)[0]

    def convexity_defect(self) -> float:
        """Most negative normalized second difference of F within a leg."""
        worst = 0.0
        for idx in self.segment_slices():
            if len(idx) < 3:
                continue
            s, F = self.s[idx], self.F[idx]
            h1 = s[1:-1] - s[:-2]
            h2 = s[2:] - s[1:-1]
            d2 = 2.0 * ((F[2:] - F[1:-1]) / h2 - (F[1:-1] - F[:-2]) / h1) / (h1 + h2)
            worst = min(worst, float(d2.min()))
        return worst

    def to_rows(self):
        return [{"s": float(a), "F": float(b), "dF": float(c)} for a, b, c in zip(self.s, self.F, self.dF)]


def leg_profile(leg, geo, t_range, forward: bool, per_unit: int):
    """Distance samples of one leg against the geodesic ``geo``.

    ``t_range`` clamps the foot to an axis-parameter interval (a chord) and
    ``forward`` says whether the chord runs toward increasing parameter.
    Returns (s, F, F', finite-difference mismatch).
    """
    L = leg_length(leg)
    m = max(3, int(math.ceil(L * per_unit)) + 1)
    s = np.linspace(0.0, L, m)
    P = leg_points(leg, s)
    V = leg_velocities(leg, s)
    z = P[:, 0] + 1j * P[:, 1]
    lo, hi = min(t_range), max(t_range)
    d, foot, t, away = _project_axis(geo, z, (lo, hi))
    d = np.atleast_1d(np.asarray(d, dtype=float))
    away = np.atleast_1d(np.asarray(away, dtype=float))
    t = np.atleast_1d(np.asarray(t, dtype=float))
    vdir = np.arctan2(-V[:, 0], V[:, 1])
    dF = np.cos(vdir - away)
    small = d < 1e-10
    if np.any(small):
        # on the chord: right derivative, except at the leg's last sample
        along = np.array([geo.tangent_at(float(v)).dir for v in t[small]])
        if not forward:
            along = wrap_angle(along + math.pi)
        t_start, t_end = (lo, hi) if forward else (hi, lo)
        at_start = np.isclose(t[small], t_start, atol=1e-12)
        at_end = np.isclose(t[small], t_end, atol=1e-12)
        right = _on_chord_rate(vdir[small], along, at_start, at_end)
        left = -_on_chord_rate(vdir[small] + math.pi, along, at_start, at_end)
        last = np.zeros(m, dtype=bool)
        last[-1] = True
        dF[small] = np.where(last[small], left, right)
    fd_bad = 0.0
    if m >= 5:
        g = np.gradient(d, s)
        fd_bad = float(np.max(np.abs(g[2:-2] - dF[2:-2])))
    return s, d, dF, fd_bad


def assemble_profile(pieces, angles, resolution) -> "DistanceProfile":
    """Join per-leg (s, F, F', fd) tuples into one profile along the curve."""
    cum = 0.0
    S, FF, DF, LEG, jumps = [], [], [], [], []
    fd = 0.0
    prev_last = None
    for k, (s, F, dF, bad) in enumerate(pieces):
        if prev_last is not None:
            jumps.append({"vertex": k - 1, "s": cum, "jump": float(dF[0] - prev_last), "angle": float(angles[k - 1])})
        prev_last = dF[-1]
        S.append(s + cum)
        FF.append(F)
        DF.append(dF)
        LEG.append(np.full(len(s), k))
        fd = max(fd, bad)
        cum += float(s[-1])
    S = np.concatenate(S)
    F = np.concatenate(FF)
    i = int(np.argmax(F))
    return DistanceProfile(S, F, np.concatenate(DF), np.concatenate(LEG), tuple(jumps), float(F[i]), float(S[i]),
                           fd, resolution)


def _profile_once(C: Concatenation, seg: GeodesicSegment, per_unit: int):
    geo, rng = segment_axis_range(seg)
    forward = rng[1] >= rng[0]
    pieces = [leg_profile(leg, geo, rng, forward, per_unit) for leg in C.segments]
    return assemble_profile(pieces, C.exterior_angles, per_unit)


def _on_chord_rate(vdir, along, at_start, at_end):
    """Right derivative of the distance for a curve leaving a chord point."""
    alpha = np.abs(wrap_angle(vdir - along))
    val = np.abs(np.sin(alpha))
    val = np.where(at_start & (alpha > math.pi / 2), 1.0, val)
    return np.where(at_end & (alpha < math.pi / 2), 1.0, val)


def distance_profile(C: Concatenation, chord, per_unit: int = SAMPLES_PER_UNIT, max_doublings: int = 4,
                     tol_max: float = TOL_MAXF) -> DistanceProfile:
    """Distance from C to ``chord`` sampled along C.

    Resolution starts at ``per_unit`` samples per unit length and doubles
    until max F moves by less than ``tol_max``.
    """
    if C.backend.kind != HYPERBOLIC:
        raise ProjectionFailure("closed-form projection needs the hyperbolic backend")
    seg = _as_segment(chord)
    res = per_unit
    prof = _profile_once(C, seg, res)
    for _ in range(max_doublings):
        res *= 2
        nxt = _profile_once(C, seg, res)
        stable = abs(nxt.max_F - prof.max_F) < tol_max
        prof = nxt
        if stable:
            break
    return prof


@dataclass(frozen=True)
class DerivativeReport:
    passed: bool
    max_abs_derivative: float
    location: float
    bound: float
    tol: float
    max_negative_jump_excess: float


def verify_derivative_bound(prof: DistanceProfile, ea_total: float, tol: float = TOL_DERIV) -> DerivativeReport:
    """Check max |F'| <= ea_total + tol; also reports jump/angle consistency."""
    a = np.abs(prof.dF)
    i = int(np.argmax(a)) if len(a) else 0
    m = float(a[i]) if len(a) else 0.0
    excess = 0.0
    for j in prof.jump_list:
        if j["jump"] < 0:
            excess = max(excess, -j["jump"] - j["angle"])
    return DerivativeReport(m <= ea_total + tol, m, float(prof.s[i]) if len(a) else 0.0, ea_total, tol, excess)


def polygon_checks(C: Concatenation, chord) -> dict:
    """Projection interiority and the angle check at each interior vertex.

    For vertex r, the foot of r on the chord must lie strictly inside it,
    and the angle at r of the polygon bounded by C from the start to r and
    the geodesic back to the start is compared with the exterior angle
    accumulated before r.
    """
    seg = _as_segment(chord)
    geo, rng = segment_axis_range(seg)
    lo, hi = min(rng), max(rng)
    p0 = seg.start
    interior = []
    slack = []
    for k in range(len(C.segments) - 1):
        leg = C.segments[k]
        end = leg_points(leg, leg_length(leg))
        z = complex(end[0], end[1])
        _, _, t_free, _ = _project_axis(geo, z, None)
        t_free = float(np.asarray(t_free))
        interior.append(lo < t_free < hi)
        v = leg_velocities(leg, leg_length(leg))
        back = math.atan2(float(v[0]), -float(v[1]))
        r = HalfPlanePoint(float(end[0]), float(end[1]))
        if abs(r.z - p0.z) < 1e-12:
            continue
        to_p = float(direction_to(r.z, p0.z))
        ang = abs(float(wrap_angle(back - to_p)))
        slack.append(float(sum(C.exterior_angles[:k]) - ang))
    return {"interior": interior, "angle_slack": slack}


# ---------------------------------------------------------------------------
# randomized families


def random_polygonal(rng: np.random.Generator, ea_max: float, legs=(2, 6), length=(0.3, 3.0)) -> Concatenation:
    """Random hyperbolic concatenation with total exterior angle <= ea_max."""
    k = int(rng.integers(legs[0], legs[1] + 1))
    ea = float(rng.uniform(0.0, ea_max))
    share = rng.dirichlet(np.ones(k - 1)) if k > 1 else np.zeros(0)
    turns = ea * share * rng.choice([-1.0, 1.0], size=k - 1)
    t = UnitTangent(HalfPlanePoint(float(rng.uniform(-1, 1)), float(np.exp(rng.uniform(-1, 1)))),
                    float(rng.uniform(-math.pi, math.pi)))
    segs = []
    for i in range(k):
        L = float(rng.uniform(*length))
        seg = GeodesicSegment.from_tangent(t, L)
        segs.append(seg)
        if i < k - 1:
            t = UnitTangent(seg.end, seg.end_tangent.dir + turns[i])
    return Concatenation.from_segments(segs, hyperbolic_backend())


def random_twist(rng: np.random.Generator, ea_max: float) -> Concatenation:
    """Twist concatenation at the cusp at infinity with both gaps <= ea_max / 2."""
    from .concatenation import twist_concatenate
    from .hyp_geometry import BoundaryPoint, Geodesic
    from fractions import Fraction

    a1 = int(rng.integers(-3, 4))
    a2 = int(rng.integers(-3, 4))
    Y = float(rng.uniform(1.0, 3.0))
    nmin = max(1, int(math.ceil(2 * Y / math.tan(ea_max / 2.0))))
    n = int(rng.integers(nmin, 4 * nmin + 1)) - (a2 - a1)
    inf = BoundaryPoint.infinity()
    g1 = Geodesic(BoundaryPoint(Fraction(a1), True), inf)
    g2 = Geodesic(BoundaryPoint(Fraction(a2), True), inf)
    return twist_concatenate(g1, g2, 1.0 / Y, n, tail=float(rng.uniform(0.5, 3.0)))


FAMILIES = {"polygonal": random_polygonal, "twist": random_twist}


@dataclass(frozen=True)
class ShadowRow:
    trial: int
    ea_total: float
    max_F: float
    bound: float
    passed: bool
    max_abs_dF: float = float("nan")
    derivative_ok: bool = True
    error: str | None = None

    def as_dict(self) -> dict:
        return {
            "trial": self.trial,
            "ea_total": self.ea_total,
            "max_F": self.max_F,
            "bound": self.bound,
            "pass": self.passed,
            "max_abs_dF": self.max_abs_dF,
            "derivative_ok": self.derivative_ok,
            "error": self.error,
        }


def run_trial(family: str, ea_max: float, seed: int, trial: int, tol: float = TOL_BOUND) -> ShadowRow:
    rng = np.random.default_rng([seed, trial])
    try:
        C = FAMILIES[family](rng, ea_max)
        first, last = C.segments[0], C.segments[-1]
        p = leg_points(first, 0.0)
        q = leg_points(last, leg_length(last))
        chord = geodesic_between(HalfPlanePoint(*p), HalfPlanePoint(*q))
        prof = distance_profile(C, chord)
        ea = C.ea_total
        B = bound_from_ea(min(ea, EA_LIMIT))
        rep = verify_derivative_bound(prof, ea)
        return ShadowRow(trial, ea, prof.max_F, B, prof.max_F <= B + tol, rep.max_abs_derivative, rep.passed)
    except Exception as exc:  # recorded per trial, the batch continues
        return ShadowRow(trial, float("nan"), float("nan"), float("nan"), False, error=f"{type(exc).__name__}: {exc}")


@dataclass(frozen=True)
class ShadowSummary:
    rows: tuple
    pass_rate: float
    derivative_pass_rate: float
    quantiles: dict
    slope: float | None
    extras: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "trials": len(self.rows),
            "pass_rate": self.pass_rate,
            "derivative_pass_rate": self.derivative_pass_rate,
            "quantiles": self.quantiles,
            "loglog_slope": self.slope,
        }


def loglog_slope(x, y) -> float | None:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = (x > 0) & (y > 0) & np.isfinite(x) & np.isfinite(y)
    if ok.sum() < 3:
        return None
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


def shadowing_experiment(trials: int, seed: int, ea_max: float = 0.1, family: str = "polygonal",
                         workers: int = 1) -> ShadowSummary:
    """Randomized check of max_F <= B(ea) over a concatenation family."""
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    idx = list(range(int(trials)))
    if workers > 1 and idx:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(run_trial, [family] * len(idx), [ea_max] * len(idx), [seed] * len(idx), idx))
    else:
        rows = [run_trial(family, ea_max, seed, i) for i in idx]
    if not rows:
        return ShadowSummary((), 1.0, 1.0, {}, None)
    ok = np.array([r.passed for r in rows])
    dok = np.array([r.derivative_ok and r.error is None for r in rows])
    mf = np.array([r.max_F for r in rows])
    ea = np.array([r.ea_total for r in rows])
    good = np.isfinite(mf)
    q = {}
    if good.any():
        for name, v in zip(("q05", "q50", "q95", "max"), np.quantile(mf[good], [0.05, 0.5, 0.95, 1.0])):
            q[name] = float(v)
    return ShadowSummary(tuple(rows), float(ok.mean()), float(dok.mean()), q, loglog_slope(ea, mf))
