"""Infinite concatenations of singular geodesics and their chordal limits.

The construction lives on the modular surface.  Singular geodesics (both
endpoints rational) are laid end to end, each new one carried by an integer
element so that it starts at the cusp where the previous one ends, and the
junction is smoothed by twisting around that cusp until the two exterior
angles fit the step's angle budget.

Every leg keeps its own floating-point frame, in which it is the original
well-conditioned generator geodesic, plus an exact integer transition to the
frame of the central leg.  Long chords are computed in that central frame
with mpmath and pulled back into each leg's frame, where distances are
evaluated in ordinary floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from .concatenation import Concatenation, cusp_normalizer, splice_at_infinity
from .errors import AngleBudgetInfeasible, DegenerateChord, NotCauchy
from .hyp_geometry import (
    BoundaryPoint,
    Geodesic,
    GeodesicSegment,
    HalfPlanePoint,
    MappingClassElement,
    UnitTangent,
    _mob_inv,
    _project_axis,
    geodesic_between,
    reduce_tangent,
    wrap_angle,
)
from .metric_engine import hyperbolic_backend
from .shadowing import assemble_profile, leg_profile, verify_derivative_bound

DEFAULT_DELTA1 = 0.5
DEFAULT_DELTA2 = 0.2
DEFAULT_EPS0 = 0.1
N_CAP = 10**6
TOL_LIMIT = 1e-6
CHART_HEIGHT = 4.0
EA_LIMIT = 0.5


# ---------------------------------------------------------------------------
# generators


def _stern_brocot(rng: np.random.Generator, depth: int) -> Fraction:
    lo = (0, 1)
    hi = (1, 0)
    mid = (1, 1)
    for _ in range(depth):
        if rng.random() < 0.5:
            hi = mid
        else:
            lo = mid
        mid = (lo[0] + hi[0], lo[1] + hi[1])
    return Fraction(mid[0], mid[1])


def singular_geodesic_sequence(count: int, seed: int = 0, max_depth: int = 5) -> list[Geodesic]:
    """Distinct geodesics with rational endpoints; the first is 0 -> infinity.

    Endpoints are signed Stern-Brocot fractions of random depth up to
    ``max_depth``; the orientation is random.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    zero = BoundaryPoint(Fraction(0), True)
    out = [Geodesic(zero, BoundaryPoint.infinity())]
    seen = {(Fraction(0), None)}
    rng = np.random.default_rng(seed)
    while len(out) < count:
        ends = []
        for _ in range(2):
            v = _stern_brocot(rng, int(rng.integers(0, max_depth + 1)))
            ends.append(-v if rng.random() < 0.5 else v)
        a, b = ends
        if a == b:
            continue
        key = (min(a, b), max(a, b))
        if key in seen:
            continue
        seen.add(key)
        out.append(Geodesic(BoundaryPoint(a, True), BoundaryPoint(b, True)))
    return out


def horocycle_point(geo: Geodesic, at_start: bool, Y: float) -> HalfPlanePoint:
    """Where ``geo`` crosses the horocycle of height ``Y`` at one of its cusps."""
    c = geo.start if at_start else geo.end
    other = geo.end if at_start else geo.start
    g = cusp_normalizer(c)
    x = g.apply_boundary(other)
    if x.is_infinite:
        raise DegenerateChord("geodesic joins a cusp to itself")
    return g.inverse().apply(HalfPlanePoint(float(x.value), Y))


def retained_segment(geo: Geodesic, Y: float) -> GeodesicSegment:
    """Part of a singular geodesic outside the height-``Y`` horoballs of its ends."""
    return geodesic_between(horocycle_point(geo, True, Y), horocycle_point(geo, False, Y))


# ---------------------------------------------------------------------------
# plan and construction


@dataclass(frozen=True)
class ConcatenationPlan:
    """Generators, cusp distance parameters and the per-splice angle budget.

    On the half-plane the distance to a cusp is infinite, so ``delta`` maps
    to the horoball of height ``1/delta``; ``delta1 <= 1`` keeps the
    horoballs disjoint.  Splice ``k`` (the k-th added generator) may spend at
    most ``eps0 / k^2`` in total exterior angle.
    """

    generator: tuple
    delta1: float = DEFAULT_DELTA1
    delta2: float = DEFAULT_DELTA2
    eps0: float = DEFAULT_EPS0
    n_cap: int = N_CAP

    def __post_init__(self):
        object.__setattr__(self, "generator", tuple(self.generator))
        if not self.generator:
            raise ValueError("empty generator")
        if not (self.delta1 > 2.0 * self.delta2 > 0.0):
            raise ValueError(f"need delta1 > 2 delta2 > 0, got {self.delta1}, {self.delta2}")
        if self.delta1 > 1.0:
            raise ValueError("delta1 must be at most 1 so cusp horoballs stay disjoint")
        if not self.eps0 > 0 or self.eps0 * math.pi**2 / 6.0 > EA_LIMIT:
            raise ValueError("angle budget must be positive with total at most 1/2")
        if self.n_cap < 1:
            raise ValueError("n_cap must be positive")

    @property
    def Y1(self) -> float:
        return 1.0 / self.delta1

    @property
    def Y2(self) -> float:
        return 1.0 / self.delta2

    def budget(self, k: int) -> float:
        return self.eps0 / (k * k)

    @staticmethod
    def position(j: int) -> int:
        """Generator index -> leg position: 0, 1, -1, 2, -2, ..."""
        return (j + 1) // 2 if j % 2 else -(j // 2)


def default_plan(count: int = 17, seed: int = 0, **kw) -> ConcatenationPlan:
    return ConcatenationPlan(tuple(singular_geodesic_sequence(count, seed)), **kw)


@dataclass(frozen=True, eq=False)
class FramedSegment:
    """A geodesic segment in a local frame; ``frame`` maps local -> central."""

    segment: GeodesicSegment
    frame: MappingClassElement
    kind: str
    index: int

    @property
    def length(self) -> float:
        return self.segment.length


@dataclass(frozen=True)
class Splice:
    left: int
    right: int
    budget_index: int
    n: int
    angles: tuple
    x_in: float
    x_out: float
    frame: MappingClassElement


@dataclass(frozen=True)
class Leg:
    position: int
    geodesic: Geodesic
    frame: MappingClassElement
    segment: GeodesicSegment

    @property
    def midpoint(self) -> HalfPlanePoint:
        return self.segment.point(0.5 * self.segment.length)


@dataclass(frozen=True, eq=False)
class DenseConcatenation:
    """Finite truncation of the infinite concatenation, legs in local frames."""

    plan: ConcatenationPlan
    N: int
    legs: dict
    splices: tuple
    segments: tuple
    exterior_angles: tuple

    @property
    def ea_total(self) -> float:
        return float(sum(self.exterior_angles))

    @property
    def lo(self) -> int:
        return min(self.legs)

    @property
    def hi(self) -> int:
        return max(self.legs)

    @property
    def mcg_alignment(self) -> dict:
        return {k: leg.frame for k, leg in self.legs.items()}

    @property
    def twists(self) -> dict:
        return {(s.left, s.right): s.n for s in self.splices}

    def to_concatenation(self) -> Concatenation:
        """Everything mapped into the central frame in floating point.

        Only sensible for short truncations; entries of the frames grow
        quickly with the number of splices.
        """
        segs = [fs.segment.transformed(fs.frame) for fs in self.segments]
        return Concatenation(tuple(segs), self.exterior_angles, hyperbolic_backend())

    def to_json(self) -> dict:
        return {
            "N": self.N,
            "legs": {str(k): {"geodesic": v.geodesic.to_json(), "frame": v.frame.to_json()} for k, v in sorted(self.legs.items())},
            "splices": [{"left": s.left, "right": s.right, "n": s.n, "angles": list(s.angles)} for s in self.splices],
            "exterior_angles": list(self.exterior_angles),
            "ea_total": self.ea_total,
        }


def _splice_angles(x_in, x_out, Y):
    return splice_at_infinity(x_in, x_out, Y).exterior_angles


def minimal_twist(x_in: float, x_out0: float, Y: float, eps: float, n_cap: int = N_CAP) -> int:
    """Least n >= 1 whose splice at height Y spends at most ``eps``.

    Search by doubling and bisection over the measured exterior angles,
    starting where the outgoing leg is to the right of the incoming one.
    """
    def cost(n):
        return sum(_splice_angles(x_in, x_out0 + n, Y))

    n0 = max(1, int(math.floor(x_in - x_out0)) + 1)
    if n0 > n_cap:
        raise AngleBudgetInfeasible("no admissible twist below the cap", achieved=math.inf)
    if cost(n0) <= eps:
        return n0
    step = 1
    while cost(n0 + step) > eps:
        if n0 + step >= n_cap:
            raise AngleBudgetInfeasible(f"twist cap {n_cap} reached before angle budget {eps}",
                                        achieved=cost(n_cap))
        step = min(2 * step, n_cap - n0)
    bad, good = n0 + step // 2, n0 + step
    if step == 1:
        bad = n0
    while good - bad > 1:
        mid = (good + bad) // 2
        if cost(mid) <= eps:
            good = mid
        else:
            bad = mid
    return good


def build_concatenation(plan: ConcatenationPlan, N: int) -> DenseConcatenation:
    """Splice the first ``N`` generators in the order 0, 1, -1, 2, -2, ..."""
    if not 1 <= N <= len(plan.generator):
        raise ValueError(f"N must lie in [1, {len(plan.generator)}]")
    gen = {plan.position(j): plan.generator[j] for j in range(N)}
    frames = {0: MappingClassElement.identity()}
    splices = {}
    Y = plan.Y2
    T = MappingClassElement.translation
    for j in range(1, N):
        pos = plan.position(j)
        L, R = (pos - 1, pos) if pos > 0 else (pos, pos + 1)
        gL = cusp_normalizer(gen[L].end)
        gR = cusp_normalizer(gen[R].start)
        x_in = float(gL.apply_boundary(gen[L].start).value)
        x_out0 = float(gR.apply_boundary(gen[R].end).value)
        eps = plan.budget(j)
        n = minimal_twist(x_in, x_out0, Y, eps, plan.n_cap)
        M = gL.inverse() @ T(n) @ gR
        if pos > 0:
            frames[R] = frames[L] @ M
        else:
            frames[L] = frames[R] @ M.inverse()
        angles = _splice_angles(x_in, x_out0 + n, Y)
        splices[(L, R)] = Splice(L, R, j, n, tuple(angles), x_in, x_out0 + n, frames[L] @ gL.inverse())
    legs = {k: Leg(k, gen[k], frames[k], retained_segment(gen[k], Y)) for k in gen}
    segs, angles = [], []
    order = sorted(legs)
    for k in order:
        segs.append(FramedSegment(legs[k].segment, legs[k].frame, "leg", k))
        if k + 1 in legs:
            sp = splices[(k, k + 1)]
            chord = geodesic_between(HalfPlanePoint(sp.x_in, Y), HalfPlanePoint(sp.x_out, Y))
            segs.append(FramedSegment(chord, sp.frame, "splice", k))
            angles.extend(sp.angles)
    return DenseConcatenation(plan, N, legs, tuple(splices[key] for key in sorted(splices)), tuple(segs), tuple(angles))


# ---------------------------------------------------------------------------
# multiprecision helpers


def _dps_for(frames) -> int:
    big = max((max(abs(v) for v in f.entries) for f in frames), default=1)
    return 30 + 2 * (len(str(big)) + 1)


def _mp_apply(M: MappingClassElement, z):
    a, b, c, d = (mpmath.mpf(v) for v in M.entries)
    return (a * z + b) / (c * z + d)


def _mp_apply_boundary(M: MappingClassElement, e):
    a, b, c, d = (mpmath.mpf(v) for v in M.entries)
    if e is None:
        return None if c == 0 else a / c
    den = c * e + d
    if den == 0:
        return None
    return (a * e + b) / den


def _mp_point(M: MappingClassElement, p: HalfPlanePoint):
    return _mp_apply(M, mpmath.mpc(p.x, p.y))


def _mp_ends(P, Q):
    """Boundary endpoints (start, end) of the geodesic through P then Q; None is infinity."""
    dx = Q.real - P.real
    scale = max(abs(P), abs(Q), mpmath.mpf(1))
    if abs(dx) <= mpmath.mpf(10) ** (-mpmath.mp.dps + 5) * scale:
        x = P.real
        return (x, None) if Q.imag > P.imag else (None, x)
    c = (abs(Q) ** 2 - abs(P) ** 2) / (2 * dx)
    r = abs(P - c)
    return (c - r, c + r) if dx > 0 else (c + r, c - r)


def _mp_abs_axis(e1, e2, z):
    """|A(z)| for the axis map sending e1 -> 0 and e2 -> infinity."""
    if e2 is None:
        return abs(z - e1)
    if e1 is None:
        return 1 / abs(z - e2)
    return abs(z - e1) / abs(z - e2)


def _mp_dist(z, w):
    return 2 * mpmath.asinh(abs(z - w) / (2 * mpmath.sqrt(z.imag * w.imag)))


def _bp(e):
    return BoundaryPoint.infinity() if e is None else BoundaryPoint(float(e), False)


@dataclass(frozen=True)
class _ChordFrame:
    geo: Geodesic
    t_start: float
    t_end: float


def _chord_in_frame(M_inv: MappingClassElement, ends, P, Q) -> _ChordFrame:
    e1 = _mp_apply_boundary(M_inv, ends[0])
    e2 = _mp_apply_boundary(M_inv, ends[1])
    Pl = _mp_apply(M_inv, P)
    Ql = _mp_apply(M_inv, Q)
    t1 = float(mpmath.log(_mp_abs_axis(e1, e2, Pl)))
    t2 = float(mpmath.log(_mp_abs_axis(e1, e2, Ql)))
    return _ChordFrame(Geodesic(_bp(e1), _bp(e2)), t1, t2)


def _mp_mid_tangent(ends, p0):
    """Foot of p0 on the chord and the chord direction there (central frame)."""
    e1, e2 = ends
    # axis map rows; see Geodesic.axis_map for the float counterpart
    if e2 is None:
        A = (1, -e1, 0, 1)
    elif e1 is None:
        A = (0, -1, 1, -e2)
    elif e2 > e1:
        A = (1, -e1, -1, e2)
    else:
        A = (1, -e1, 1, -e2)
    A = tuple(mpmath.mpf(v) for v in A)
    a, b, c, d = A
    w = (a * p0 + b) / (c * p0 + d)
    r = abs(w)
    Bi = (d, -b, -c, a)
    wf = mpmath.mpc(0, r)
    foot = (Bi[0] * wf + Bi[1]) / (Bi[2] * wf + Bi[3])
    direction = -2 * mpmath.arg(Bi[2] * wf + Bi[3])
    return foot, direction


def _mp_bundle_dist(t1, t2):
    (z1, a1), (z2, a2) = t1, t2
    da = (a1 - a2 + mpmath.pi) % (2 * mpmath.pi) - mpmath.pi
    return _mp_dist(z1, z2) + abs(da)


# ---------------------------------------------------------------------------
# chords and the chordal limit


@dataclass(frozen=True, eq=False)
class ChordInfo:
    n: int
    lo: int
    hi: int
    length: float
    midpoint_tangent: UnitTangent
    ends: tuple = field(repr=False)
    P: object = field(repr=False)
    Q: object = field(repr=False)
    dps: int = 50


def chord_between(C: DenseConcatenation, lo: int, hi: int) -> ChordInfo:
    """Chord joining the midpoints of legs ``lo`` and ``hi`` (central frame)."""
    dps = _dps_for([leg.frame for leg in C.legs.values()])
    with mpmath.workdps(dps):
        P = _mp_point(C.legs[lo].frame, C.legs[lo].midpoint)
        Q = _mp_point(C.legs[hi].frame, C.legs[hi].midpoint)
        if P == Q:
            raise DegenerateChord("chord endpoints coincide")
        ends = _mp_ends(P, Q)
        p0 = mpmath.mpc(C.legs[0].midpoint.x, C.legs[0].midpoint.y)
        foot, direction = _mp_mid_tangent(ends, p0)
        length = float(_mp_dist(P, Q))
        mt = UnitTangent(HalfPlanePoint(float(foot.real), float(foot.imag)), float(direction))
    return ChordInfo(max(-lo, hi), lo, hi, length, mt, ends, P, Q, dps)


def _subarc(C: DenseConcatenation, lo: int, hi: int):
    """Framed pieces from the midpoint of leg lo to the midpoint of leg hi, with joint angles."""
    spl = {s.left: s for s in C.splices}
    pieces, angles = [], []
    for fs in C.segments:
        k = fs.index
        if fs.kind == "splice":
            if lo <= k < hi:
                pieces.append(fs)
                angles.extend(spl[k].angles)
            continue
        if k < lo or k > hi or lo == hi:
            continue
        seg = fs.segment
        half = 0.5 * seg.length
        if k == lo:
            seg = seg.subsegment(half, seg.length)
        elif k == hi:
            seg = seg.subsegment(0.0, half)
        pieces.append(FramedSegment(seg, fs.frame, "leg", k))
    return pieces, angles


def chord_profile(C: DenseConcatenation, chord: ChordInfo, per_unit: int = 128):
    """Distance profile of the subarc between the chord's endpoints."""
    pieces, angles = _subarc(C, chord.lo, chord.hi)
    prof_pieces = []
    with mpmath.workdps(chord.dps):
        for fs in pieces:
            cf = _chord_in_frame(fs.frame.inverse(), chord.ends, chord.P, chord.Q)
            forward = cf.t_end >= cf.t_start
            prof_pieces.append(leg_profile(fs.segment, cf.geo, (cf.t_start, cf.t_end), forward, per_unit))
    return assemble_profile(prof_pieces, angles, per_unit), pieces, angles


@dataclass(frozen=True, eq=False)
class ChordalLimit:
    chords: tuple
    midpoint_tangents: tuple
    cauchy_gaps: tuple
    limit_tangent: UnitTangent | None
    certified_depth: int | None
    window_max_F: tuple
    derivative_reports: tuple
    leg_max_F: tuple

    def to_json(self) -> dict:
        return {
            "n": [c.n for c in self.chords],
            "chord_length": [c.length for c in self.chords],
            "midpoint_tangents": [t.to_json() for t in self.midpoint_tangents],
            "cauchy_gaps": list(self.cauchy_gaps),
            "window_max_F": list(self.window_max_F),
            "max_abs_dF": [r.max_abs_derivative for r in self.derivative_reports],
            "limit": None if self.limit_tangent is None else {
                "tangent": self.limit_tangent.to_json(),
                "certified_depth": self.certified_depth,
                "tol": TOL_LIMIT,
            },
        }


def chordal_limit(C: DenseConcatenation, vertex_indices, tol_limit: float = TOL_LIMIT,
                  per_unit: int = 128) -> ChordalLimit:
    """Chords p_{-n} p_n for the nested ``vertex_indices`` and their Cauchy data.

    The midpoint tangent of a chord is its tangent at the foot of the central
    leg's midpoint.  Gaps are bundle distances (base distance plus angle)
    between consecutive midpoint tangents, computed in multiprecision.
    """
    ns = sorted(int(n) for n in vertex_indices)
    if len(ns) < 3 and not (C.N == 1):
        raise ValueError("need at least three nested indices")
    if C.N == 1:
        leg = C.legs[0]
        t = leg.segment.tangent(0.5 * leg.segment.length)
        return ChordalLimit((), (t,), (), t, 0, (), (), ())
    chords, mids, gaps, windows, reports, legmax = [], [], [], [], [], []
    prev = None
    for n in ns:
        if -n not in C.legs or n not in C.legs:
            raise ValueError(f"legs -{n} and {n} are not both present")
        ch = chord_between(C, -n, n)
        chords.append(ch)
        mids.append(ch.midpoint_tangent)
        with mpmath.workdps(ch.dps):
            P = _mp_point(C.legs[-n].frame, C.legs[-n].midpoint)
            Q = _mp_point(C.legs[n].frame, C.legs[n].midpoint)
            p0 = mpmath.mpc(C.legs[0].midpoint.x, C.legs[0].midpoint.y)
            cur = _mp_mid_tangent(_mp_ends(P, Q), p0)
            if prev is not None:
                gaps.append(float(_mp_bundle_dist(prev, cur)))
            prev = cur
        prof, pieces, angles = chord_profile(C, ch, per_unit)
        reports.append(verify_derivative_bound(prof, float(sum(angles))))
        lo_w = max(1, n // 2)
        win = [i for i, fs in enumerate(pieces) if abs(fs.index + (0.5 if fs.kind == "splice" else 0.0)) >= lo_w]
        mask = np.isin(prof.leg, win)
        windows.append(float(prof.F[mask].max()) if mask.any() else 0.0)
        per_leg = {}
        for i, fs in enumerate(pieces):
            if fs.kind == "leg":
                sel = prof.leg == i
                per_leg[fs.index] = float(prof.F[sel].max())
        legmax.append(per_leg)
    if any(gaps[i + 1] >= gaps[i] for i in range(len(gaps) - 1)):
        raise NotCauchy("midpoint tangents are not contracting", gaps=tuple(gaps))
    limit, depth = None, None
    if gaps and gaps[-1] < tol_limit:
        limit, depth = mids[-1], ns[-1]
    return ChordalLimit(tuple(chords), tuple(mids), tuple(gaps), limit, depth, tuple(windows), tuple(reports), tuple(legmax))


# ---------------------------------------------------------------------------
# non-degeneration


def _height_in(M: MappingClassElement, z: np.ndarray) -> np.ndarray:
    """Im(M z) for integer M of determinant one."""
    _, _, c, d = M.entries
    c, d = float(c), float(d)
    return z.imag / np.abs(c * z + d) ** 2


def check_no_degeneration(C: DenseConcatenation, chords=None, samples_per_unit: int = 64) -> dict:
    """Cusp-ball connectivity of C and chord clearance at the half-radius ball.

    (a) At every splice cusp, the samples of C inside the height-Y1 horoball
    form one run.  (b) Where a chord crosses the horocycle of height 2*Y1 at
    a splice cusp, its distance to C is at most delta2.
    """
    plan = C.plan
    runs = {}
    connected = True
    for sp in C.splices:
        inside = []
        for fs in C.segments:
            M = sp.frame.inverse() @ fs.frame
            m = max(3, int(math.ceil(fs.length * samples_per_unit)))
            z = np.asarray(fs.segment.points(np.linspace(0.0, fs.length, m)), dtype=complex)
            inside.append(_height_in(M, z) > plan.Y1)
        flags = np.concatenate(inside)
        starts = int(np.sum(flags[1:] & ~flags[:-1]) + (1 if flags[0] else 0))
        runs[(sp.left, sp.right)] = starts
        connected &= starts == 1
    if chords is None and C.N > 1:
        chords = [chord_between(C, C.lo, C.hi)]
    clearance = math.inf
    crossings = 0
    for ch in chords or ():
        with mpmath.workdps(ch.dps):
            for sp in C.splices:
                if not (ch.lo <= sp.left and sp.right <= ch.hi):
                    continue
                cf = _chord_in_frame(sp.frame.inverse(), ch.ends, ch.P, ch.Q)
                for x, y in _horizontal_crossings(cf.geo, 2.0 * plan.Y1):
                    crossings += 1
                    d = min(math.asinh(abs(x - sp.x_in) / y), math.asinh(abs(x - sp.x_out) / y))
                    clearance = min(clearance, plan.delta2 - d)
    passed = connected and (clearance >= 0.0)
    return {"connected": connected, "runs": {f"{k[0]}:{k[1]}": v for k, v in runs.items()},
            "crossings": crossings, "min_clearance": clearance, "passed": bool(passed)}


def _horizontal_crossings(geo: Geodesic, y: float):
    if geo.kind == "vertical-line":
        x = float(geo.start.value) if not geo.start.is_infinite else float(geo.end.value)
        return [(x, y)]
    a, b = float(geo.start.value), float(geo.end.value)
    c, r = 0.5 * (a + b), 0.5 * abs(b - a)
    if r < y:
        return []
    h = math.sqrt(r * r - y * y)
    return [(c - h, y), (c + h, y)]


# ---------------------------------------------------------------------------
# tangent samples and coverage


def _tangents_on_axis(geo: Geodesic, t: np.ndarray):
    """Points and directions at axis parameters ``t`` (oriented start -> end)."""
    m = _mob_inv(geo.axis_map())
    a, b, c, d = m
    w = 1j * np.exp(t)
    den = c * w + d
    z = (a * w + b) / den
    return z, wrap_angle(-2.0 * np.angle(den))


def chord_tangent_samples(C: DenseConcatenation, chord: ChordInfo, ds: float = 0.05,
                          max_height: float = CHART_HEIGHT) -> np.ndarray:
    """Reduced tangents (x, y, dir) along the chord, segment by segment.

    In each piece's frame the sampled stretch of the chord runs between the
    feet of the piece's endpoints; samples above ``max_height`` in that frame
    are skipped before reduction since they stay in the cusp.
    """
    pieces, _ = _subarc(C, chord.lo, chord.hi)
    out = []
    with mpmath.workdps(chord.dps):
        for fs in pieces:
            cf = _chord_in_frame(fs.frame.inverse(), chord.ends, chord.P, chord.Q)
            lo, hi = min(cf.t_start, cf.t_end), max(cf.t_start, cf.t_end)
            ends = np.array([fs.segment.start.z, fs.segment.end.z])
            _, _, tt, _ = _project_axis(cf.geo, ends, (lo, hi))
            t0, t1 = float(np.min(tt)), float(np.max(tt))
            if t1 <= t0:
                continue
            t = np.arange(t0, t1, ds)
            z, dirs = _tangents_on_axis(cf.geo, t)
            keep = (z.imag > 0) & np.isfinite(z.real)
            out.append(np.stack([z.real[keep], z.imag[keep], dirs[keep]], axis=1))
    if not out:
        return np.zeros((0, 3))
    return reduce_samples(np.concatenate(out))


def reduce_samples(samples: np.ndarray) -> np.ndarray:
    """Reduce (x, y, dir) rows to the standard fundamental domain."""
    res = np.empty_like(samples)
    for i, (x, y, d) in enumerate(samples):
        t, _ = reduce_tangent(UnitTangent(HalfPlanePoint(float(x), float(y)), float(d)))
        res[i] = (t.base.x, t.base.y, t.dir)
    return res


def geodesic_tangent_samples(geodesics, Y: float = CHART_HEIGHT, ds: float = 0.05) -> np.ndarray:
    """Reduced tangents along singular geodesics between their height-Y horocycles."""
    out = []
    for g in geodesics:
        seg = retained_segment(g, Y)
        s = np.arange(0.0, seg.length, ds)
        z = np.asarray(seg.points(s))
        d = np.asarray(seg.dirs(s))
        out.append(np.stack([z.real, z.imag, d], axis=1))
    return reduce_samples(np.concatenate(out)) if out else np.zeros((0, 3))


def coverage_grid(nx: int = 12, ny: int = 10, ntheta: int = 16, max_height: float = CHART_HEIGHT) -> np.ndarray:
    """Cells (x, y, dir) over the fundamental domain truncated at ``max_height``."""
    xs = np.linspace(-0.5, 0.5, nx)
    ys = np.geomspace(math.sqrt(3) / 2, max_height, ny)
    th = np.linspace(-math.pi, math.pi, ntheta, endpoint=False) + math.pi / ntheta
    X, Yg = np.meshgrid(xs, ys, indexing="ij")
    base = np.stack([X.ravel(), Yg.ravel()], axis=1)
    base = base[base[:, 0] ** 2 + base[:, 1] ** 2 >= 1.0 - 1e-12]
    cells = [(x, y, t) for x, y in base for t in th]
    return np.array(cells)


_SIDE_IMAGES = [
    (1, 1, 0, 1), (1, -1, 0, 1), (0, -1, 1, 0),
    (0, -1, 1, 1), (0, -1, 1, -1), (1, -1, 1, 0), (-1, -1, 1, 0),
]


def _with_images(samples: np.ndarray) -> np.ndarray:
    out = [samples]
    z = samples[:, 0] + 1j * samples[:, 1]
    for a, b, c, d in _SIDE_IMAGES:
        den = c * z + d
        w = (a * z + b) / den
        rot = -2.0 * np.angle(den)
        out.append(np.stack([w.real, w.imag, wrap_angle(samples[:, 2] + rot)], axis=1))
    return np.concatenate(out)


def _as_rows(tangents) -> np.ndarray:
    if isinstance(tangents, np.ndarray):
        return tangents.reshape(-1, 3)
    rows = [(t.base.x, t.base.y, t.dir) for t in tangents]
    return np.array(rows, dtype=float).reshape(-1, 3)


def density_coverage(tangents, eps: float, grid: np.ndarray | None = None, chunk: int = 2048) -> float:
    """Fraction of chart cells within ``eps`` of some sample.

    Distance is hyperbolic base distance plus angle difference; samples also
    act through the side pairings so cells near the boundary see them.
    """
    grid = coverage_grid() if grid is None else grid
    S = _as_rows(tangents)
    if len(S) == 0 or len(grid) == 0:
        return 0.0
    S = _with_images(S)
    gz = grid[:, 0] + 1j * grid[:, 1]
    covered = np.zeros(len(grid), dtype=bool)
    for i in range(0, len(S), chunk):
        blk = S[i:i + chunk]
        bz = blk[:, 0] + 1j * blk[:, 1]
        d = 2.0 * np.arcsinh(np.abs(gz[:, None] - bz[None, :]) / (2.0 * np.sqrt(gz.imag[:, None] * bz.imag[None, :])))
        da = np.abs(wrap_angle(grid[:, 2][:, None] - blk[:, 2][None, :]))
        covered |= np.any(d + da <= eps, axis=1)
    return float(covered.mean())


def accumulation_distance(C: DenseConcatenation, ds: float = 0.05, max_height: float = CHART_HEIGHT) -> float:
    """Hausdorff distance (chart metric) between the spanning chord and the generators.

    The legs of C are pieces of the generators themselves and the splice arcs
    stay above the chart, so the informative comparison is the geodesic
    joining the outermost leg midpoints against the legs it spans, both
    reduced and restricted to the truncated chart.
    """
    if C.N == 1:
        return 0.0
    A = chord_tangent_samples(C, chord_between(C, C.lo, C.hi), ds, max_height)
    rows = []
    for fs in _subarc(C, C.lo, C.hi)[0]:
        if fs.kind == "leg":
            s = np.arange(0.0, fs.length, ds)
            z = np.asarray(fs.segment.points(s))
            rows.append(np.stack([z.real, z.imag, np.asarray(fs.segment.dirs(s))], axis=1))
    B = reduce_samples(np.concatenate(rows))
    A = A[A[:, 1] <= max_height]
    B = B[B[:, 1] <= max_height]
    if len(A) == 0 or len(B) == 0:
        return 0.0

    def directed(U, V):
        V = _with_images(V)
        best = np.full(len(U), np.inf)
        for i in range(0, len(V), 2048):
            blk = V[i:i + 2048]
            uz = U[:, 0] + 1j * U[:, 1]
            vz = blk[:, 0] + 1j * blk[:, 1]
            d = 2.0 * np.arcsinh(np.abs(uz[:, None] - vz[None, :]) / (2.0 * np.sqrt(uz.imag[:, None] * vz.imag[None, :])))
            da = np.abs(wrap_angle(U[:, 2][:, None] - blk[:, 2][None, :]))
            best = np.minimum(best, np.min(d + da, axis=1))
        return float(best.max())

    return max(directed(A, B), directed(B, A))


def coverage_curve(plan: ConcatenationPlan, Ns, eps: float = 0.3, ds: float = 0.05) -> list[dict]:
    """Coverage of tangent samples along the spanning chord for each truncation."""
    grid = coverage_grid()
    rows = []
    for N in Ns:
        C = build_concatenation(plan, N)
        if C.N == 1:
            leg = C.legs[0].segment
            s = np.arange(0.0, leg.length, ds)
            z = np.asarray(leg.points(s))
            samples = reduce_samples(np.stack([z.real, z.imag, np.asarray(leg.dirs(s))], axis=1))
        else:
            samples = chord_tangent_samples(C, chord_between(C, C.lo, C.hi), ds)
        rows.append({"N": int(N), "samples": int(len(samples)), "coverage": density_coverage(samples, eps, grid),
                     "ea_total": C.ea_total})
    return rows
