"""Piecewise geodesics and the twisting construction near a cusp.

A concatenation is a list of legs with matching endpoints.  Legs are either
closed-form hyperbolic :class:`GeodesicSegment` objects or integrated
:class:`GeodesicPath` objects; both are read through the small adapter
functions below, which work in chart coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import CuspMismatch, DegenerateChord, EndpointMismatch
from .hyp_geometry import (
    BoundaryPoint,
    Geodesic,
    GeodesicSegment,
    HalfPlanePoint,
    MappingClassElement,
    geodesic_between,
)
from .metric_engine import (
    HYPERBOLIC,
    ChordResult,
    GeodesicPath,
    MetricBackend,
    chord_angle_length,
    chord_bvp,
    hyperbolic_backend,
)

TOL_MATCH = 1e-6


# ---------------------------------------------------------------------------
# leg adapters


def leg_length(leg) -> float:
    return float(leg.length)


def leg_points(leg, s) -> np.ndarray:
    """Chart points (..., 2) at arclengths ``s``."""
    s = np.asarray(s, dtype=float)
    if isinstance(leg, GeodesicSegment):
        z = np.asarray(leg.points(s), dtype=complex)
        return np.stack([z.real, z.imag], axis=-1)
    return leg.point_at(s)


def leg_velocities(leg, s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if isinstance(leg, GeodesicSegment):
        z = np.asarray(leg.points(s), dtype=complex)
        d = np.asarray(leg.dirs(s), dtype=float)
        return np.stack([-np.sin(d) * z.imag, np.cos(d) * z.imag], axis=-1)
    return leg.velocity_at(s)


def leg_start(leg) -> np.ndarray:
    if isinstance(leg, GeodesicSegment):
        return np.array([leg.start.x, leg.start.y])
    return np.asarray(leg.start, dtype=float)


def leg_end(leg) -> np.ndarray:
    if isinstance(leg, GeodesicSegment):
        return np.array([leg.end.x, leg.end.y])
    return np.asarray(leg.end, dtype=float)


def leg_start_velocity(leg) -> np.ndarray:
    if isinstance(leg, GeodesicSegment):
        return leg.start_tangent.velocity()
    return np.asarray(leg.start_velocity, dtype=float)


def leg_end_velocity(leg) -> np.ndarray:
    if isinstance(leg, GeodesicSegment):
        return leg.end_tangent.velocity()
    return np.asarray(leg.end_velocity, dtype=float)


def leg_to_json(leg) -> dict:
    return leg.to_json()


def _gap(backend: MetricBackend, p, u, v) -> float:
    return backend.angle(p, u, v)


# ---------------------------------------------------------------------------
# concatenations


@dataclass(frozen=True, eq=False)
class Concatenation:
    """Ordered geodesic legs; exterior angles are metric angles at the joints."""

    segments: tuple
    exterior_angles: tuple
    backend: MetricBackend = field(default_factory=hyperbolic_backend)

    @classmethod
    def from_segments(cls, segments, backend: MetricBackend | None = None, tol: float = TOL_MATCH):
        backend = backend or hyperbolic_backend()
        segments = tuple(segments)
        if not segments:
            raise ValueError("a concatenation needs at least one segment")
        angles = []
        for a, b in zip(segments[:-1], segments[1:]):
            p, q = leg_end(a), leg_start(b)
            d = q - p
            gap = backend.norm(p, d) if np.any(d) else 0.0
            if gap > tol:
                raise EndpointMismatch(f"segment ends at {p} but the next starts at {q} (gap {gap:.3e})")
            angles.append(_gap(backend, p, leg_end_velocity(a), leg_start_velocity(b)))
        return cls(segments, tuple(angles), backend)

    @property
    def ea_total(self) -> float:
        return float(sum(self.exterior_angles))

    @property
    def lengths(self) -> np.ndarray:
        return np.array([leg_length(s) for s in self.segments])

    @property
    def total_length(self) -> float:
        return float(self.lengths.sum())

    @property
    def vertex_arclengths(self) -> np.ndarray:
        """Arclength positions of the interior vertices."""
        return np.cumsum(self.lengths)[:-1]

    def locate(self, s: float) -> tuple[int, float]:
        """Leg index and local arclength of the global arclength ``s``."""
        cum = np.concatenate([[0.0], np.cumsum(self.lengths)])
        s = min(max(float(s), 0.0), cum[-1])
        i = int(min(np.searchsorted(cum, s, side="right") - 1, len(self.segments) - 1))
        return i, s - cum[i]

    def point_at(self, s: float) -> np.ndarray:
        i, t = self.locate(s)
        return leg_points(self.segments[i], t)

    def velocity_at(self, s: float) -> np.ndarray:
        i, t = self.locate(s)
        return leg_velocities(self.segments[i], t)

    def to_json(self) -> dict:
        return {
            "backend": self.backend.to_json(),
            "segments": [leg_to_json(s) for s in self.segments],
            "exterior_angles": list(self.exterior_angles),
            "ea_total": self.ea_total,
        }


def exterior_angle_total(C: Concatenation, tol: float = TOL_MATCH) -> float:
    """Recompute the total exterior angle, re-checking the joints."""
    return Concatenation.from_segments(C.segments, C.backend, tol).ea_total


# ---------------------------------------------------------------------------
# twisting


@dataclass(frozen=True)
class TwistAnalysis:
    n: int
    initial_angle_gap: float
    terminal_angle_gap: float
    min_ell: float
    chord_length: float
    L0: float | None
    n0: int
    max_height: float | None = None
    chord: object = field(default=None, repr=False, compare=False)

    def row(self) -> dict:
        return {
            "n": self.n,
            "initial_gap": self.initial_angle_gap,
            "terminal_gap": self.terminal_angle_gap,
            "chord_length": self.chord_length,
            "min_ell": self.min_ell,
        }


def cusp_normalizer(cusp: BoundaryPoint) -> MappingClassElement:
    """Integer element g with g(cusp) = infinity."""
    if cusp.is_infinite:
        return MappingClassElement.identity()
    v = Fraction(cusp.value)
    p, q = v.numerator, v.denominator
    g, x, y = _egcd(p, q)
    if g < 0:
        x, y = -x, -y
    # x p + y q = 1, so [[-x, -y], [q, -p]] has determinant one and kills p/q
    return MappingClassElement(-x, -y, q, -p)


def _egcd(a: int, b: int):
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        k, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - k * x1
        y0, y1 = y1, y0 - k * y1
    return a, x0, y0


def parabolic_at(cusp: BoundaryPoint) -> MappingClassElement:
    """Generator of the stabilizer of ``cusp`` conjugate to z -> z + 1."""
    g = cusp_normalizer(cusp)
    return g.inverse() @ MappingClassElement.translation(1) @ g


def _chart(p):
    if isinstance(p, HalfPlanePoint):
        return np.array([p.x, p.y])
    if hasattr(p, "ell"):
        return np.array([p.ell, p.tau])
    return np.asarray(p, dtype=float)


def _unit_displacement_min(points: np.ndarray, s: np.ndarray, coord: int):
    """Shortest arclength of a sub-path whose ``coord`` changes by one."""
    x = points[:, coord]
    if abs(x[-1] - x[0]) < 1.0 and np.ptp(x) < 1.0:
        return None
    best = math.inf
    if np.all(np.diff(x) >= 0) or np.all(np.diff(x) <= 0):
        sign = 1.0 if x[-1] >= x[0] else -1.0
        xs = sign * x
        target = xs + 1.0
        j = np.searchsorted(xs, target, side="left")
        ok = j < len(xs)
        if np.any(ok):
            i = np.nonzero(ok)[0]
            jj = j[ok]
            # interpolate the arclength where xs reaches target
            x0, x1 = xs[jj - 1], xs[jj]
            w = np.where(x1 > x0, (target[i] - x0) / np.where(x1 > x0, x1 - x0, 1.0), 1.0)
            sj = s[jj - 1] + w * (s[jj] - s[jj - 1])
            best = float(np.min(sj - s[i]))
        return best
    for i in range(len(x)):
        k = np.nonzero(np.abs(x[i:] - x[i]) >= 1.0)[0]
        if len(k):
            best = min(best, float(s[i + k[0]] - s[i]))
    return best if math.isfinite(best) else None


def _hyperbolic_twist(cusp, p1, p2, n):
    g = cusp_normalizer(cusp)
    a = g.apply(p1)
    b = g.apply(p2)
    bn = HalfPlanePoint(b.x + n, b.y)
    if a == bn:
        return None, a, bn, g
    return geodesic_between(a, bn), a, bn, g


def twist_spiral_analysis(cusp, p1, p2, n: int, backend: MetricBackend | None = None,
                          samples: int = 2048, guess=None) -> TwistAnalysis:
    """Chord from ``p1`` to ``T^n p2`` and its angle gaps to the special tangents.

    On the hyperbolic backend ``cusp`` is a BoundaryPoint and the geometry is
    normalized so that it sits at infinity, where the special tangents are
    vertical.  On the cusp model ``cusp`` is ignored (there is one cusp,
    ell = 0) and the twist is the Dehn twist.
    """
    backend = backend or hyperbolic_backend()
    n = int(n)
    if backend.kind == HYPERBOLIC:
        cusp = cusp if isinstance(cusp, BoundaryPoint) else BoundaryPoint.infinity()
        p1 = p1 if isinstance(p1, HalfPlanePoint) else HalfPlanePoint(*p1)
        p2 = p2 if isinstance(p2, HalfPlanePoint) else HalfPlanePoint(*p2)
        seg, a, bn, _ = _hyperbolic_twist(cusp, p1, p2, n)
        if seg is None:
            return TwistAnalysis(n, math.pi, math.pi, 1.0 / a.y, 0.0, None, n, a.y, None)
        up = np.array([0.0, 1.0])
        g_init = backend.angle((a.x, a.y), seg.start_tangent.velocity(), up)
        g_term = backend.angle((bn.x, bn.y), -seg.end_tangent.velocity(), up)
        if seg.kind == "semicircle" and min(a.x, bn.x) <= seg.center <= max(a.x, bn.x):
            top = seg.radius
        else:
            top = max(a.y, bn.y)
        s = np.linspace(0.0, seg.length, samples)
        pts = leg_points(seg, s)
        L0 = _unit_displacement_min(pts, s, 0)
        disp = abs(bn.x - a.x)
        n0 = n - int(math.floor(disp)) if L0 is not None else n
        return TwistAnalysis(n, g_init, g_term, 1.0 / top, seg.length, L0, n0, top, seg)

    p1c, p2c = _chart(p1), _chart(p2)
    qn = backend.apply_twist(n, p2c)
    if np.allclose(p1c, qn, rtol=0.0, atol=1e-15):
        return TwistAnalysis(n, math.pi, math.pi, float(p1c[0]), 0.0, None, n, None, None)
    res: ChordResult = chord_bvp(backend, p1c, qn, guess=guess)
    path = res.segment
    v1 = backend.cusp_direction(p1c)
    L, _ = backend.twist(n)
    v2 = L @ backend.cusp_direction(p2c)
    g_init = backend.angle(p1c, path.start_velocity, v1)
    g_term = backend.angle(qn, -path.end_velocity, v2)
    s = np.linspace(0.0, path.total_length, samples)
    pts = path.point_at(s)
    min_ell = float(min(pts[:, 0].min(), path.points[:, 0].min()))
    L0 = _unit_displacement_min(pts, s, 1)
    disp = abs(qn[1] - p1c[1])
    n0 = n - int(math.floor(disp)) if L0 is not None else n
    return TwistAnalysis(n, g_init, g_term, min_ell, path.total_length, L0, n0, None, res)


@dataclass(frozen=True)
class TwistFamily:
    analyses: tuple
    n0: int
    L0: float | None

    def rows(self) -> list[dict]:
        return [a.row() for a in self.analyses]

    def length_bound_holds(self) -> bool:
        if self.L0 is None:
            return False
        return all(a.chord_length >= (a.n - self.n0) * self.L0 - 1e-12 for a in self.analyses if a.n > self.n0)


def monotone_threshold(ns, gaps) -> int:
    """Smallest n in ``ns`` from which ``gaps`` never increases."""
    ns = list(ns)
    gaps = list(gaps)
    k = len(gaps) - 1
    while k > 0 and gaps[k - 1] >= gaps[k]:
        k -= 1
    return int(ns[k]) if ns else 0


def twist_family(cusp, p1, p2, ns, backend: MetricBackend | None = None) -> TwistFamily:
    """Analyses over a range of twist exponents with family-level n0 and L0.

    On the cusp model each chord seeds the next by continuation.
    """
    backend = backend or hyperbolic_backend()
    out = []
    guess = None
    for n in sorted(int(v) for v in ns):
        a = twist_spiral_analysis(cusp, p1, p2, n, backend, guess=guess)
        if isinstance(a.chord, ChordResult):
            guess = chord_angle_length(a.chord)
        out.append(a)
    ns_sorted = [a.n for a in out]
    gaps = [max(a.initial_angle_gap, a.terminal_angle_gap) for a in out]
    n0 = monotone_threshold(ns_sorted, gaps)
    L0s = [a.L0 for a in out if a.L0 is not None]
    return TwistFamily(tuple(out), n0, min(L0s) if L0s else None)


# ---------------------------------------------------------------------------
# twist concatenation


def horocycle_level(delta: float) -> float:
    """Default map from a cusp distance parameter to a horocycle height."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    return 1.0 / delta


def _as_geodesic(g) -> Geodesic:
    if isinstance(g, Geodesic):
        return g
    if isinstance(g, GeodesicSegment):
        return g.complete()
    raise TypeError(f"expected a Geodesic, got {type(g).__name__}")


def twist_concatenate(gamma1, gamma2, delta: float, n: int, backend: MetricBackend | None = None,
                      level=horocycle_level, tail: float = 2.0) -> Concatenation:
    """Splice two cusp-bound geodesics through the cusp region with twist ``T^n``.

    The result is ``gamma1`` up to its crossing ``p1`` of the cusp region,
    the chord ``p1 -> T^n p2`` and ``T^n gamma2`` run backwards from
    ``T^n p2``.  ``tail`` is the arclength kept on either side.  On the
    hyperbolic backend the inputs are complete geodesics ending at the same
    cusp and the cusp region is the horoball of height ``level(delta)``; on
    the cusp model they are cusp-terminated GeodesicPaths truncated at
    distance ``delta`` from the cusp.
    """
    backend = backend or hyperbolic_backend()
    n = int(n)
    if backend.kind == HYPERBOLIC:
        return _twist_concatenate_hyp(_as_geodesic(gamma1), _as_geodesic(gamma2), delta, n, level, tail)
    return _twist_concatenate_wp(gamma1, gamma2, delta, n, backend, tail)


def _twist_concatenate_hyp(g1: Geodesic, g2: Geodesic, delta, n, level, tail):
    if g1.end != g2.end:
        raise CuspMismatch(f"geodesics end at different cusps {g1.end} and {g2.end}")
    cusp = g1.end
    g = cusp_normalizer(cusp)
    ginv = g.inverse()
    Y = float(level(delta))
    a1 = _foot_at_infinity(g, g1.start)
    a2 = _foot_at_infinity(g, g2.start)
    local = splice_at_infinity(a1, a2 + n, Y, tail)
    legs = [leg.transformed(ginv) for leg in local.segments]
    return Concatenation.from_segments(legs, hyperbolic_backend())


def splice_at_infinity(x_in: float, x_out: float, Y: float, tail: float = 1.0) -> Concatenation:
    """Vertical leg up ``x_in``, chord at height ``Y``, vertical leg down ``x_out``."""
    p1 = HalfPlanePoint(x_in, Y)
    q = HalfPlanePoint(x_out, Y)
    if p1 == q:
        raise DegenerateChord("twisted endpoints coincide")
    low = Y * math.exp(-tail)
    s1 = geodesic_between(HalfPlanePoint(x_in, low), p1)
    chord = geodesic_between(p1, q)
    s3 = geodesic_between(q, HalfPlanePoint(x_out, low))
    return Concatenation.from_segments([s1, chord, s3], hyperbolic_backend())


def _foot_at_infinity(g: MappingClassElement, start: BoundaryPoint) -> float:
    b = g.apply_boundary(start)
    if b.is_infinite:
        raise DegenerateChord("geodesic joins the cusp to itself")
    return float(b.value)


def _distance_to_cusp_along(backend, path: GeodesicPath) -> np.ndarray:
    return path.total_length - path.s + backend.distance_to_cusp(path.end)


def _twist_concatenate_wp(path1: GeodesicPath, path2: GeodesicPath, delta, n, backend, tail):
    for p in (path1, path2):
        if not p.terminated_at_cusp:
            raise CuspMismatch("cusp-model inputs must be cusp-terminated geodesics")
    r1 = backend.distance_to_cusp(path1.end)
    r2 = backend.distance_to_cusp(path2.end)
    s1 = path1.total_length + r1 - delta
    s2 = path2.total_length + r2 - delta
    if s1 <= 0 or s2 <= 0:
        raise ValueError("delta exceeds the distance from the start to the cusp")
    head = path1.truncate(max(0.0, s1 - tail), s1)
    back = path2.truncate(max(0.0, s2 - tail), s2).reversed()
    L, shift = backend.twist(n)
    back = back.transformed(L, shift)
    res = chord_bvp(backend, head.end, back.start)
    return Concatenation.from_segments([head, res.segment, back], backend, tol=max(TOL_MATCH, 10 * res.endpoint_error))


def closeness_outside(C: Concatenation, level: float) -> dict:
    """How far the middle chord strays from the two vertical legs below ``level``.

    Hyperbolic backend, cusp at infinity, as produced by twist_concatenate
    with the identity normalizer.  Returns the maximal hyperbolic distance
    and direction deviation of chord points below height ``level`` from the
    nearer of the two vertical lines.
    """
    chord = C.segments[1]
    a1 = leg_start(chord)[0]
    a2 = leg_end(chord)[0]
    s = np.linspace(0.0, leg_length(chord), 4096)
    P = leg_points(chord, s)
    V = leg_velocities(chord, s)
    mask = P[:, 1] <= level
    if not np.any(mask):
        return {"max_distance": 0.0, "max_angle": 0.0, "samples": 0}
    P, V = P[mask], V[mask]
    d1 = np.arcsinh(np.abs(P[:, 0] - a1) / P[:, 1])
    d2 = np.arcsinh(np.abs(P[:, 0] - a2) / P[:, 1])
    near_first = d1 <= d2
    dist = np.where(near_first, d1, d2)
    # direction deviation from straight up (first leg) or straight down (last leg)
    ang = np.arctan2(np.abs(V[:, 0]), np.where(near_first, V[:, 1], -V[:, 1]))
    return {"max_distance": float(dist.max()), "max_angle": float(np.abs(ang).max()), "samples": int(mask.sum())}
