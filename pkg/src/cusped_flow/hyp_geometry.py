"""Exact constant-curvature geometry of the upper half-plane and the modular group.

Points are ``HalfPlanePoint`` values; tangent directions are angles measured
counterclockwise from the vertical, so the special tangent toward the cusp at
infinity is ``dir == 0``.  All closed forms go through Moebius maps: the unit
tangent at ``x0 + i*y0`` with direction ``theta`` is the image of the vertical
tangent at ``i`` under ``z -> x0 + y0 * R_theta(z)`` where ``R_theta`` is the
elliptic rotation about ``i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Integral, Rational

import numpy as np

from .errors import BaseMismatch, DegenerateChord, InvalidTriangle, NonTermination

TOL_GEOM = 1e-9
MAX_REDUCTION_STEPS = 10_000

__all__ = [
    "TOL_GEOM",
    "HalfPlanePoint",
    "BoundaryPoint",
    "UnitTangent",
    "Geodesic",
    "GeodesicSegment",
    "MappingClassElement",
    "FNPoint",
    "CuspPoint",
    "CUSP",
    "dist",
    "dist_many",
    "direction_to",
    "flow",
    "geodesic_between",
    "angle_between",
    "project_to_geodesic",
    "triangle_opposite_side",
    "reduce_to_fundamental_domain",
    "reduce_tangent",
    "dehn_twist_fn",
    "wrap_angle",
]


def wrap_angle(a):
    """Normalize an angle (scalar or array) to (-pi, pi]."""
    return a - 2.0 * np.pi * np.ceil((a - np.pi) / (2.0 * np.pi))


def _wrap(a: float) -> float:
    return a - 2.0 * math.pi * math.ceil((a - math.pi) / (2.0 * math.pi))


# ---------------------------------------------------------------------------
# Domain types


@dataclass(frozen=True)
class HalfPlanePoint:
    x: float
    y: float

    def __post_init__(self):
        if not (self.y > 0.0) or not math.isfinite(self.x) or not math.isfinite(self.y):
            raise ValueError(f"not a point of the upper half-plane: ({self.x}, {self.y})")

    @property
    def z(self) -> complex:
        return complex(self.x, self.y)

    @classmethod
    def from_complex(cls, z: complex) -> "HalfPlanePoint":
        return cls(float(z.real), float(z.imag))

    def to_json(self) -> dict:
        return {"x": self.x, "y": self.y}

    @classmethod
    def from_json(cls, d: dict) -> "HalfPlanePoint":
        return cls(float(d["x"]), float(d["y"]))


@dataclass(frozen=True)
class BoundaryPoint:
    """A point of the extended real line.

    ``rational`` is a statement about how the value was supplied, never a
    guess recovered from a float.  Use ``BoundaryPoint.cusp(p, q)`` for exact
    cusps; ``q == 0`` gives the cusp at infinity.
    """

    value: float | Fraction
    rational: bool = False

    def __post_init__(self):
        v = self.value
        if isinstance(v, Integral):
            object.__setattr__(self, "value", Fraction(int(v)))
            v = self.value
        if self.rational and not (isinstance(v, Rational) or v == math.inf):
            raise ValueError("rational flag requires an exact integer ratio")
        if isinstance(v, float) and (math.isnan(v) or v == -math.inf):
            raise ValueError(f"invalid boundary value {v}")

    @classmethod
    def cusp(cls, p: int, q: int = 1) -> "BoundaryPoint":
        if q == 0:
            if p == 0:
                raise ValueError("0/0 is not a cusp")
            return cls(math.inf, True)
        return cls(Fraction(p, q), True)

    @classmethod
    def infinity(cls) -> "BoundaryPoint":
        return cls(math.inf, True)

    @property
    def is_infinite(self) -> bool:
        return self.value == math.inf

    def __float__(self) -> float:
        return float(self.value)

    def to_json(self) -> dict:
        if self.is_infinite:
            return {"value": "inf", "rational": self.rational}
        if isinstance(self.value, Fraction):
            return {"value": f"{self.value.numerator}/{self.value.denominator}", "rational": self.rational}
        return {"value": self.value, "rational": self.rational}

    @classmethod
    def from_json(cls, d: dict) -> "BoundaryPoint":
        v = d["value"]
        if v == "inf":
            return cls(math.inf, bool(d.get("rational", True)))
        if isinstance(v, str):
            return cls(Fraction(v), bool(d.get("rational", True)))
        return cls(float(v), bool(d.get("rational", False)))


@dataclass(frozen=True)
class UnitTangent:
    """Unit tangent vector; ``dir`` is measured counterclockwise from vertical."""

    base: HalfPlanePoint
    dir: float

    def __post_init__(self):
        object.__setattr__(self, "dir", float(_wrap(float(self.dir))))

    def euclidean(self) -> tuple[float, float]:
        return (-math.sin(self.dir), math.cos(self.dir))

    def velocity(self) -> np.ndarray:
        """Chart components of the vector (hyperbolic norm one)."""
        return self.base.y * np.array([-math.sin(self.dir), math.cos(self.dir)])

    def reversed(self) -> "UnitTangent":
        return UnitTangent(self.base, self.dir + math.pi)

    @classmethod
    def from_velocity(cls, base: HalfPlanePoint, v) -> "UnitTangent":
        return cls(base, math.atan2(-float(v[0]), float(v[1])))

    def to_json(self) -> dict:
        return {"base": self.base.to_json(), "dir": self.dir}


@dataclass(frozen=True)
class FNPoint:
    """Fenchel-Nielsen length/twist pair for the curve defining the cusp."""

    ell: float
    tau: float

    def __post_init__(self):
        if not self.ell > 0:
            raise ValueError("ell must be positive; use CUSP for the completion point")

    def to_json(self) -> dict:
        return {"ell": self.ell, "tau": self.tau}


@dataclass(frozen=True)
class CuspPoint:
    """Completion marker for the locus ell = 0, where the twist is undefined."""

    def to_json(self) -> dict:
        return {"cusp": True}


CUSP = CuspPoint()


def dehn_twist_fn(p: FNPoint, n: int) -> FNPoint:
    """``(ell, tau) -> (ell, tau + n*ell)``; exact when ``p`` holds Fractions."""
    if not isinstance(n, Integral):
        raise TypeError("twist exponent must be an integer")
    return FNPoint(p.ell, p.tau + n * p.ell)


# ---------------------------------------------------------------------------
# Moebius maps


def _mob(m, z):
    a, b, c, d = m
    return (a * z + b) / (c * z + d)


def _mob_rot(m, z):
    """Rotation angle of the derivative of ``m`` (det > 0) at ``z``."""
    a, b, c, d = m
    return -2.0 * np.angle(c * z + d)


def _mob_inv(m):
    a, b, c, d = m
    return (d, -b, -c, a)


@dataclass(frozen=True, eq=False)
class MappingClassElement:
    """Element of PSL(2, Z) acting by Moebius maps; ``g`` and ``-g`` are equal."""

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        for v in (self.a, self.b, self.c, self.d):
            if not isinstance(v, Integral):
                raise TypeError("matrix entries must be integers")
        if self.a * self.d - self.b * self.c != 1:
            raise ValueError(f"determinant is not 1: {(self.a, self.b, self.c, self.d)}")

    @classmethod
    def identity(cls):
        return cls(1, 0, 0, 1)

    @classmethod
    def translation(cls, n: int = 1):
        return cls(1, n, 0, 1)

    @classmethod
    def inversion(cls):
        return cls(0, -1, 1, 0)

    def _key(self):
        t = (self.a, self.b, self.c, self.d)
        if self.c < 0 or (self.c == 0 and self.d < 0):
            t = tuple(-v for v in t)
        return t

    def __eq__(self, other):
        if not isinstance(other, MappingClassElement):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __matmul__(self, other: "MappingClassElement") -> "MappingClassElement":
        a, b, c, d = self.a, self.b, self.c, self.d
        e, f, g, h = other.a, other.b, other.c, other.d
        return MappingClassElement(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)

    def __pow__(self, n: int) -> "MappingClassElement":
        base = self if n >= 0 else self.inverse()
        out = MappingClassElement.identity()
        for _ in range(abs(n)):
            out = out @ base
        return out

    def inverse(self) -> "MappingClassElement":
        return MappingClassElement(self.d, -self.b, -self.c, self.a)

    @property
    def trace(self) -> int:
        return abs(self.a + self.d)

    @property
    def entries(self) -> tuple[int, int, int, int]:
        return (self.a, self.b, self.c, self.d)

    def as_float(self):
        return (float(self.a), float(self.b), float(self.c), float(self.d))

    def apply(self, p: HalfPlanePoint) -> HalfPlanePoint:
        return HalfPlanePoint.from_complex(_mob(self.as_float(), p.z))

    def apply_complex(self, z):
        return _mob(self.as_float(), z)

    def apply_tangent(self, t: UnitTangent) -> UnitTangent:
        m = self.as_float()
        return UnitTangent(HalfPlanePoint.from_complex(_mob(m, t.base.z)), t.dir + float(_mob_rot(m, t.base.z)))

    def apply_boundary(self, q: BoundaryPoint) -> BoundaryPoint:
        a, b, c, d = self.entries
        if q.is_infinite:
            if c == 0:
                return BoundaryPoint(math.inf, q.rational)
            return BoundaryPoint(Fraction(a, c) if q.rational else a / c, q.rational)
        v = q.value
        den = c * v + d
        if den == 0:
            return BoundaryPoint(math.inf, q.rational)
        if q.rational:
            return BoundaryPoint(Fraction(a * v + b) / den, True)
        return BoundaryPoint((a * v + b) / den, False)

    def to_json(self) -> dict:
        return {"a": self.a, "b": self.b, "c": self.c, "d": self.d}

    @classmethod
    def from_json(cls, d: dict) -> "MappingClassElement":
        return cls(int(d["a"]), int(d["b"]), int(d["c"]), int(d["d"]))


# ---------------------------------------------------------------------------
# Distances, directions, flow


def dist(p: HalfPlanePoint, q: HalfPlanePoint) -> float:
    """Hyperbolic distance, via the cancellation-free form 2 asinh(|z-w| / 2 sqrt(y y'))."""
    return 2.0 * math.asinh(abs(p.z - q.z) / (2.0 * math.sqrt(p.y * q.y)))


def dist_many(z, w):
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    return 2.0 * np.arcsinh(np.abs(z - w) / (2.0 * np.sqrt(z.imag * w.imag)))


def direction_to(z, w):
    """Direction (from vertical) at ``z`` of the geodesic heading to ``w``.

    Works on scalars or arrays.  In the frame where ``z = i`` the initial
    velocity is proportional to ``(2u, |w|^2 - 1)``.
    """
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    u = (w.real - z.real) / z.imag
    v = w.imag / z.imag
    return np.arctan2(-2.0 * u, u * u + v * v - 1.0)


def _rotation_params(theta):
    return np.cos(theta / 2.0), np.sin(theta / 2.0)


def _exp_points(x0, y0, theta, s):
    """Points and directions at arclength ``s`` along the geodesic from (x0+iy0, theta)."""
    s = np.asarray(s, dtype=float)
    c, sn = _rotation_params(theta)
    w = 1j * np.exp(s)
    den = -sn * w + c
    z = x0 + y0 * (c * w + sn) / den
    dirs = -2.0 * np.angle(den)
    return z, wrap_angle(dirs)


def flow(t: UnitTangent, s: float) -> UnitTangent:
    """Exact geodesic flow for time ``s``."""
    z, d = _exp_points(t.base.x, t.base.y, t.dir, s)
    return UnitTangent(HalfPlanePoint.from_complex(complex(z)), float(d))


def angle_between(u: UnitTangent, v: UnitTangent) -> float:
    if abs(u.base.z - v.base.z) > TOL_GEOM * max(1.0, u.base.y):
        raise BaseMismatch(f"tangents based at {u.base} and {v.base}")
    return abs(_wrap(u.dir - v.dir))


# ---------------------------------------------------------------------------
# Geodesics


@dataclass(frozen=True)
class Geodesic:
    """Complete oriented geodesic from ``start`` to ``end`` on the boundary."""

    start: BoundaryPoint
    end: BoundaryPoint

    def __post_init__(self):
        if self.start == self.end or (self.start.is_infinite and self.end.is_infinite):
            raise DegenerateChord("geodesic endpoints coincide")
        if not self.start.is_infinite and not self.end.is_infinite and float(self.start) == float(self.end):
            raise DegenerateChord("geodesic endpoints coincide")

    @classmethod
    def through(cls, a, b) -> "Geodesic":
        wrap = lambda v: v if isinstance(v, BoundaryPoint) else BoundaryPoint(v)
        return cls(wrap(a), wrap(b))

    @property
    def is_singular(self) -> bool:
        """Both endpoints are cusps (exact rationals or infinity)."""
        return self.start.rational and self.end.rational

    @property
    def kind(self) -> str:
        return "vertical-line" if (self.start.is_infinite or self.end.is_infinite) else "semicircle"

    def axis_map(self):
        """Real Moebius (det > 0) taking start -> 0 and end -> infinity."""
        if self.end.is_infinite:
            a = float(self.start)
            return (1.0, -a, 0.0, 1.0)
        if self.start.is_infinite:
            b = float(self.end)
            return (0.0, -1.0, 1.0, -b)
        a, b = float(self.start), float(self.end)
        if b > a:
            return (1.0, -a, -1.0, b)
        return (1.0, -a, 1.0, -b)

    def point_at(self, t: float) -> HalfPlanePoint:
        """Point with axis parameter ``t`` (signed arclength from the top of the axis frame)."""
        m = _mob_inv(self.axis_map())
        return HalfPlanePoint.from_complex(complex(_mob(m, 1j * math.exp(t))))

    def tangent_at(self, t: float) -> UnitTangent:
        m = _mob_inv(self.axis_map())
        w = 1j * math.exp(t)
        return UnitTangent(HalfPlanePoint.from_complex(complex(_mob(m, w))), float(_mob_rot(m, w)))

    def to_json(self) -> dict:
        return {"start": self.start.to_json(), "end": self.end.to_json(), "singular": self.is_singular}


@dataclass(frozen=True)
class GeodesicSegment:
    """Unit-speed geodesic arc ``start -> end``.

    ``initial_dir`` fixes the parameterization; ``center``/``radius`` are
    reported for semicircles and ``None`` for vertical segments.
    """

    kind: str
    start: HalfPlanePoint
    end: HalfPlanePoint
    length: float
    initial_dir: float
    center: float | None = None
    radius: float | None = None
    backend: str = field(default="hyperbolic")

    @classmethod
    def from_tangent(cls, t: UnitTangent, length: float) -> "GeodesicSegment":
        z, _ = _exp_points(t.base.x, t.base.y, t.dir, length)
        return _segment(t.base, HalfPlanePoint.from_complex(complex(z)), t.dir, length)

    # uniform leg interface -------------------------------------------------
    def points(self, s) -> np.ndarray:
        z, _ = _exp_points(self.start.x, self.start.y, self.initial_dir, s)
        return z

    def dirs(self, s) -> np.ndarray:
        _, d = _exp_points(self.start.x, self.start.y, self.initial_dir, s)
        return d

    def point(self, s: float) -> HalfPlanePoint:
        if s == self.length:
            return self.end
        return HalfPlanePoint.from_complex(complex(self.points(s)))

    def tangent(self, s: float) -> UnitTangent:
        return UnitTangent(self.point(s), float(self.dirs(s)))

    @property
    def start_tangent(self) -> UnitTangent:
        return UnitTangent(self.start, self.initial_dir)

    @property
    def end_tangent(self) -> UnitTangent:
        return UnitTangent(self.end, float(self.dirs(self.length)))

    def velocity(self, s: float) -> np.ndarray:
        return self.tangent(s).velocity()

    def reversed(self) -> "GeodesicSegment":
        return _segment(self.end, self.start, self.end_tangent.dir + math.pi, self.length)

    def subsegment(self, s0: float, s1: float) -> "GeodesicSegment":
        if not 0.0 <= s0 < s1 <= self.length + TOL_GEOM:
            raise ValueError("invalid subsegment bounds")
        t0 = self.tangent(s0)
        return _segment(t0.base, self.point(min(s1, self.length)), t0.dir, s1 - s0)

    def transformed(self, g) -> "GeodesicSegment":
        """Image under a MappingClassElement (or a real det>0 matrix tuple)."""
        m = g.as_float() if isinstance(g, MappingClassElement) else tuple(float(v) for v in g)
        p = HalfPlanePoint.from_complex(complex(_mob(m, self.start.z)))
        q = HalfPlanePoint.from_complex(complex(_mob(m, self.end.z)))
        d = self.initial_dir + float(_mob_rot(m, self.start.z))
        return _segment(p, q, d, self.length)

    def complete(self) -> Geodesic:
        """Maximal extension of the segment, endpoints as (inexact) boundary points."""
        if self.kind == "vertical-line":
            x = BoundaryPoint(self.start.x)
            inf = BoundaryPoint(math.inf)
            return Geodesic(x, inf) if self.end.y > self.start.y else Geodesic(inf, x)
        lo, hi = self.center - self.radius, self.center + self.radius
        moving_right = math.sin(self.initial_dir) < 0.0
        return Geodesic(BoundaryPoint(lo), BoundaryPoint(hi)) if moving_right else Geodesic(BoundaryPoint(hi), BoundaryPoint(lo))

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "start": self.start.to_json(),
            "end": self.end.to_json(),
            "length": self.length,
            "initial_dir": self.initial_dir,
            "center": self.center,
            "radius": self.radius,
        }


def _segment(p: HalfPlanePoint, q: HalfPlanePoint, theta: float, length: float) -> GeodesicSegment:
    u = (q.x - p.x) / p.y
    if q.x == p.x or u == 0.0:
        return GeodesicSegment("vertical-line", p, q, length, _wrap(theta))
    v = q.y / p.y
    num = u * u + v * v - 1.0
    # a circle of relative radius beyond 1e12 is a vertical line at double precision
    if abs(num) > 2e12 * abs(u):
        return GeodesicSegment("vertical-line", p, q, length, _wrap(theta))
    c0 = num / (2.0 * u)
    center = p.x + p.y * c0
    radius = p.y * math.hypot(c0, 1.0)
    return GeodesicSegment("semicircle", p, q, length, _wrap(theta), center, radius)


def geodesic_between(p: HalfPlanePoint, q: HalfPlanePoint) -> GeodesicSegment:
    if p == q:
        raise DegenerateChord(f"chord endpoints coincide at {p}")
    theta = float(direction_to(p.z, q.z))
    return _segment(p, q, theta, dist(p, q))


# ---------------------------------------------------------------------------
# Nearest point projection


def _project_axis(geo: Geodesic, z, t_range=None):
    """Vectorized projection onto ``geo`` (optionally clamped to a parameter range).

    Returns (distance, foot, foot_param, away_dir_at_z).  ``away_dir_at_z`` is
    the direction at ``z`` of the fiber pointing away from the geodesic.
    """
    z = np.asarray(z, dtype=complex)
    m = geo.axis_map()
    w = _mob(m, z)
    r = np.abs(w)
    t = np.log(r)
    rot = _mob_rot(m, z)
    # interior fibers: circles |w| = r, away direction along -i w/r (Re w > 0) or +i w/r
    sgn = np.where(w.real >= 0.0, -1.0, 1.0)
    vec = sgn * 1j * w / r
    away = np.arctan2(-vec.real, vec.imag) - rot
    d = np.arcsinh(np.abs(w.real) / w.imag)
    minv = _mob_inv(m)
    if t_range is None:
        foot = _mob(minv, 1j * r)
        return d, foot, t, wrap_angle(away)
    t0, t1 = t_range
    tc = np.clip(t, min(t0, t1), max(t0, t1))
    foot = np.asarray(_mob(minv, 1j * np.exp(tc)))
    clamped = np.asarray(tc != t)
    if np.any(clamped):
        d = np.array(d, dtype=float, ndmin=1)
        away = np.array(away, dtype=float, ndmin=1)
        zz = np.array(z, ndmin=1)[clamped.ravel()]
        fz = np.array(foot, ndmin=1)[clamped.ravel()]
        d[clamped.ravel()] = dist_many(zz, fz)
        away[clamped.ravel()] = direction_to(zz, fz) + np.pi
        if z.ndim == 0:
            d, away = d[0], away[0]
    return d, foot, tc, wrap_angle(away)


def segment_axis_range(seg: GeodesicSegment):
    geo = seg.complete()
    m = geo.axis_map()
    t0 = math.log(abs(_mob(m, seg.start.z)))
    t1 = math.log(abs(_mob(m, seg.end.z)))
    return geo, (t0, t1)


def project_to_geodesic(p: HalfPlanePoint, g) -> tuple[HalfPlanePoint, UnitTangent]:
    """Nearest point projection onto a complete geodesic or a closed segment.

    Returns the foot and the unit tangent at the foot pointing along the
    fiber toward ``p``.  For a segment whose nearest point is an endpoint the
    fiber is the region behind the orthogonal geodesic there; the returned
    tangent then points from the endpoint to ``p``.
    """
    if isinstance(g, GeodesicSegment):
        geo, rng = segment_axis_range(g)
    else:
        geo, rng = g, None
    d, foot, t, _ = _project_axis(geo, p.z, rng)
    foot_pt = HalfPlanePoint.from_complex(complex(foot))
    if d <= TOL_GEOM * 1e-3:
        along = geo.tangent_at(float(t))
        return foot_pt, UnitTangent(foot_pt, along.dir - math.pi / 2.0)
    return foot_pt, UnitTangent(foot_pt, float(direction_to(foot_pt.z, p.z)))


# ---------------------------------------------------------------------------
# Triangles


def triangle_opposite_side(alpha: float, beta: float, gamma: float, kappa: float = -1.0) -> float:
    """Side opposite ``gamma`` from the hyperbolic law of cosines for angles."""
    if kappa >= 0:
        raise ValueError("curvature must be negative")
    if not (0.0 < alpha < math.pi and 0.0 < beta < math.pi) or not (0.0 <= gamma < math.pi):
        raise InvalidTriangle(f"angles out of range: {(alpha, beta, gamma)}")
    rhs = (math.cos(alpha) * math.cos(beta) + math.cos(gamma)) / (math.sin(alpha) * math.sin(beta))
    if rhs < 1.0 - 1e-12:
        raise InvalidTriangle(f"cosh c = {rhs} < 1: angle data is not hyperbolic")
    return math.acosh(max(rhs, 1.0)) / math.sqrt(-kappa)


# ---------------------------------------------------------------------------
# Fundamental domain


def reduce_to_fundamental_domain(p: HalfPlanePoint, tol: float = TOL_GEOM) -> tuple[HalfPlanePoint, MappingClassElement]:
    """Map ``p`` into {|Re z| <= 1/2, |z| >= 1}; returns (p0, g) with p0 = g p.

    Boundary ties go to the Re <= 0 side.
    """
    z = p.z
    a, b, c, d = 1, 0, 0, 1
    for _ in range(MAX_REDUCTION_STEPS):
        n = math.floor(z.real + 0.5)
        if z.real - n >= 0.5 - tol:
            n += 1
        if n:
            z = z - n
            a, b = a - n * c, b - n * d
        r2 = z.real * z.real + z.imag * z.imag
        if r2 < 1.0 - tol:
            z = -1.0 / z
            a, b, c, d = -c, -d, a, b
            continue
        if r2 <= 1.0 + tol and z.real > tol:
            z = -1.0 / z
            a, b, c, d = -c, -d, a, b
        break
    else:
        raise NonTermination(f"reduction of {p} did not terminate")
    return HalfPlanePoint.from_complex(z), MappingClassElement(a, b, c, d)


def reduce_tangent(t: UnitTangent) -> tuple[UnitTangent, MappingClassElement]:
    p0, g = reduce_to_fundamental_domain(t.base)
    m = g.as_float()
    return UnitTangent(p0, t.dir + float(_mob_rot(m, t.base.z))), g
