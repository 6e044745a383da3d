"""Riemannian surface backends, geodesic integration and the chord solver.

Two backends share one integrator:

* ``hyperbolic``: the upper half-plane, chart (x, y), metric (dx^2 + dy^2)/y^2.
* ``wp_cusp_model``: a neighbourhood of a Teichmueller cusp in Fenchel-Nielsen
  chart (ell, tau).  The default ``profile="r6"`` is the surface of revolution
  dr^2 + (r^3/8pi^3)^2 dtheta^2 written through r = sqrt(2 pi ell) and the twist
  angle theta = 2 pi tau / ell.  Its area form is exactly (1/2) dell ^ dtau, the
  radial block is (pi / 2 ell) dell^2, the Dehn twist (ell, tau) -> (ell, tau + ell)
  is an isometry and the curvature is -3/(pi ell).  ``profile="r2"`` keeps the
  diagonal metric (pi/2ell) dell^2 + (ell/2pi) dtau^2, which is the r6 metric on
  the slice tau = 0 but is flat.

The integrator is a Dormand-Prince 5(4) pair compiled with numba; chords are
solved by shooting with damped Newton steps on (initial angle, length), seeded
by straight chart lines, caller guesses, or a midpoint-subdivision polyline.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import CuspObstruction, DegenerateChord, NoConvergence, OutsideChart, StepUnderflow
from .hyp_geometry import HalfPlanePoint, UnitTangent

RTOL = 1e-10
ATOL = 1e-12
STEP_FLOOR = 1e-12
TOL_BVP = 1e-8
DEFAULT_ELL_MAX = 4.0
DEFAULT_ELL_MIN = 1e-8

HYPERBOLIC, WP_R6, WP_R2 = 0, 1, 2

STATUS_DONE, STATUS_CUSP, STATUS_UNDERFLOW, STATUS_MAXSTEPS, STATUS_EXIT = 0, 1, 2, 3, 4

_PI = math.pi
_PI2 = math.pi * math.pi


# ---------------------------------------------------------------------------
# compiled kernels


@numba.njit(cache=True)
def _metric3(kind, a, b):
    if kind == HYPERBOLIC:
        w = 1.0 / (b * b)
        return w, 0.0, w
    if kind == WP_R6:
        return _PI / (2.0 * a) + b * b / (2.0 * _PI * a), -b / (2.0 * _PI), a / (2.0 * _PI)
    return _PI / (2.0 * a), 0.0, a / (2.0 * _PI)


@numba.njit(cache=True)
def _accel(kind, a, b, va, vb):
    if kind == HYPERBOLIC:
        return 2.0 * va * vb / b, (vb * vb - va * va) / b
    if kind == WP_R6:
        t2 = b * b
        g000 = -(3.0 * t2 + _PI2) / (2.0 * _PI2 * a)
        g001 = 3.0 * b / (2.0 * _PI2)
        g011 = -3.0 * a / (2.0 * _PI2)
        g100 = -3.0 * b * (t2 + _PI2) / (2.0 * _PI2 * a * a)
        g101 = (3.0 * t2 + _PI2) / (2.0 * _PI2 * a)
        g111 = -3.0 * b / (2.0 * _PI2)
    else:
        g000 = -1.0 / (2.0 * a)
        g001 = 0.0
        g011 = -a / (2.0 * _PI2)
        g100 = 0.0
        g101 = 1.0 / (2.0 * a)
        g111 = 0.0
    aa = -(g000 * va * va + 2.0 * g001 * va * vb + g011 * vb * vb)
    ab = -(g100 * va * va + 2.0 * g101 * va * vb + g111 * vb * vb)
    return aa, ab


@numba.njit(cache=True)
def _rhs(kind, y, out):
    out[0] = y[2]
    out[1] = y[3]
    aa, ab = _accel(kind, y[0], y[1], y[2], y[3])
    out[2] = aa
    out[3] = ab
    return np.isfinite(aa) and np.isfinite(ab)


@numba.njit(cache=True)
def _valid(kind, y):
    if kind == HYPERBOLIC:
        return y[1] > 0.0
    return y[0] > 0.0


# Dormand-Prince 5(4)
_C2, _C3, _C4, _C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = 9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)


@numba.njit(cache=True)
def _rk_step(kind, y, h, k1, ynew, err):
    """One DP5(4) step from y with slope k1.  Returns False on invalid stage."""
    k2 = np.empty(4)
    k3 = np.empty(4)
    k4 = np.empty(4)
    k5 = np.empty(4)
    k6 = np.empty(4)
    k7 = np.empty(4)
    tmp = np.empty(4)
    for i in range(4):
        tmp[i] = y[i] + h * _A21 * k1[i]
    if not _valid(kind, tmp) or not _rhs(kind, tmp, k2):
        return False
    for i in range(4):
        tmp[i] = y[i] + h * (_A31 * k1[i] + _A32 * k2[i])
    if not _valid(kind, tmp) or not _rhs(kind, tmp, k3):
        return False
    for i in range(4):
        tmp[i] = y[i] + h * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
    if not _valid(kind, tmp) or not _rhs(kind, tmp, k4):
        return False
    for i in range(4):
        tmp[i] = y[i] + h * (_A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i])
    if not _valid(kind, tmp) or not _rhs(kind, tmp, k5):
        return False
    for i in range(4):
        tmp[i] = y[i] + h * (_A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i] + _A64 * k4[i] + _A65 * k5[i])
    if not _valid(kind, tmp) or not _rhs(kind, tmp, k6):
        return False
    for i in range(4):
        ynew[i] = y[i] + h * (_B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i] + _B5 * k5[i] + _B6 * k6[i])
    if not _valid(kind, ynew) or not _rhs(kind, ynew, k7):
        return False
    for i in range(4):
        err[i] = h * (_E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i] + _E5 * k5[i] + _E6 * k6[i] + _E7 * k7[i])
    return True


@numba.njit(cache=True)
def _renormalize(kind, y):
    g00, g01, g11 = _metric3(kind, y[0], y[1])
    n2 = g00 * y[2] * y[2] + 2.0 * g01 * y[2] * y[3] + g11 * y[3] * y[3]
    if n2 > 0.0:
        s = 1.0 / math.sqrt(n2)
        y[2] *= s
        y[3] *= s


@numba.njit(cache=True)
def _hermite_min(a0, a1, d0, d1, h):
    """Minimum of the cubic Hermite interpolant on [0, h] and its location."""
    best = min(a0, a1)
    tb = 0.0 if a0 <= a1 else h
    # p(t) = a0 + d0 t + c2 t^2 + c3 t^3
    c2 = (3.0 * (a1 - a0) / h - 2.0 * d0 - d1) / h
    c3 = (d0 + d1 - 2.0 * (a1 - a0) / h) / (h * h)
    # roots of p'(t) = d0 + 2 c2 t + 3 c3 t^2
    A = 3.0 * c3
    B = 2.0 * c2
    C = d0
    roots = np.empty(2)
    nr = 0
    if abs(A) < 1e-300:
        if abs(B) > 1e-300:
            roots[0] = -C / B
            nr = 1
    else:
        disc = B * B - 4.0 * A * C
        if disc >= 0.0:
            sq = math.sqrt(disc)
            roots[0] = (-B - sq) / (2.0 * A)
            roots[1] = (-B + sq) / (2.0 * A)
            nr = 2
    for i in range(nr):
        t = roots[i]
        if 0.0 < t < h:
            v = a0 + d0 * t + c2 * t * t + c3 * t * t * t
            if v < best:
                best = v
                tb = t
    return best, tb


@numba.njit(cache=True)
def _integrate(kind, y0, s_max, rtol, atol, h_min, ell_min, ell_max, max_steps, record):
    """Adaptive DP5(4) integration of the geodesic system.

    Returns (status, s_final, y_final, S, Y, A, n) where S/Y/A hold the
    accepted samples (arclength, state, acceleration) when ``record``.
    """
    cap = max_steps + 2 if record else 2
    S = np.empty(cap)
    Y = np.empty((cap, 4))
    A = np.empty((cap, 2))
    y = y0.copy()
    _renormalize(kind, y)
    k1 = np.empty(4)
    ynew = np.empty(4)
    err = np.empty(4)
    _rhs(kind, y, k1)
    s = 0.0
    n = 0
    if record:
        S[0] = 0.0
        Y[0] = y
        A[0, 0] = k1[2]
        A[0, 1] = k1[3]
    n = 1
    status = STATUS_DONE
    h = min(0.05, s_max)
    steps = 0
    watch_cusp = kind != HYPERBOLIC
    while s < s_max:
        if steps >= max_steps:
            status = STATUS_MAXSTEPS
            break
        h = min(h, s_max - s)
        if h < h_min:
            if s_max - s <= h_min:
                break
            status = STATUS_UNDERFLOW
            break
        ok = _rk_step(kind, y, h, k1, ynew, err)
        if ok:
            en = 0.0
            # hyperbolic states scale with y; use a relative floor there
            floor = atol * min(y[1], ynew[1]) if kind == HYPERBOLIC else atol
            for i in range(4):
                sc = floor + rtol * max(abs(y[i]), abs(ynew[i]))
                e = err[i] / sc
                en += e * e
            en = math.sqrt(en / 4.0)
        else:
            en = 1e300
        if not np.isfinite(en) or en > 1.0:
            fac = 0.2 if not np.isfinite(en) or en >= 1e200 else max(0.2, 0.9 * en ** (-0.2))
            h *= fac
            continue
        # accepted step: check cusp crossing inside the step
        if watch_cusp:
            lo, t_lo = _hermite_min(y[0], ynew[0], y[2], ynew[2], h)
            if lo < ell_min:
                # bisect on the step length for the crossing ell = ell_min
                a_h = 0.0
                b_h = t_lo if t_lo > 0.0 else h
                ytry = np.empty(4)
                etry = np.empty(4)
                for _ in range(200):
                    mid = 0.5 * (a_h + b_h)
                    if mid <= a_h or mid >= b_h:
                        break
                    good = _rk_step(kind, y, mid, k1, ytry, etry)
                    if good and ytry[0] > ell_min:
                        a_h = mid
                    else:
                        b_h = mid
                if a_h > 0.0:
                    _rk_step(kind, y, a_h, k1, ytry, etry)
                    for i in range(4):
                        y[i] = ytry[i]
                    s += a_h
                    _rhs(kind, y, k1)
                    if record:
                        S[n] = s
                        Y[n] = y
                        A[n, 0] = k1[2]
                        A[n, 1] = k1[3]
                    n += 1
                status = STATUS_CUSP
                break
            if ynew[0] > ell_max:
                status = STATUS_EXIT
        for i in range(4):
            y[i] = ynew[i]
        _renormalize(kind, y)
        s += h
        steps += 1
        _rhs(kind, y, k1)
        if record:
            S[n] = s
            Y[n] = y
            A[n, 0] = k1[2]
            A[n, 1] = k1[3]
        n += 1
        if status == STATUS_EXIT:
            break
        fac = 5.0 if en < 1e-10 else min(5.0, 0.9 * en ** (-0.2))
        h *= fac
    return status, s, y, S, Y, A, n


# ---------------------------------------------------------------------------
# backends


@dataclass(frozen=True)
class MetricBackend:
    """A chart with a closed-form metric and Christoffel symbols."""

    id: str
    kind: int
    params: tuple = ()

    @property
    def chart(self) -> tuple[str, str]:
        return ("x", "y") if self.kind == HYPERBOLIC else ("ell", "tau")

    def param(self, name, default=None):
        return dict(self.params).get(name, default)

    @property
    def ell_max(self) -> float:
        return float(self.param("ell_max", DEFAULT_ELL_MAX))

    # chart membership ------------------------------------------------------
    def in_chart(self, p) -> bool:
        a, b = float(p[0]), float(p[1])
        if not (math.isfinite(a) and math.isfinite(b)):
            return False
        if self.kind == HYPERBOLIC:
            return b > 0.0
        return 0.0 < a <= self.ell_max

    def _check(self, p):
        if not self.in_chart(p):
            raise OutsideChart(f"{tuple(p)} is outside the {self.id} chart")

    # tensors ---------------------------------------------------------------
    def metric_at(self, p) -> np.ndarray:
        self._check(p)
        g00, g01, g11 = self.metric_components(np.asarray(p, dtype=float))
        return np.array([[g00, g01], [g01, g11]])

    def metric_components(self, P):
        """Vectorized (g00, g01, g11) for points P[..., 2]; no chart checks."""
        P = np.asarray(P, dtype=float)
        a, b = P[..., 0], P[..., 1]
        if self.kind == HYPERBOLIC:
            w = 1.0 / (b * b)
            return w, np.zeros_like(w), w
        if self.kind == WP_R6:
            return np.pi / (2 * a) + b * b / (2 * np.pi * a), -b / (2 * np.pi), a / (2 * np.pi)
        return np.pi / (2 * a), np.zeros_like(a), a / (2 * np.pi)

    def christoffel_at(self, p) -> np.ndarray:
        """Gamma[k, i, j] in chart coordinates."""
        self._check(p)
        return self.christoffel_many(np.asarray(p, dtype=float))

    def christoffel_many(self, P) -> np.ndarray:
        P = np.asarray(P, dtype=float)
        a, b = P[..., 0], P[..., 1]
        G = np.zeros(P.shape[:-1] + (2, 2, 2))
        if self.kind == HYPERBOLIC:
            G[..., 0, 0, 1] = G[..., 0, 1, 0] = -1.0 / b
            G[..., 1, 0, 0] = 1.0 / b
            G[..., 1, 1, 1] = -1.0 / b
        elif self.kind == WP_R6:
            t2 = b * b
            G[..., 0, 0, 0] = -(3 * t2 + _PI2) / (2 * _PI2 * a)
            G[..., 0, 0, 1] = G[..., 0, 1, 0] = 3 * b / (2 * _PI2)
            G[..., 0, 1, 1] = -3 * a / (2 * _PI2)
            G[..., 1, 0, 0] = -3 * b * (t2 + _PI2) / (2 * _PI2 * a * a)
            G[..., 1, 0, 1] = G[..., 1, 1, 0] = (3 * t2 + _PI2) / (2 * _PI2 * a)
            G[..., 1, 1, 1] = -3 * b / (2 * _PI2)
        else:
            G[..., 0, 0, 0] = -1.0 / (2 * a)
            G[..., 0, 1, 1] = -a / (2 * _PI2)
            G[..., 1, 0, 1] = G[..., 1, 1, 0] = 1.0 / (2 * a)
        return G

    def curvature_at(self, p) -> float:
        self._check(p)
        if self.kind == HYPERBOLIC:
            return -1.0
        if self.kind == WP_R6:
            return -3.0 / (math.pi * float(p[0]))
        return 0.0

    # vectors ---------------------------------------------------------------
    def inner(self, p, u, v) -> float:
        g00, g01, g11 = self.metric_components(np.asarray(p, dtype=float))
        return float(g00 * u[0] * v[0] + g01 * (u[0] * v[1] + u[1] * v[0]) + g11 * u[1] * v[1])

    def norm(self, p, v) -> float:
        return math.sqrt(max(self.inner(p, v, v), 0.0))

    def unit(self, p, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        n = self.norm(p, v)
        if n == 0.0:
            raise ValueError("zero tangent vector")
        return v / n

    def angle(self, p, u, v) -> float:
        """Metric angle in [0, pi] between chart vectors at p."""
        c = self.inner(p, u, v) / (self.norm(p, u) * self.norm(p, v))
        return math.acos(min(1.0, max(-1.0, c)))

    def cusp_direction(self, p) -> np.ndarray:
        """Unit special tangent at p, pointing along the geodesic to the cusp."""
        a, b = float(p[0]), float(p[1])
        if self.kind == HYPERBOLIC:
            return np.array([0.0, b])
        v = np.array([-a, -b]) if self.kind == WP_R6 else np.array([-1.0, 0.0])
        return self.unit(p, v)

    def distance_to_cusp(self, p) -> float:
        """Length of the radial geodesic from p to the cusp (infinite for hyperbolic)."""
        if self.kind == HYPERBOLIC:
            return math.inf
        return math.sqrt(2.0 * math.pi * float(p[0]))

    def twist(self, n: int) -> np.ndarray:
        """Linear chart action of the n-th power of the parabolic / Dehn twist."""
        if self.kind == HYPERBOLIC:
            return np.array([[1.0, 0.0], [0.0, 1.0]]), np.array([float(n), 0.0])
        return np.array([[1.0, 0.0], [float(n), 1.0]]), np.zeros(2)

    def apply_twist(self, n: int, p) -> np.ndarray:
        L, t = self.twist(n)
        return L @ np.asarray(p, dtype=float) + t

    def to_json(self) -> dict:
        return {"id": self.id, "params": dict(self.params)}


def hyperbolic_backend() -> MetricBackend:
    return MetricBackend("hyperbolic", HYPERBOLIC, ())


def wp_cusp_model(profile: str = "r6", ell_max: float = DEFAULT_ELL_MAX) -> MetricBackend:
    if profile not in ("r6", "r2"):
        raise ValueError(f"unknown cusp profile {profile!r}")
    kind = WP_R6 if profile == "r6" else WP_R2
    return MetricBackend("wp_cusp_model", kind, (("ell_max", float(ell_max)), ("profile", profile)))


def get_backend(name: str, **params) -> MetricBackend:
    if name == "hyperbolic":
        return hyperbolic_backend()
    if name == "wp_cusp_model":
        return wp_cusp_model(**params)
    raise ValueError(f"unknown backend {name!r}")


# ---------------------------------------------------------------------------
# geodesic paths


@dataclass(frozen=True, eq=False)
class GeodesicPath:
    """Sampled unit-speed geodesic; tangents are chart components."""

    backend_id: str
    s: np.ndarray
    points: np.ndarray
    tangents: np.ndarray
    accels: np.ndarray
    total_length: float
    terminated_at_cusp: bool = False
    exited_chart: bool = False

    @property
    def start(self) -> np.ndarray:
        return self.points[0]

    @property
    def end(self) -> np.ndarray:
        return self.points[-1]

    @property
    def start_velocity(self) -> np.ndarray:
        return self.tangents[0]

    @property
    def end_velocity(self) -> np.ndarray:
        return self.tangents[-1]

    @property
    def length(self) -> float:
        return self.total_length

    def _locate(self, s):
        s = np.clip(np.asarray(s, dtype=float), self.s[0], self.s[-1])
        i = np.clip(np.searchsorted(self.s, s, side="right") - 1, 0, len(self.s) - 2)
        h = self.s[i + 1] - self.s[i]
        t = np.where(h > 0, (s - self.s[i]) / np.where(h > 0, h, 1.0), 0.0)
        return i, h, t

    def point_at(self, s) -> np.ndarray:
        """Cubic Hermite interpolation of the chart position."""
        if len(self.s) == 1:
            return np.broadcast_to(self.points[0], np.shape(s) + (2,)).copy()
        i, h, t = self._locate(s)
        h = h[..., None]
        t = t[..., None]
        p0, p1 = self.points[i], self.points[i + 1]
        m0, m1 = self.tangents[i] * h, self.tangents[i + 1] * h
        t2, t3 = t * t, t * t * t
        return (2 * t3 - 3 * t2 + 1) * p0 + (t3 - 2 * t2 + t) * m0 + (-2 * t3 + 3 * t2) * p1 + (t3 - t2) * m1

    def velocity_at(self, s) -> np.ndarray:
        """Cubic Hermite interpolation of the chart velocity (from accelerations)."""
        if len(self.s) == 1:
            return np.broadcast_to(self.tangents[0], np.shape(s) + (2,)).copy()
        i, h, t = self._locate(s)
        h = h[..., None]
        t = t[..., None]
        p0, p1 = self.tangents[i], self.tangents[i + 1]
        m0, m1 = self.accels[i] * h, self.accels[i + 1] * h
        t2, t3 = t * t, t * t * t
        return (2 * t3 - 3 * t2 + 1) * p0 + (t3 - 2 * t2 + t) * m0 + (-2 * t3 + 3 * t2) * p1 + (t3 - t2) * m1

    # uniform leg interface, shared with GeodesicSegment
    def points_xy(self, s) -> np.ndarray:
        return self.point_at(s)

    def truncate(self, s0: float, s1: float) -> "GeodesicPath":
        """Sub-path on [s0, s1], re-parameterized from zero."""
        s0 = max(0.0, float(s0))
        s1 = min(self.total_length, float(s1))
        if not s1 > s0:
            raise ValueError("empty truncation")
        inner = (self.s > s0) & (self.s < s1)
        ss = np.concatenate([[s0], self.s[inner], [s1]])
        pts = np.concatenate([self.point_at(np.array([s0])), self.points[inner], self.point_at(np.array([s1]))])
        tan = np.concatenate([self.velocity_at(np.array([s0])), self.tangents[inner], self.velocity_at(np.array([s1]))])
        acc = _interp_rows(self.s, self.accels, ss)
        return GeodesicPath(self.backend_id, ss - s0, pts, tan, acc, s1 - s0,
                            self.terminated_at_cusp and s1 >= self.total_length, False)

    def reversed(self) -> "GeodesicPath":
        L = self.total_length
        return GeodesicPath(self.backend_id, (L - self.s[::-1]).copy(), self.points[::-1].copy(),
                            -self.tangents[::-1], self.accels[::-1].copy(), L, False, False)

    def transformed(self, linear, shift=(0.0, 0.0)) -> "GeodesicPath":
        """Image under an affine chart isometry p -> L p + shift."""
        L = np.asarray(linear, dtype=float)
        return GeodesicPath(self.backend_id, self.s.copy(), self.points @ L.T + np.asarray(shift),
                            self.tangents @ L.T, self.accels @ L.T, self.total_length,
                            self.terminated_at_cusp, self.exited_chart)

    def speed_residual(self, backend: MetricBackend) -> float:
        g00, g01, g11 = backend.metric_components(self.points)
        v = self.tangents
        n2 = g00 * v[:, 0] ** 2 + 2 * g01 * v[:, 0] * v[:, 1] + g11 * v[:, 1] ** 2
        return float(np.max(np.abs(n2 - 1.0)))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["s", "c1", "c2", "t1", "t2"])
        for s, p, t in zip(self.s, self.points, self.tangents):
            w.writerow([repr(float(s)), repr(float(p[0])), repr(float(p[1])), repr(float(t[0])), repr(float(t[1]))])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "backend": self.backend_id,
            "total_length": self.total_length,
            "terminated_at_cusp": self.terminated_at_cusp,
            "exited_chart": self.exited_chart,
            "samples": [
                {"s": float(s), "point": [float(p[0]), float(p[1])], "tangent": [float(t[0]), float(t[1])]}
                for s, p, t in zip(self.s, self.points, self.tangents)
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def _interp_rows(x, Y, xq):
    return np.stack([np.interp(xq, x, Y[:, k]) for k in range(Y.shape[1])], axis=1)


def _as_chart(p):
    if isinstance(p, HalfPlanePoint):
        return np.array([p.x, p.y])
    return np.asarray(p, dtype=float)


def _as_vector(backend, p, v):
    if isinstance(v, UnitTangent):
        return v.velocity()
    return backend.unit(p, v)


def integrate_geodesic(backend: MetricBackend, start, direction, max_length: float,
                       cusp_stop: float = DEFAULT_ELL_MIN, rtol: float = RTOL,
                       max_steps: int = 1_000_000) -> GeodesicPath:
    """Integrate the unit-speed geodesic from ``start`` with initial ``direction``.

    ``direction`` is a chart vector (rescaled to unit length) or a UnitTangent
    on the hyperbolic backend.  On the cusp model the run stops with
    ``terminated_at_cusp`` once ell drops below ``cusp_stop``.
    """
    p = _as_chart(start)
    backend._check(p)
    v = _as_vector(backend, p, direction)
    y0 = np.array([p[0], p[1], v[0], v[1]])
    status, s_end, _, S, Y, A, n = _integrate(backend.kind, y0, float(max_length), rtol, ATOL, STEP_FLOOR,
                                             float(cusp_stop), backend.ell_max, max_steps, True)
    if status == STATUS_UNDERFLOW:
        raise StepUnderflow(f"step size fell below {STEP_FLOOR} at s = {s_end}")
    if status == STATUS_MAXSTEPS:
        raise StepUnderflow(f"step budget of {max_steps} exhausted at s = {s_end}")
    return GeodesicPath(backend.id, S[:n].copy(), Y[:n, :2].copy(), Y[:n, 2:].copy(), A[:n].copy(), float(S[n - 1]),
                        status == STATUS_CUSP, status == STATUS_EXIT)


def _shoot(backend, p, v, length):
    y0 = np.array([p[0], p[1], v[0], v[1]])
    status, s_end, y, _, _, _, _ = _integrate(backend.kind, y0, float(length), RTOL, ATOL, STEP_FLOOR,
                                              DEFAULT_ELL_MIN, math.inf, 200_000, False)
    return status, s_end, y


# ---------------------------------------------------------------------------
# chords


@dataclass(frozen=True, eq=False)
class ChordResult:
    segment: GeodesicPath
    endpoint_error: float
    iterations: int
    method: str = "shooting"


_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def straight_line_length(backend: MetricBackend, p, q) -> float:
    p, q = _as_chart(p), _as_chart(q)
    d = q - p
    t = 0.5 * (_GL_X + 1.0)
    P = p[None, :] + t[:, None] * d[None, :]
    g00, g01, g11 = backend.metric_components(P)
    f = np.sqrt(g00 * d[0] ** 2 + 2 * g01 * d[0] * d[1] + g11 * d[1] ** 2)
    return float(0.5 * np.sum(_GL_W * f))


def _unit_from_angle(backend, p, psi):
    return backend.unit(p, np.array([math.cos(psi), math.sin(psi)]))


def subdivision_path(backend: MetricBackend, p, q, levels: int = 6, sweeps: int = 60) -> np.ndarray:
    """Discrete geodesic by iterated midpoint straightening, coarse to fine.

    Each sweep replaces every interior vertex by the second-order geodesic
    midpoint of its neighbours, (a + b)/2 + Gamma(d, d)/8 with d = b - a.
    """
    p, q = _as_chart(p), _as_chart(q)
    pts = np.array([p, q])
    floor = 1e-9 if backend.kind != HYPERBOLIC else None
    for _ in range(levels):
        mids = _geodesic_midpoints(backend, pts[:-1], pts[1:], floor)
        new = np.empty((2 * len(pts) - 1, 2))
        new[0::2] = pts
        new[1::2] = mids
        pts = new
        for _ in range(sweeps):
            pts[1:-1] = _geodesic_midpoints(backend, pts[:-2], pts[2:], floor)
    return pts


def _geodesic_midpoints(backend, a, b, floor):
    m = 0.5 * (a + b)
    if backend.kind == HYPERBOLIC:
        m[:, 1] = np.maximum(m[:, 1], 1e-300)
    else:
        m[:, 0] = np.maximum(m[:, 0], floor)
    d = b - a
    G = backend.christoffel_many(m)
    corr = np.einsum("nkij,ni,nj->nk", G, d, d) / 8.0
    out = m + corr
    if backend.kind == HYPERBOLIC:
        out[:, 1] = np.where(out[:, 1] > 0, out[:, 1], m[:, 1])
    else:
        out[:, 0] = np.where(out[:, 0] > floor, out[:, 0], m[:, 0])
    return out


def _polyline_length(backend, pts):
    return sum(straight_line_length(backend, pts[i], pts[i + 1]) for i in range(len(pts) - 1))


def _newton_shoot(backend, p, q, psi, L, tol, max_iter):
    gq = backend.metric_at(q) if backend.in_chart(q) else None

    def residual(psi_, L_):
        if not L_ > 0:
            return None
        v = _unit_from_angle(backend, p, psi_)
        status, s_end, y = _shoot(backend, p, v, L_)
        if status != STATUS_DONE or abs(s_end - L_) > 1e-9 * max(1.0, L_):
            return None
        return y[:2] - q

    def enorm(r):
        return math.sqrt(max(float(r @ gq @ r), 0.0))

    r = residual(psi, L)
    if r is None:
        return None, psi, L, math.inf, 0, True
    err = enorm(r)
    it = 0
    cusp_only = False
    while err > tol and it < max_iter:
        it += 1
        hp = 1e-7
        hl = 1e-7 * max(L, 1e-3)
        rp = residual(psi + hp, L)
        rl = residual(psi, L + hl)
        if rp is None:
            rp = residual(psi - hp, L)
            hp = -hp
        if rl is None:
            rl = residual(psi, L - hl)
            hl = -hl
        if rp is None or rl is None:
            break
        J = np.column_stack([(rp - r) / hp, (rl - r) / hl])
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            break
        lam = 1.0
        improved = False
        for _ in range(40):
            cand = (psi + lam * step[0], L + lam * step[1])
            rc = residual(*cand)
            if rc is not None:
                ec = enorm(rc)
                if ec < err:
                    psi, L = cand
                    r, err = rc, ec
                    improved = True
                    break
            lam *= 0.5
        if not improved:
            break
    return r, psi, L, err, it, cusp_only


def chord_bvp(backend: MetricBackend, p, q, guess: tuple[float, float] | None = None,
              tol: float = TOL_BVP, max_iter: int = 60, cross_check: bool = False) -> ChordResult:
    """Geodesic chord from ``p`` to ``q``.

    ``guess`` is an optional (chart angle, length) pair for the shooting fast
    path.  Failure of shooting falls back to a midpoint-subdivision seed;
    with ``cross_check`` the subdivision seed is always computed and its
    answer wins when the two disagree.  ``endpoint_error`` is the metric norm
    at ``q`` of the chart displacement between the shot endpoint and ``q``.
    """
    p, q = _as_chart(p), _as_chart(q)
    backend._check(p)
    backend._check(q)
    if np.allclose(p, q, rtol=0.0, atol=1e-15):
        raise DegenerateChord("chord endpoints coincide")
    seeds = []
    if guess is not None:
        seeds.append(("guess", float(guess[0]), float(guess[1])))
    d = q - p
    seeds.append(("straight", math.atan2(d[1], d[0]), straight_line_length(backend, p, q)))
    best = None
    total_it = 0
    any_finite = False
    for name, psi0, L0 in seeds:
        r, psi, L, err, it, _ = _newton_shoot(backend, p, q, psi0, L0, tol, max_iter)
        total_it += it
        if r is not None:
            any_finite = True
            if best is None or err < best[3]:
                best = (psi, L, name, err)
            if err <= tol:
                break
    if cross_check or best is None or best[3] > tol:
        pts = subdivision_path(backend, p, q)
        d0 = pts[1] - pts[0]
        psi0, L0 = math.atan2(d0[1], d0[0]), _polyline_length(backend, pts)
        r, psi, L, err, it, _ = _newton_shoot(backend, p, q, psi0, L0, tol, max_iter)
        total_it += it
        if r is not None:
            any_finite = True
            disagree = best is not None and (abs(L - best[1]) > 1e-6 * max(1.0, L))
            if best is None or err <= tol and (disagree or err < best[3]) or err < best[3]:
                best = (psi, L, "subdivision", err)
    if not any_finite:
        raise CuspObstruction("every candidate initial direction ran into the cusp")
    psi, L, name, err = best
    path = integrate_geodesic(backend, p, _unit_from_angle(backend, p, psi), L)
    if err > tol:
        raise NoConvergence(f"chord solver residual {err:.3e} exceeds {tol:.1e}",
                            best=ChordResult(path, err, total_it, name), residual=err)
    return ChordResult(path, err, total_it, "shooting" if name != "subdivision" else "subdivision")


def chord_angle_length(result: ChordResult) -> tuple[float, float]:
    """(chart angle, length) of a solved chord, usable as a continuation guess."""
    v = result.segment.start_velocity
    return math.atan2(v[1], v[0]), result.segment.total_length
