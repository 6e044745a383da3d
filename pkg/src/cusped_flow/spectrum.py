"""Closed geodesics, symbolic dynamics and recurrence on the modular surface.

Primitive hyperbolic conjugacy classes in PSL(2, Z) are enumerated from
periodic continued fractions: a cycle (a_1, ..., a_k) of partial quotients
gives the matrix product of [[a_i, 1], [1, 0]], which has determinant
(-1)^k, so odd cycles are doubled.  Classes are identified by the trace and
the cycle of Gauss-reduced binary quadratic forms attached to the matrix,
which is independent of the word used to produce it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import gcd, isqrt

import numpy as np
from scipy import integrate, optimize, stats

from .errors import DomainError, InsufficientData
from .hyp_geometry import MappingClassElement, _exp_points, wrap_angle
from .metric_engine import HYPERBOLIC, MetricBackend, hyperbolic_backend

SHORTEST_TRACE = 3
WP_AREA_MODULI = math.pi**2 / 12  # recorded only; needs the global metric
FD_AREA = math.pi / 3


def length_from_trace(tr: int) -> float:
    return 2.0 * math.acosh(abs(tr) / 2.0)


def trace_bound(T_max: float) -> int:
    return int(math.floor(2.0 * math.cosh(T_max / 2.0) + 1e-9))


# ---------------------------------------------------------------------------
# words, matrices and forms


def word_matrix(word) -> tuple:
    a, b, c, d = 1, 0, 0, 1
    for q in word:
        a, b, c, d = a * q + b, a, c * q + d, c
    return (a, b, c, d)


def even_word(period) -> tuple:
    """The word of the PSL(2, Z) element: odd cycles are doubled."""
    period = tuple(period)
    return period if len(period) % 2 == 0 else period * 2


def minimal_period(word) -> tuple:
    w = tuple(word)
    n = len(w)
    for p in range(1, n + 1):
        if n % p == 0 and w[:p] * (n // p) == w:
            return w[:p]
    return w


def canonical_rotation(word) -> tuple:
    """Lexicographically least rotation."""
    w = tuple(word)
    return min(w[i:] + w[:i] for i in range(len(w)))


def _even_rotation_key(word) -> tuple:
    w = tuple(word)
    return min(w[i:] + w[:i] for i in range(0, len(w), 2))


def _rho(f, rD):
    """One step of Gauss reduction for an indefinite form (a, b, c); rD = floor(sqrt(D))."""
    a, b, c = f
    D = b * b - 4 * a * c
    ac = abs(c)
    # b' = -b mod 2c, chosen in the reduction window
    if ac > rD:
        lo = -ac + 1
    else:
        lo = rD - 2 * ac + 1
    t = (-b - lo) % (2 * ac)
    bn = lo + t
    cn = (bn * bn - D) // (4 * c)
    return (c, bn, cn)


def _is_reduced(f, D) -> bool:
    a, b, c = f
    r = math.sqrt(D)
    return 0 < b < r and r - b < 2 * abs(a) < r + b


def _reduced_cycle(f):
    a, b, c = f
    D = b * b - 4 * a * c
    rD = isqrt(D)
    seen = 0
    while not _is_reduced(f, D):
        f = _rho(f, rD)
        seen += 1
        if seen > 10_000:
            raise RuntimeError("form reduction did not terminate")
    cyc = [f]
    g = _rho(f, rD)
    while g != f:
        cyc.append(g)
        g = _rho(g, rD)
        if len(cyc) > 100_000:
            raise RuntimeError("reduced cycle did not close")
    return cyc


def class_key(M) -> tuple:
    """(|trace|, least reduced form in the proper cycle of the primitive form of M)."""
    a, b, c, d = (int(v) for v in M)
    t = a + d
    if t < 0:
        a, b, c, d, t = -a, -b, -c, -d, -t
    if t <= 2:
        raise DomainError("not hyperbolic")
    f = (c, d - a, -b)
    g = gcd(gcd(abs(f[0]), abs(f[1])), abs(f[2]))
    f = (f[0] // g, f[1] // g, f[2] // g)
    return (t, min(_reduced_cycle(f)))


def is_primitive_element(M) -> bool:
    """Whether M is not a proper power in PSL(2, Z) (Pell fundamental solution test)."""
    a, b, c, d = (int(v) for v in M)
    t = abs(a + d)
    f = (c, d - a, -b)
    g = gcd(gcd(abs(f[0]), abs(f[1])), abs(f[2]))
    D0 = (t * t - 4) // (g * g)
    return _fundamental_trace(D0) == t


def _fundamental_trace(D0: int) -> int:
    u = 1
    while True:
        v = D0 * u * u + 4
        s = isqrt(v)
        if s * s == v:
            return s
        u += 1


# ---------------------------------------------------------------------------
# census


@dataclass(frozen=True)
class ClosedGeodesicClass:
    trace: int
    length: float
    representative: MappingClassElement
    primitive: bool
    cf_period: tuple
    simple: bool | None = None

    @property
    def key(self) -> tuple:
        return class_key(self.representative.entries)

    def to_json(self) -> dict:
        return {"trace": self.trace, "length": self.length, "cf_period": list(self.cf_period),
                "simple": self.simple}


def class_from_period(period, simple=None) -> ClosedGeodesicClass:
    w = even_word(period)
    M = word_matrix(w)
    tr = M[0] + M[3]
    return ClosedGeodesicClass(tr, length_from_trace(tr), MappingClassElement(*M), True, tuple(period), simple)


@dataclass(frozen=True)
class CensusTable:
    classes: tuple
    T_max: float

    @property
    def lengths(self) -> np.ndarray:
        return np.array(sorted(c.length for c in self.classes))

    def counts(self, T) -> np.ndarray:
        """N(T) for an array of T."""
        return np.searchsorted(self.lengths, np.asarray(T, dtype=float), side="right")

    def keys(self) -> set:
        return {c.key for c in self.classes}

    def __len__(self):
        return len(self.classes)


def _cycles(t_max: int, digit_max: int | None = None):
    """Even-length digit words with trace <= t_max (all rotations included).

    A prefix product P can only be completed to traces of at least
    P11 + P12 + P21, which bounds the search.
    """
    out = []
    dmax = t_max if digit_max is None else digit_max
    word = []

    def rec(P, k):
        a, b, c, d = P
        even = (k + 1) % 2 == 0
        for q in range(1, dmax + 1):
            a2, b2, c2, d2 = a * q + b, a, c * q + d, c
            can_close = even and a2 + d2 <= t_max
            can_grow = a2 + b2 + c2 <= t_max
            if not (can_close or can_grow):
                break
            word.append(q)
            if can_close:
                out.append(tuple(word))
            if can_grow:
                rec((a2, b2, c2, d2), k + 1)
            word.pop()

    rec((1, 0, 0, 1), 0)
    return out


def _classes_from_words(words) -> list:
    found = {}
    for w in words:
        p = minimal_period(w)
        if even_word(p) != w:
            continue
        if _even_rotation_key(w) != w:
            continue
        cls = class_from_period(p)
        found.setdefault(cls.key, cls)
    return sorted(found.values(), key=lambda c: (c.trace, c.cf_period))


def enumerate_closed_geodesics(T_max: float) -> CensusTable:
    """All primitive oriented classes of length <= T_max, once each.

    A class and its inverse are counted separately.  Traces are exact
    integers, so lengths carry no accumulated error.
    """
    if T_max < length_from_trace(3):
        return CensusTable((), float(T_max))
    tb = trace_bound(T_max)
    classes = [c for c in _classes_from_words(_cycles(tb)) if c.length <= T_max]
    return CensusTable(tuple(classes), float(T_max))


def classes_by_forms(t_max: int) -> set:
    """Independent census: cycles of reduced primitive forms with Pell-fundamental trace."""
    keys = set()
    for t in range(3, t_max + 1):
        D = t * t - 4
        f = 1
        while f * f <= D:
            if D % (f * f) == 0:
                D0 = D // (f * f)
                if D0 % 4 in (0, 1) and _fundamental_trace(D0) == t:
                    for form in _reduced_primitive_forms(D0):
                        keys.add((t, min(_reduced_cycle(form))))
            f += 1
    return keys


def _reduced_primitive_forms(D: int):
    out = []
    for b in range(D % 2, isqrt(D) + 1, 2):
        if b == 0:
            continue
        m = (D - b * b) // 4  # = -ac > 0
        for a in range(1, isqrt(m) + 1):
            if m % a:
                continue
            for u in {a, m // a}:
                for f in ((u, b, -(m // u)), (-u, b, m // u)):
                    if _is_reduced(f, D) and gcd(gcd(u, b), m // u) == 1:
                        out.append(f)
    return out


@dataclass(frozen=True)
class GrowthFit:
    slope: float
    stderr: float
    intercept: float
    residuals: tuple
    window: tuple


def growth_rate_fit(census: CensusTable, window=(8.0, 12.0), points: int = 41) -> GrowthFit:
    """Least-squares slope of log N(T) over the window."""
    T0, T1 = window
    if len(census) == 0 or census.counts([T1])[0] < 50:
        raise InsufficientData("need at least 50 classes below the window end")
    T = np.linspace(T0, T1, points)
    N = census.counts(T)
    if np.any(N == 0):
        raise InsufficientData("empty counts in window")
    res = stats.linregress(T, np.log(N))
    resid = np.log(N) - (res.intercept + res.slope * T)
    return GrowthFit(float(res.slope), float(res.stderr), float(res.intercept), tuple(resid.tolist()), (T0, T1))


# ---------------------------------------------------------------------------
# subshifts and horseshoes


@dataclass(frozen=True)
class SubshiftSpec:
    digit_bound: int
    adjacency: np.ndarray = field(repr=False)
    entropy: float

    @property
    def spectral_radius(self) -> float:
        return math.exp(self.entropy)

    def periodic_points(self, k: int) -> int:
        return int(round(np.trace(np.linalg.matrix_power(self.adjacency.astype(object), k))))


def bounded_cf_subshift(N: int) -> SubshiftSpec:
    """Full shift on digits 1..N; every digit may follow every other."""
    if N < 1:
        raise DomainError("digit bound must be at least 1")
    A = np.ones((N, N), dtype=np.int64)
    rho = float(np.max(np.abs(np.linalg.eigvals(A.astype(float)))))
    return SubshiftSpec(N, A, math.log(rho))


def primitive_orbit_counts(N: int, k_max: int) -> dict:
    """Number of primitive necklaces of each length over N letters (Moebius sum)."""
    def mobius(n):
        res, m, p = 1, n, 2
        while p * p <= m:
            if m % p == 0:
                m //= p
                if m % p == 0:
                    return 0
                res = -res
            p += 1
        return -res if m > 1 else res

    return {k: sum(mobius(k // d) * N**d for d in range(1, k + 1) if k % d == 0) // k for k in range(1, k_max + 1)}


def periodic_counts_from_orbits(orbits: dict, k: int) -> int:
    return sum(d * orbits.get(d, 0) for d in range(1, k + 1) if k % d == 0)


def height_bound(N: int) -> float:
    """Largest fundamental-domain height of a geodesic with digits <= N."""
    return math.sqrt(N * N + 4 * N) / 2.0


def _periodic_cf_value(word) -> float:
    """[w1; w2, ..., wk, w1, ...] for a purely periodic word, via the fixed point."""
    a, b, c, d = word_matrix(word)
    # x = (a x + b)/(c x + d), positive root
    A, B, C = c, d - a, -b
    return (-B + math.sqrt(B * B - 4 * A * C)) / (2 * A)


def axis_height(period) -> float:
    """Maximum height in the fundamental domain of the closed geodesic with this cycle.

    Over the rotations i, half of [w_i; w_{i+1}, ...] + [0; w_{i-1}, w_{i-2}, ...].
    """
    w = tuple(period)
    k = len(w)
    best = 0.0
    for i in range(k):
        x = _periodic_cf_value(w[i:] + w[:i])
        y = 1.0 / _periodic_cf_value(tuple(w[(i - 1 - j) % k] for j in range(k)))
        best = max(best, 0.5 * (x + y))
    return best


def cf_period_of(M) -> tuple:
    """Cycle of partial quotients of the attracting fixed point of hyperbolic M."""
    a, b, c, d = (int(v) for v in M)
    t = a + d
    if t < 0:
        a, b, c, d, t = -a, -b, -c, -d, -t
    if t <= 2 or c == 0:
        raise DomainError("not hyperbolic")
    D = t * t - 4
    rD = isqrt(D)
    # attracting point (a - d + sqrt D) / 2c; 2c divides D - (a - d)^2 = 4bc
    P, Q = a - d, 2 * c
    seen = {}
    digits = []
    while (P, Q) not in seen:
        seen[(P, Q)] = len(digits)
        q = (P + rD) // Q if Q > 0 else -((P + rD) // -Q) - 1
        digits.append(q)
        P = q * Q - P
        Q = (D - P * P) // Q
    return minimal_period(digits[seen[(P, Q)]:])


def lyndon_words(N: int, k_max: int):
    """Aperiodic cycles over 1..N, one per rotation class, length <= k_max."""
    w = [1]
    while w:
        yield tuple(w)
        m = len(w)
        while len(w) < k_max:
            w.append(w[len(w) - m])
        while w and w[-1] == N:
            w.pop()
        if w:
            w[-1] += 1


def closed_geodesics_in_horseshoe(N: int, k_max: int) -> list:
    """Classes whose cycle uses digits <= N, with minimal cycle length <= k_max.

    An even cycle and its rotation by one step may be different classes
    (they are exchanged by an orientation-reversing symmetry).
    """
    if N < 1:
        raise DomainError("digit bound must be at least 1")
    found = {}
    for p in lyndon_words(N, k_max):
        for r in ((p, p[1:] + p[:1]) if len(p) % 2 == 0 else (p,)):
            cls = class_from_period(r)
            found.setdefault(cls.key, cls)
    return sorted(found.values(), key=lambda c: (len(c.cf_period), c.cf_period))


def horseshoe_orbit_counts(classes) -> dict:
    """Cyclic words (all rotations identified) per minimal cycle length."""
    words = {canonical_rotation(c.cf_period) for c in classes}
    counts = {}
    for w in words:
        counts[len(w)] = counts.get(len(w), 0) + 1
    return dict(sorted(counts.items()))


def horseshoe_entropy_fit(N: int, ks=range(8, 17)) -> dict:
    classes = closed_geodesics_in_horseshoe(N, max(ks))
    orbits = horseshoe_orbit_counts(classes)
    p = np.array([periodic_counts_from_orbits(orbits, k) for k in ks], dtype=float)
    slope = float(np.polyfit(np.array(list(ks), dtype=float), np.log(p), 1)[0])
    return {"N": N, "slope": slope, "entropy": bounded_cf_subshift(N).entropy, "p": p.tolist()}


# ---------------------------------------------------------------------------
# simple classes on the square punctured torus

GEN_A = MappingClassElement(1, 1, 1, 2)
GEN_B = MappingClassElement(1, -1, -1, 2)
H_STAR = 1.5


def christoffel_word(p: int, q: int) -> str:
    """Lower Christoffel word of slope p/q over {a, b} (a horizontal, b vertical)."""
    if gcd(p, q) != 1:
        raise DomainError("slope must be in lowest terms")
    if q == 0:
        return "b"
    if p == 0:
        return "a"
    n = p + q
    return "".join("a" if ((i + 1) * p) // n == (i * p) // n else "b" for i in range(n))


def word_element(word: str) -> MappingClassElement:
    M = MappingClassElement.identity()
    table = {"a": GEN_A, "b": GEN_B, "A": GEN_A.inverse(), "B": GEN_B.inverse()}
    for ch in word:
        M = M @ table[ch]
    return M


def fricke_traces(q_max: int) -> dict:
    """Traces of simple classes keyed by slope (p, q), 0 <= p, q <= q_max, via the Fricke recursion.

    Farey neighbours x, y with mediant m satisfy tr W_m = tr W_x tr W_y - tr W_z,
    where z is the slope they were both born from.
    """
    tr = {(0, 1): 3, (1, 0): 3, (1, 1): 3}
    stack = [((0, 1), (1, 1), 3), ((1, 1), (1, 0), 3)]
    while stack:
        x, y, tz = stack.pop()
        m = (x[0] + y[0], x[1] + y[1])
        if m[0] > q_max or m[1] > q_max:
            continue
        t = tr[x] * tr[y] - tz
        tr[m] = t
        stack.append((x, m, tr[y]))
        stack.append((m, y, tr[x]))
    return tr


@dataclass(frozen=True)
class SimpleClass:
    slope: tuple
    word: str
    trace: int
    height: float


def simple_geodesic_census(q_max: int) -> list:
    """Simple classes of slope p/q, 0 <= p, q <= q_max in lowest terms, with modular heights."""
    if q_max < 1:
        raise DomainError("q_max must be at least 1")
    out = []
    for (p, q), t in sorted(fricke_traces(q_max).items()):
        w = christoffel_word(p, q)
        M = word_element(w)
        h = axis_height(cf_period_of(M.entries))
        out.append(SimpleClass((p, q), w, t, h))
    return out


def is_balanced(word: str) -> bool:
    n = len(word)
    ww = word * 2
    for L in range(1, n):
        counts = {ww[i:i + L].count("a") for i in range(n)}
        if max(counts) - min(counts) > 1:
            return False
    return True


def nonsimple_sample(count: int, seed: int = 0, length=(4, 10)) -> list:
    """Positive words in a, b that are primitive as cyclic words but not balanced."""
    rng = np.random.default_rng(seed)
    out, seen = [], set()
    while len(out) < count:
        n = int(rng.integers(length[0], length[1] + 1))
        w = "".join(rng.choice(["a", "b"], size=n))
        if "a" not in w or "b" not in w or is_balanced(w):
            continue
        if len(minimal_period(w)) != n:
            continue
        key = canonical_rotation(w)
        if key in seen:
            continue
        seen.add(key)
        M = word_element(w)
        out.append(SimpleClass(None, w, M.trace, axis_height(cf_period_of(M.entries))))
    return out


# ---------------------------------------------------------------------------
# areas


def cusp_area_divergence(eps: float, T_values, backend: MetricBackend | None = None, quadrature: bool = True) -> list:
    """Area of {l < eps, |tau| < T} under the area form (1/2) dl dtau, exact and by quadrature."""
    if not eps > 0:
        raise DomainError("eps must be positive")
    rows = []
    for T in T_values:
        exact = eps * float(T)
        row = {"eps": eps, "T": float(T), "area": exact}
        if quadrature and backend is not None and T > 0:
            def dens(tau, ell):
                g00, g01, g11 = backend.metric_components(np.array([[ell, tau]]))
                return math.sqrt(g00[0] * g11[0] - g01[0] ** 2)
            val, _ = integrate.dblquad(dens, 0.0, eps, -float(T), float(T), epsabs=0.0, epsrel=1e-10)
            row["quadrature"] = val
        rows.append(row)
    return rows


def quotient_sector_area(eps: float) -> float:
    """Area of {0 < l < eps, 0 < tau < l}, a fundamental region for the twist."""
    val, _ = integrate.quad(lambda ell: 0.5 * ell, 0.0, eps)
    return val


def fundamental_domain_area() -> float:
    val, _ = integrate.dblquad(lambda y, x: 1.0 / (y * y), -0.5, 0.5, lambda x: math.sqrt(1.0 - x * x),
                               lambda x: np.inf, epsabs=1e-13, epsrel=1e-13)
    return val


# ---------------------------------------------------------------------------
# recurrence


_NEAR = None


def _near_elements():
    global _NEAR
    if _NEAR is None:
        gens = [(0, -1, 1, 0), (1, 1, 0, 1), (1, -1, 0, 1)]
        els = {(1, 0, 0, 1)}
        frontier = [(1, 0, 0, 1)]
        for _ in range(3):
            nxt = []
            for m in frontier:
                for g in gens:
                    a, b, c, d = m
                    e, f, gg, h = g
                    p = (a * e + b * gg, a * f + b * h, c * e + d * gg, c * f + d * h)
                    if p[2] < 0 or (p[2] == 0 and p[3] < 0):
                        p = tuple(-v for v in p)
                    if p not in els:
                        els.add(p)
                        nxt.append(p)
            frontier = nxt
        _NEAR = sorted(els)
    return _NEAR


def _reduce_arrays(z, th):
    for _ in range(200):
        n = np.floor(z.real + 0.5)
        z = z - n
        m = np.abs(z) < 1.0 - 1e-15
        if not m.any():
            break
        th = np.where(m, th - 2.0 * np.angle(z), th)
        z = np.where(m, -1.0 / z, z)
    return z, wrap_angle(th)


def _bundle_dist(z, th, images):
    best = np.full(z.shape, np.inf)
    for zi, ti in images:
        db = 2.0 * np.arcsinh(np.abs(z - zi) / (2.0 * np.sqrt(z.imag * zi.imag)))
        best = np.minimum(best, db + np.abs(wrap_angle(th - ti)))
    return best


def _images(z0, th0):
    out = []
    for a, b, c, d in _near_elements():
        den = c * z0 + d
        out.append(((a * z0 + b) / den, wrap_angle(th0 - 2.0 * np.angle(den))))
    return out


def liouville_sample(rng: np.random.Generator, count: int):
    """Tangents uniform for the Liouville measure over the fundamental domain."""
    xs, ys = [], []
    while len(xs) < count:
        x = rng.uniform(-0.5, 0.5)
        v = rng.uniform(0.0, 2.0 / math.sqrt(3.0))
        if v == 0.0:
            continue
        y = 1.0 / v
        if x * x + y * y >= 1.0:
            xs.append(x)
            ys.append(y)
    th = rng.uniform(-math.pi, math.pi, count)
    return np.array(xs) + 1j * np.array(ys), th


@dataclass(frozen=True)
class RecurrenceStats:
    return_times: np.ndarray
    T_horizon: float
    delta: float
    errors: tuple = ()

    def fraction(self, T) -> float:
        if len(self.return_times) == 0:
            return 0.0
        return float(np.mean(self.return_times <= T))

    def curve(self, Ts) -> list:
        return [(float(T), self.fraction(T)) for T in Ts]

    def to_json(self) -> dict:
        rt = self.return_times
        fin = rt[np.isfinite(rt)]
        return {"samples": int(len(rt)), "T_horizon": self.T_horizon, "delta": self.delta,
                "recurrent_fraction": self.fraction(self.T_horizon),
                "median_return": float(np.median(fin)) if len(fin) else None,
                "errors": list(self.errors)}


def return_times(z0, th0, T_horizon: float, delta: float, dt: float = 0.01, refine: bool = True) -> np.ndarray:
    """First return to the delta-ball (product metric on the reduced bundle).

    A sample must first leave the ball; the return time is the moment of
    closest approach during the first excursion back inside it.
    """
    z0 = np.asarray(z0, dtype=complex)
    th0 = np.asarray(th0, dtype=float)
    imgs = _images(z0, th0)
    z, th = z0.copy(), th0.copy()
    M = len(z0)
    left = np.zeros(M, bool)
    inside = np.zeros(M, bool)
    done = np.zeros(M, bool)
    best = np.full(M, np.inf)
    best_t = np.full(M, np.inf)
    best_state = [None] * M
    out = np.full(M, np.inf)
    nsteps = int(math.ceil(T_horizon / dt))
    for k in range(1, nsteps + 1):
        prev_z, prev_th = z, th
        zz, dd = _exp_points(z.real, z.imag, th, dt)
        z, th = _reduce_arrays(np.asarray(zz), np.asarray(dd))
        t = k * dt
        dist = _bundle_dist(z, th, imgs)
        left |= dist > delta
        now_in = left & (dist <= delta) & ~done
        closer = now_in & (dist < best)
        for i in np.flatnonzero(closer):
            best_state[i] = (prev_z[i], prev_th[i], t - dt)
        best = np.where(closer, dist, best)
        best_t = np.where(closer, t, best_t)
        finished = inside & ~now_in & ~done
        out[finished] = best_t[finished]
        done |= finished
        inside = now_in
    pending = inside & ~done
    out[pending] = best_t[pending]
    if refine:
        for i in np.flatnonzero(np.isfinite(out)):
            zp, tp, t0 = best_state[i]
            single = [(zi[i:i + 1], ti[i:i + 1]) for zi, ti in imgs]

            def f(s):
                zz, dd = _exp_points(zp.real, zp.imag, tp, s)
                zr, tr = _reduce_arrays(np.atleast_1d(zz), np.atleast_1d(dd))
                return float(_bundle_dist(zr, tr, single)[0])

            r = optimize.minimize_scalar(f, bounds=(0.0, 2.0 * dt), method="bounded", options={"xatol": 1e-9})
            out[i] = t0 + float(r.x)
    return out


def recurrence_mc(backend: MetricBackend | None, samples: int, T_horizon: float, delta: float, seed: int,
                  dt: float = 0.01) -> RecurrenceStats:
    """Monte Carlo return times for Liouville-random tangents on the modular surface."""
    backend = backend or hyperbolic_backend()
    if backend.kind != HYPERBOLIC:
        raise DomainError("recurrence sampling needs the finite-area hyperbolic quotient")
    if samples <= 0:
        return RecurrenceStats(np.zeros(0), float(T_horizon), float(delta))
    rng = np.random.default_rng(seed)
    z0, th0 = liouville_sample(rng, samples)
    rt = return_times(z0, th0, T_horizon, delta, dt)
    return RecurrenceStats(rt, float(T_horizon), float(delta))


def trace3_tangent():
    """Top of the axis of [[2, 1], [1, 1]], heading to the attracting fixed point."""
    z = complex(0.5, math.sqrt(5.0) / 2.0)
    # the attracting point (1 + sqrt 5)/2 lies to the right: clockwise along the circle
    return z, -math.pi / 2.0
