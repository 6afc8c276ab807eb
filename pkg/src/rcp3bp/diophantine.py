"""Continued fractions, constant-type numbers, the bounded-quotient Cantor
sets C_K and their gaps, the inhomogeneous Dirichlet (Cassels) solver and
circle-rotation orbit statistics.

Continued fractions are written x = [a1, a2, ...] = 1/(a1 + 1/(a2 + ...)),
so x lies in (0, 1) and convergents p_n/q_n start from p0 = 0, p1 = 1,
q0 = 1, q1 = a1.

Multiples {q omega} are computed exactly enough for q < 2^26 by splitting
omega (held as an mpmath number) into three double pieces whose products
with q are exact in double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from .errors import DomainError

WORK_DPS = 50
_Q_LIMIT = 1 << 26
_ENUM_FULL_LIMIT = 200_000


# ---------------------------------------------------------------------------
# Continued fractions


@dataclass(frozen=True)
class ContinuedFraction:
    """Quotients a1..ad, an optional periodic tail repeated forever after
    them, and a flag set when a finite expansion ended early (rational input
    or exhausted precision)."""

    quotients: tuple
    period: tuple = ()
    truncated: bool = False

    def __post_init__(self):
        object.__setattr__(self, "quotients", tuple(int(a) for a in self.quotients))
        object.__setattr__(self, "period", tuple(int(a) for a in self.period))
        if any(a < 1 for a in self.quotients + self.period):
            raise DomainError("continued fraction quotients must be positive integers")

    def __len__(self):
        return len(self.quotients)


def to_mpf(x) -> mpmath.mpf:
    with mpmath.workdps(WORK_DPS):
        if isinstance(x, Fraction):
            return mpmath.mpf(x.numerator) / x.denominator
        return mpmath.mpf(x)


def cf_expand(x, depth: int, max_quotient: int = 10**12) -> ContinuedFraction:
    """Expansion of x in (0, 1) to at most ``depth`` quotients.

    Fractions are expanded exactly. Other inputs go through mpmath at
    WORK_DPS digits; the expansion stops (flagged truncated) on a zero
    remainder or a quotient above ``max_quotient``.
    """
    if isinstance(x, Fraction):
        if not 0 < x < 1:
            raise DomainError("x must lie in (0, 1)")
        quots = []
        r = x
        while len(quots) < depth and r != 0:
            y = 1 / r
            a = y.numerator // y.denominator
            quots.append(a)
            r = y - a
        return ContinuedFraction(quots, (), r == 0 and len(quots) <= depth)
    with mpmath.workdps(WORK_DPS):
        r = to_mpf(x)
        if not 0 < r < 1:
            raise DomainError("x must lie in (0, 1)")
        quots = []
        truncated = False
        while len(quots) < depth:
            if r == 0:
                truncated = True
                break
            y = 1 / r
            a = int(mpmath.floor(y))
            if a > max_quotient:
                truncated = True
                break
            quots.append(a)
            r = y - a
        return ContinuedFraction(quots, (), truncated)


def convergents(cf: ContinuedFraction | Sequence[int]) -> list[tuple[int, int]]:
    """[(p1, q1), ..., (pd, qd)] of the finite part."""
    quots = cf.quotients if isinstance(cf, ContinuedFraction) else tuple(cf)
    p_prev, p = 0, 1
    q_prev, q = 1, quots[0] if quots else 1
    out = []
    if not quots:
        return out
    out.append((p, q))
    for a in quots[1:]:
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
        out.append((p, q))
    return out


def _pq_pair(quots):
    """(p_{n-1}, p_n, q_{n-1}, q_n) after the given quotients."""
    p_prev, p, q_prev, q = 1, 0, 0, 1  # seeds p_{-1}, p_0, q_{-1}, q_0
    for a in quots:
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
    return p_prev, p, q_prev, q


def periodic_value(period: Sequence[int]) -> mpmath.mpf:
    """Value y of the purely periodic expansion [(b1..bk)^inf], the root in
    (0, 1) of Q_{k-1} y^2 + (Q_k - P_{k-1}) y - P_k = 0."""
    if not period:
        raise DomainError("empty period")
    P_prev, P, Q_prev, Q = _pq_pair(period)
    with mpmath.workdps(WORK_DPS):
        a, b, c = mpmath.mpf(Q_prev), mpmath.mpf(Q - P_prev), mpmath.mpf(-P)
        if a == 0:
            return -c / b
        return (-b + mpmath.sqrt(b * b - 4 * a * c)) / (2 * a)


def cf_value(cf: ContinuedFraction):
    """Exact Fraction for finite expansions; mpmath value when a periodic
    tail is present."""
    if not cf.period:
        if not cf.quotients:
            raise DomainError("empty continued fraction")
        _, p, _, q = _pq_pair(cf.quotients)
        return Fraction(p, q)
    y = periodic_value(cf.period)
    p_prev, p, q_prev, q = _pq_pair(cf.quotients)
    with mpmath.workdps(WORK_DPS):
        return (p + y * p_prev) / (q + y * q_prev)


def approximation_bounds(cf: ContinuedFraction, n: int) -> tuple[float, float]:
    """Two-sided bound 1/(q_n^2 (2 + a_{n+1})) < |x - p_n/q_n| < 1/(q_n^2 a_{n+1})."""
    q = convergents(cf)[n - 1][1]
    a_next = cf.quotients[n]
    return 1.0 / (q * q * (2 + a_next)), 1.0 / (q * q * a_next)


# ---------------------------------------------------------------------------
# Multiples on the circle


def _split(omega) -> tuple[float, float, float]:
    with mpmath.workdps(WORK_DPS):
        w = to_mpf(omega)
        w = w - mpmath.floor(w)
        hi = mpmath.floor(w * 2**26) / 2**26
        mid = mpmath.floor((w - hi) * 2**52) / 2**52
        lo = w - hi - mid
        return float(hi), float(mid), float(lo)


def frac_multiples(omega, qs) -> np.ndarray:
    """{q omega} in [0, 1) for integer q with |q| < 2^26."""
    qs = np.asarray(qs, dtype=np.int64)
    if qs.size and int(np.max(np.abs(qs))) >= _Q_LIMIT:
        raise DomainError("multiples limited to |q| < 2^26")
    hi, mid, lo = _split(omega)
    qf = qs.astype(float)
    s = np.mod(qf * hi, 1.0) + np.mod(qf * mid, 1.0) + qf * lo
    return np.mod(s, 1.0)


def circle_norm(x) -> np.ndarray:
    """Distance to the nearest integer."""
    f = np.mod(x, 1.0)
    return np.minimum(f, 1.0 - f)


def _arange_chunks(start: int, stop: int, chunk: int = 1 << 20):
    for a in range(start, stop, chunk):
        yield np.arange(a, min(stop, a + chunk), dtype=np.int64)


def is_constant_type(omega, gamma: float, Q_max: int) -> bool:
    """q ||q omega|| >= gamma for 1 <= q <= Q_max (certified up to Q_max only)."""
    for qs in _arange_chunks(1, int(Q_max) + 1):
        if np.any(qs * circle_norm(frac_multiples(omega, qs)) < gamma):
            return False
    return True


def entry_bound_check(omega_cf: ContinuedFraction, gamma: float) -> bool:
    """All quotients at most 1/gamma."""
    bound = 1.0 / gamma
    return all(a <= bound for a in omega_cf.quotients + omega_cf.period)


def diophantine_constant(omega, Q_max: int) -> float:
    """min_{1<=q<=Q_max} q ||q omega||, the empirical constant of omega."""
    best = math.inf
    for qs in _arange_chunks(1, int(Q_max) + 1):
        best = min(best, float(np.min(qs * circle_norm(frac_multiples(omega, qs)))))
    return best


# ---------------------------------------------------------------------------
# Cantor sets C_K


def _alternating(start_pos: int, length: int, K: int, big_on_odd: bool) -> list[int]:
    """Completion a_{start_pos+1} .. a_{start_pos+length} alternating between
    K and 1; positions are 1-based."""
    out = []
    for i in range(start_pos + 1, start_pos + length + 1):
        odd = i % 2 == 1
        out.append(K if odd == big_on_odd else 1)
    return out


def _extend(state, quots):
    p_prev, p, q_prev, q = state
    for a in quots:
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
    return p_prev, p, q_prev, q


def _value(state) -> float:
    return state[1] / state[3]


def enumerate_CK(K: int, depth: int, resolution: float | None = None) -> np.ndarray:
    """Sorted values of the length-``depth`` expansions with all quotients in
    1..K.

    When K^depth is small every expansion is listed. Otherwise prefix
    cylinders narrower than ``resolution`` contribute only their two extreme
    completions (the alternating K,1 patterns, by monotonicity in each
    quotient). All adjacent gaps of width >= resolution, and their
    endpoints, are then exactly those of the full list.
    """
    if K < 1 or depth < 1:
        raise DomainError("K and depth must be positive")
    full = K ** depth <= _ENUM_FULL_LIMIT
    if resolution is None:
        resolution = 0.0 if full else 0.25 / (K + 2) ** 2
    if not full and resolution <= 0.0:
        raise DomainError(f"K^depth = {K}^{depth} too large to enumerate in full")
    out: list[float] = []

    def walk(state, m):
        if m == depth:
            out.append(_value(state))
            return
        if resolution > 0.0:
            rest = depth - m
            # the value decreases in odd-position quotients
            lo = _value(_extend(state, _alternating(m, rest, K, big_on_odd=True)))
            hi = _value(_extend(state, _alternating(m, rest, K, big_on_odd=False)))
            if abs(hi - lo) < resolution:
                out.append(lo)
                out.append(hi)
                return
        for a in range(1, K + 1):
            walk(_extend(state, (a,)), m + 1)

    walk((1, 0, 0, 1), 0)
    return np.unique(np.array(out))


@dataclass(frozen=True)
class GapInterval:
    left: float
    right: float
    left_cf: ContinuedFraction
    right_cf: ContinuedFraction

    @property
    def width(self) -> float:
        return self.right - self.left


def _gap_patterns(K: int, depth: int) -> tuple[list[int], list[int]]:
    left = [2] + [K if i % 2 == 0 else 1 for i in range(depth - 1)]
    right = [1, 1] + [K if i % 2 == 0 else 1 for i in range(depth - 2)]
    return left[:depth], right[:depth]


def largest_gap(K: int, depth: int) -> GapInterval:
    """Largest gap of C_K at finite depth: between [2, K, 1, K, 1, ...] (the
    largest element with a1 >= 2) and [1, 1, K, 1, K, ...] (the smallest
    element with a1 = 1), both truncated to ``depth`` quotients."""
    if K < 2:
        raise DomainError("C_1 is a single point and has no gaps")
    lq, rq = _gap_patterns(K, depth)
    lcf, rcf = ContinuedFraction(lq), ContinuedFraction(rq)
    return GapInterval(float(cf_value(lcf)), float(cf_value(rcf)), lcf, rcf)


def largest_gap_limit(K: int) -> GapInterval:
    """Infinite-depth gap with endpoints [2, (K, 1)^inf] and [1, (1, K)^inf]."""
    if K < 2:
        raise DomainError("C_1 is a single point and has no gaps")
    lcf = ContinuedFraction((2,), (K, 1))
    rcf = ContinuedFraction((1,), (1, K))
    return GapInterval(float(cf_value(lcf)), float(cf_value(rcf)), lcf, rcf)


def max_adjacent_gap(values: np.ndarray) -> tuple[float, float]:
    """Endpoints of the widest gap between consecutive sorted values."""
    d = np.diff(values)
    i = int(np.argmax(d))
    return float(values[i]), float(values[i + 1])


def random_CK(K: int, depth: int, rng: np.random.Generator) -> ContinuedFraction:
    return ContinuedFraction(rng.integers(1, K + 1, size=depth).tolist())


# ---------------------------------------------------------------------------
# Inhomogeneous Dirichlet (Cassels)


class PreconditionViolation(DomainError):
    def __init__(self, x: int, value: float):
        super().__init__(f"||{x} omega|| = {value} violates the homogeneous precondition")
        self.x = x
        self.value = value


@dataclass(frozen=True)
class CasselsBounds:
    h: float
    A1: float
    X1: float


def cassels_bounds(A: float, X: float) -> CasselsBounds:
    h = 1.0 / (X * A)
    return CasselsBounds(h, 0.5 * (h + 1.0) * A, 0.5 * (h + 1.0) * X)


def dirichlet_inhomogeneous(omega, a: float, A: float, X: float) -> int:
    """Integer q with ||q omega - a|| <= A1 and |q| <= X1, given that no
    0 < |x| <= X has ||x omega|| <= A. Smallest |q| wins (positive on ties).

    Raises PreconditionViolation naming the offending x; a search that
    finds nothing raises ArithmeticError since the theorem guarantees a hit.
    """
    if not (A > 0.0 and X > 0.0):
        raise DomainError("A and X must be positive")
    xs = np.arange(1, int(math.floor(X)) + 1, dtype=np.int64)
    if xs.size:
        norms = circle_norm(frac_multiples(omega, xs))
        bad = np.nonzero(norms <= A)[0]
        if bad.size:
            i = int(bad[0])
            raise PreconditionViolation(int(xs[i]), float(norms[i]))
    b = cassels_bounds(A, X)
    n = int(math.floor(b.X1))
    qs = np.arange(-n, n + 1, dtype=np.int64)
    dist = circle_norm(frac_multiples(omega, qs) - a)
    ok = np.nonzero(dist <= b.A1)[0]
    if not ok.size:
        raise ArithmeticError("no solution within the Cassels bounds")
    cand = qs[ok]
    order = np.lexsort((-cand, np.abs(cand)))
    return int(cand[order[0]])


# ---------------------------------------------------------------------------
# Rotation orbits


def find_q_star(omega, threshold: float, q_limit: int | None = None) -> int:
    """Smallest q >= 1 with ||(q + 1) omega|| <= threshold.

    The scan runs in chunks; by Dirichlet's theorem a solution exists with
    q + 1 <= 1/threshold + 1, which bounds the search.
    """
    limit = q_limit if q_limit is not None else int(math.ceil(1.0 / threshold)) + 2
    for ks in _arange_chunks(2, limit + 2):
        hits = np.nonzero(circle_norm(frac_multiples(omega, ks)) <= threshold)[0]
        if hits.size:
            return int(ks[hits[0]]) - 1
    raise ArithmeticError("q* not found below the Dirichlet bound")


def circle_gaps(points) -> np.ndarray:
    """Arc lengths between circularly consecutive points of R/Z."""
    p = np.sort(np.mod(np.asarray(points, dtype=float), 1.0))
    if p.size == 0:
        return np.array([1.0])
    return np.diff(np.append(p, p[0] + 1.0))


@dataclass(frozen=True)
class RotationOrbitStats:
    omega: float
    q_star: int
    max_gap: float
    min_collision_clearance: float


def rotation_orbit_stats(omega, C: float, mu: float, tau: float, gamma: float,
                         target: float = 0.0) -> RotationOrbitStats:
    """Orbit -q omega, q = 0..q*, of a collision on the section: q* from the
    return threshold 4 C mu^tau, the largest circle gap of the orbit, and
    its closest approach (q >= 1) to ``target``.

    ``gamma`` is carried for the caller's density comparison only.
    """
    thr = 4.0 * C * mu ** tau
    q_star = find_q_star(omega, thr)
    qs = np.arange(0, q_star + 1, dtype=np.int64)
    pts = frac_multiples(omega, -qs)
    gaps = circle_gaps(pts)
    clearance = float(np.min(circle_norm(pts[1:] - target)))
    return RotationOrbitStats(float(to_mpf(omega)), q_star, float(np.max(gaps)), clearance)


def two_collision_clearance(omega, ell_second: float, C: float, mu: float, tau: float,
                            q_star: int) -> tuple[bool, bool]:
    """(q1_ok, q2_ok): whether the backward orbit of 0 stays out of the
    4 C mu^tau ball around ell_second for 0 <= q <= q*, and whether the
    backward orbit of ell_second stays out of the ball around 0.

    Both can fail at once; when they do at steps q1 and q2 the sum
    n = q1 + q2 satisfies ||n omega|| < 8 C mu^tau (see
    both_fail_witness).
    """
    thr = 4.0 * C * mu ** tau
    qs = np.arange(0, q_star + 1, dtype=np.int64)
    back0 = frac_multiples(omega, -qs)
    d1 = circle_norm(back0 - ell_second)
    d2 = circle_norm(back0 + ell_second)
    return bool(np.all(d1 >= thr)), bool(np.all(d2 >= thr))


def both_fail_witness(omega, ell_second: float, C: float, mu: float, tau: float,
                      q_star: int) -> tuple[int, int] | None:
    """First (q1, q2) at which both backward orbits enter the other ball."""
    thr = 4.0 * C * mu ** tau
    qs = np.arange(0, q_star + 1, dtype=np.int64)
    back0 = frac_multiples(omega, -qs)
    i1 = np.nonzero(circle_norm(back0 - ell_second) < thr)[0]
    i2 = np.nonzero(circle_norm(back0 + ell_second) < thr)[0]
    if i1.size and i2.size:
        return int(qs[i1[0]]), int(qs[i2[0]])
    return None


def recurrence_q_star(C: float, mu: float, tau: float, gamma: float) -> int:
    """Iterate count ceil(gamma mu^-tau / (20 C) - 1) for the two-sided orbit,
    at least 1."""
    return max(1, math.ceil(gamma * mu ** (-tau) / (20.0 * C) - 1.0))


def orbit_clearance(omega, ell_1: float, collisions: Sequence[float], q_hat: int,
                    skip_origin: bool = False) -> float:
    """min over |q| <= q_hat and listed collisions c of ||ell_1 + q omega - c||,
    leaving out q = 0 when ``skip_origin``."""
    qs = np.arange(-q_hat, q_hat + 1, dtype=np.int64)
    if skip_origin:
        qs = qs[qs != 0]
    pts = frac_multiples(omega, qs) + ell_1
    return float(min(np.min(circle_norm(pts - c)) for c in collisions))


def shifted_orbit_clearance(omega, ell_1: float, collisions: Sequence[float], q_hat: int,
                            radius: float, skip_origin: bool = False) -> bool:
    """True when the two-sided orbit ell_1 + q omega, |q| <= q_hat, stays
    strictly outside every ``radius``-ball around the listed collisions."""
    return orbit_clearance(omega, ell_1, collisions, q_hat, skip_origin) > radius
