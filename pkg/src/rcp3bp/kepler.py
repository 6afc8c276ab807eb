"""Two-body (mu = 0) machinery: Kepler's equation and the chart chain

    Delaunay (ell, g, L, G) -> polar (r, phi, R, G) -> rotating Cartesian (x, y)
                                                    -> Jupiter-centred (u, v)

All charts live in the frame rotating with the primaries; the polar and
Delaunay charts are centred at the centre of mass, so at mu = 0 the Sun sits
at the origin and Jupiter on the unit circle at (1, 0).

Retrograde orbits (G < 0) use ``phi = g + sign(G) * v`` so that the angle
``phi`` turns in the direction of the angular momentum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericError

TWO_PI = 2.0 * math.pi

# relative tolerance on the energy identity R^2 + G^2/r^2 - 2/r = -1/L^2
_ENERGY_IDENTITY_TOL = 1e-9


def wrap_angle(a: float) -> float:
    """Reduce an angle to [0, 2*pi)."""
    a = math.fmod(a, TWO_PI)
    if a < 0.0:
        a += TWO_PI
    if a >= TWO_PI:
        a -= TWO_PI
    return a


def angle_diff(a: float, b: float) -> float:
    """Signed difference a - b reduced to (-pi, pi]."""
    d = math.fmod(a - b, TWO_PI)
    if d > math.pi:
        d -= TWO_PI
    elif d <= -math.pi:
        d += TWO_PI
    return d


@dataclass(frozen=True)
class DelaunayState:
    """Action-angle state of the Kepler problem in the rotating frame.

    ``ell`` is the mean anomaly, ``g`` the argument of the perihelion measured
    from the line of primaries, ``L**2`` the semimajor axis and ``G`` the
    angular momentum. Angles are reduced to [0, 2*pi) on construction.
    """

    ell: float
    g: float
    L: float
    G: float

    def __post_init__(self):
        L, G = float(self.L), float(self.G)
        if not L > 0.0:
            raise DomainError(f"L must be positive, got {L}")
        if G == 0.0:
            raise DomainError("G = 0 is a degenerate (e = 1) ellipse")
        if abs(G) > L:
            raise DomainError(f"|G| = {abs(G)} exceeds L = {L}")
        object.__setattr__(self, "ell", wrap_angle(float(self.ell)))
        object.__setattr__(self, "g", wrap_angle(float(self.g)))
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "G", G)

    @property
    def e(self) -> float:
        return eccentricity(self.L, self.G)

    def as_array(self) -> np.ndarray:
        return np.array([self.ell, self.g, self.L, self.G])


@dataclass(frozen=True)
class PolarState:
    r: float
    phi: float
    R: float
    G: float

    def __post_init__(self):
        if not float(self.r) > 0.0:
            raise DomainError(f"r must be positive, got {self.r}")


@dataclass(frozen=True)
class RotatingCartesianState:
    """Position ``x`` and conjugate momentum ``y`` in the rotating frame."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float).reshape(2))
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float).reshape(2))

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.x, self.y])

    @classmethod
    def from_array(cls, a) -> "RotatingCartesianState":
        return cls(a[0:2], a[2:4])


@dataclass(frozen=True)
class JupiterCenteredState:
    """Position ``u`` relative to Jupiter and shifted momentum ``v``."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "u", np.asarray(self.u, dtype=float).reshape(2))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float).reshape(2))

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.u, self.v])

    @classmethod
    def from_array(cls, a) -> "JupiterCenteredState":
        return cls(a[0:2], a[2:4])


def eccentricity(L: float, G: float) -> float:
    if abs(G) > L:
        raise DomainError(f"|G| = {abs(G)} exceeds L = {L}")
    ratio = G / L
    return math.sqrt(max(0.0, 1.0 - ratio * ratio))


def h0_delaunay(L: float, G: float) -> float:
    """Integrable rotating-frame energy -1/(2 L^2) - G."""
    if not L > 0.0:
        raise DomainError(f"L must be positive, got {L}")
    return -0.5 / (L * L) - G


def solve_kepler(ell: float, e: float, tol: float = 1e-13) -> float:
    """Eccentric anomaly u in [0, 2*pi) with u - e sin u = ell (mod 2*pi).

    Newton iteration seeded with ell + e sin ell, safeguarded by the bracket
    [0, 2*pi] on which the residual is strictly increasing.
    """
    if not 0.0 <= e < 1.0:
        raise DomainError(f"eccentricity must lie in [0, 1), got {e}")
    M = wrap_angle(ell)
    if e == 0.0:
        return M
    lo, hi = 0.0, TWO_PI
    u = M + e * math.sin(M)
    if not lo <= u <= hi:
        u = M
    for _ in range(100):
        f = u - e * math.sin(u) - M
        if f > 0.0:
            hi = u
        else:
            lo = u
        if abs(f) <= tol:
            break
        fp = 1.0 - e * math.cos(u)
        step = u - f / fp
        if not lo < step < hi:
            step = 0.5 * (lo + hi)
        if step == u:
            break
        u = step
    # one more Newton polish keeps the residual at rounding level
    u -= (u - e * math.sin(u) - M) / (1.0 - e * math.cos(u))
    if u >= TWO_PI:
        u -= TWO_PI
    elif u < 0.0:
        u += TWO_PI
    return u


def true_anomaly(u: float, e: float) -> float:
    """True anomaly from the eccentric anomaly, on the branch where v - u is
    continuous and 2*pi-periodic (so v(0) = 0 and v(pi) = pi)."""
    if not 0.0 <= e < 1.0:
        raise DomainError(f"eccentricity must lie in [0, 1), got {e}")
    k = math.floor(u / TWO_PI)
    w = u - k * TWO_PI
    half = 0.5 * w
    v = 2.0 * math.atan2(math.sqrt(1.0 + e) * math.sin(half),
                         math.sqrt(1.0 - e) * math.cos(half))
    return v + k * TWO_PI


def _sign(G: float) -> float:
    return 1.0 if G > 0.0 else -1.0


def delaunay_to_polar(s: DelaunayState) -> PolarState:
    L, G = s.L, s.G
    e = eccentricity(L, G)
    u = solve_kepler(s.ell, e)
    one_m_ecos = 1.0 - e * math.cos(u)
    r = L * L * one_m_ecos
    phi = s.g + _sign(G) * true_anomaly(u, e)
    # closed form of dr/dt; same value as the energy identity with sign(sin u)
    R = e * math.sin(u) / (L * one_m_ecos)
    residual = R * R + G * G / (r * r) - 2.0 / r + 1.0 / (L * L)
    scale = G * G / (r * r) + 2.0 / r
    if abs(residual) > _ENERGY_IDENTITY_TOL * scale:
        raise NumericError(f"energy identity violated by {residual:.3e}")
    return PolarState(r, phi, R, G)


def polar_to_delaunay(s: PolarState) -> DelaunayState:
    r, R, G = s.r, s.R, s.G
    energy = 0.5 * R * R + 0.5 * G * G / (r * r) - 1.0 / r
    if not energy < 0.0:
        raise DomainError(f"unbound state (Kepler energy {energy})")
    L = 1.0 / math.sqrt(-2.0 * energy)
    if G == 0.0 or abs(G) >= L:
        raise DomainError("state is degenerate or circular")
    e = eccentricity(L, G)
    if e < 1e-10:
        raise DomainError("circular orbit: perihelion undefined")
    cos_u = (1.0 - r / (L * L)) / e
    sin_u = R * r / (e * L)
    u = wrap_angle(math.atan2(sin_u, cos_u))
    ell = u - e * math.sin(u)
    g = s.phi - _sign(G) * true_anomaly(u, e)
    return DelaunayState(ell, g, L, G)


def polar_to_cartesian(s: PolarState) -> RotatingCartesianState:
    r, phi, R, G = s.r, s.phi, s.R, s.G
    c, sn = math.cos(phi), math.sin(phi)
    x = (r * c, r * sn)
    y = (R * c - G / r * sn, R * sn + G / r * c)
    return RotatingCartesianState(x, y)


def cartesian_to_polar(s: RotatingCartesianState) -> PolarState:
    x1, x2 = s.x
    y1, y2 = s.y
    r = math.hypot(x1, x2)
    if r == 0.0:
        raise DomainError("polar chart undefined at the origin")
    phi = math.atan2(x2, x1)
    R = (x1 * y1 + x2 * y2) / r
    G = x1 * y2 - x2 * y1
    return PolarState(r, phi, R, G)


def cartesian_to_jupiter(s: RotatingCartesianState, mu: float) -> JupiterCenteredState:
    u = s.x - np.array([1.0 - mu, 0.0])
    v = s.y - np.array([0.0, 1.0 - mu])
    return JupiterCenteredState(u, v)


def jupiter_to_cartesian(s: JupiterCenteredState, mu: float) -> RotatingCartesianState:
    x = s.u + np.array([1.0 - mu, 0.0])
    y = s.v + np.array([0.0, 1.0 - mu])
    return RotatingCartesianState(x, y)


def delaunay_to_cartesian(s: DelaunayState) -> RotatingCartesianState:
    return polar_to_cartesian(delaunay_to_polar(s))


def cartesian_to_delaunay(s: RotatingCartesianState) -> DelaunayState:
    return polar_to_delaunay(cartesian_to_polar(s))


def delaunay_to_jupiter(s: DelaunayState, mu: float) -> JupiterCenteredState:
    return cartesian_to_jupiter(delaunay_to_cartesian(s), mu)


def jupiter_to_delaunay(s: JupiterCenteredState, mu: float) -> DelaunayState:
    return cartesian_to_delaunay(jupiter_to_cartesian(s, mu))
