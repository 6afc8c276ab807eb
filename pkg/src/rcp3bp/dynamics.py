"""Hamiltonians of the restricted circular planar three-body problem, the
mollified Hamiltonian, region labels, numerical integration with events,
the linear transition flow and the Poincare section map.

Conventions: rotating frame with the Sun at (-mu, 0) and Jupiter at
(1 - mu, 0), J = [[0, 1], [-1, 0]] so that x^T J y = x1 y2 - x2 y1.
The integrators work in the Jupiter-centred chart (u, v) packed as the
array [u1, u2, v1, v2].
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import DomainError, IntegrationError, SingularityError
from .kepler import (
    TWO_PI,
    DelaunayState,
    JupiterCenteredState,
    PolarState,
    RotatingCartesianState,
    delaunay_to_jupiter,
    delaunay_to_polar,
    jupiter_to_delaunay,
)

DEFAULT_TAU = 3.0 / 20.0
DEFAULT_RHO = 10.0


@dataclass(frozen=True)
class ModelParams:
    """Small parameter and the region scales.

    ``C`` is the constant in the size of the collision balls used by the
    density arguments; it does not enter the dynamics.
    """

    mu: float
    tau: float = DEFAULT_TAU
    rho: float = DEFAULT_RHO
    C: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.mu <= 1e-2:
            raise DomainError(f"mu must lie in [0, 1e-2], got {self.mu}")
        if not self.tau > 0.0 or not self.rho > 0.0:
            raise DomainError("tau and rho must be positive")
        if self.mu > 0.0 and not self.r3_radius < self.r2_radius:
            raise DomainError(
                f"regions not nested: rho*sqrt(mu)={self.r3_radius} >= mu^tau={self.r2_radius}")

    @property
    def r2_radius(self) -> float:
        """Outer radius mu^tau of the transition region."""
        return self.mu ** self.tau

    @property
    def r3_radius(self) -> float:
        """Radius rho*sqrt(mu) of the collision region."""
        return self.rho * math.sqrt(self.mu)

    @property
    def collision_epsilon(self) -> float:
        return 1e-3 * self.r3_radius

    @property
    def cap(self) -> float:
        """Plateau value 4 mu^-tau of the mollified Jupiter potential."""
        return 4.0 * self.mu ** (-self.tau)


# ---------------------------------------------------------------------------
# Hamiltonians


def _cross(a1, a2, b1, b2):
    return a1 * b2 - a2 * b1


def ham_rotating(s: RotatingCartesianState, mu: float) -> float:
    x1, x2 = s.x
    y1, y2 = s.y
    d_j = math.hypot(x1 - (1.0 - mu), x2)
    d_s = math.hypot(x1 + mu, x2)
    if d_s == 0.0 or (mu > 0.0 and d_j == 0.0):
        raise SingularityError("evaluation at a primary")
    kin = 0.5 * (y1 * y1 + y2 * y2) - _cross(x1, x2, y1, y2)
    pot = (mu / d_j if mu > 0.0 else 0.0) + (1.0 - mu) / d_s
    return kin - pot


def ham_jupiter(s: JupiterCenteredState, mu: float) -> float:
    u1, u2 = s.u
    v1, v2 = s.v
    d_j = math.hypot(u1, u2)
    d_s = math.hypot(u1 + 1.0, u2)
    if d_s == 0.0 or (mu > 0.0 and d_j == 0.0):
        raise SingularityError("evaluation at a primary")
    kin = 0.5 * (v1 * v1 + v2 * v2) - _cross(u1, u2, v1, v2)
    pot = (mu / d_j if mu > 0.0 else 0.0) + (1.0 - mu) / d_s
    return kin - (1.0 - mu) * u1 - pot - 0.5 * (1.0 - mu) ** 2


def jacobi_constant(s: JupiterCenteredState, mu: float) -> float:
    return -2.0 * ham_jupiter(s, mu)


def polar_perturbations(r: float, phi: float, mu: float) -> tuple[float, float]:
    """The Jupiter term g1 and the Sun-displacement term g2 of the polar
    Hamiltonian, normalised so that H = H0 - mu*g1 - mu*g2.

    g2 = ((1 - mu)/d_sun - 1/r)/mu is evaluated in a cancellation-free form
    that stays accurate as mu -> 0 (its limit is -cos(phi)/r^2 - 1/r).
    """
    hav = 2.0 * math.sin(0.5 * phi) ** 2  # 1 - cos(phi) without cancellation
    d_j2 = (r - (1.0 - mu)) ** 2 + 2.0 * (1.0 - mu) * r * hav
    d_s2 = (r + mu) ** 2 - 2.0 * mu * r * hav
    if d_j2 <= 0.0 or d_s2 <= 0.0:
        raise SingularityError("evaluation at a primary")
    return 1.0 / math.sqrt(d_j2), _g2_only(r, phi, mu)


def ham_polar(s: PolarState, mu: float) -> float:
    r, phi, R, G = s.r, s.phi, s.R, s.G
    h0 = 0.5 * R * R + 0.5 * G * G / (r * r) - G - 1.0 / r
    if mu == 0.0:
        return h0
    g1, g2 = polar_perturbations(r, phi, mu)
    return h0 - mu * g1 - mu * g2


def _bump_B(s: float) -> float:
    return math.exp(-1.0 / s) if s > 0.0 else 0.0


def bump(z: float) -> float:
    """C-infinity step: 0 for |z| <= 1, 1 for |z| >= 2."""
    a = abs(z)
    if a <= 1.0:
        return 0.0
    if a >= 2.0:
        return 1.0
    p, q = _bump_B(a - 1.0), _bump_B(2.0 - a)
    return p / (p + q)


def bump_derivative(z: float) -> float:
    """d bump / dz (odd in z)."""
    a = abs(z)
    if a <= 1.0 or a >= 2.0:
        return 0.0
    p, q = _bump_B(a - 1.0), _bump_B(2.0 - a)
    dpa = p * q * (1.0 / (a - 1.0) ** 2 + 1.0 / (2.0 - a) ** 2) / (p + q) ** 2
    return math.copysign(dpa, z)


def mollified_g1(d: float, params: ModelParams) -> float:
    """Jupiter potential 1/d blended into the constant 4 mu^-tau below mu^tau."""
    scale = params.r2_radius
    cap = params.cap
    if d >= 2.0 * scale:
        return 1.0 / d
    phi = bump(d / scale)
    if phi == 0.0:
        return cap
    return phi * (1.0 / d - cap) + cap


def _mollified_g1_prime(d: float, params: ModelParams) -> float:
    scale = params.r2_radius
    if d >= 2.0 * scale:
        return -1.0 / (d * d)
    if d <= scale:
        return 0.0
    cap = params.cap
    z = d / scale
    return bump_derivative(z) / scale * (1.0 / d - cap) - bump(z) / (d * d)


def mollified_ham(s: PolarState, params: ModelParams) -> float:
    """Polar Hamiltonian with the Jupiter singularity smoothed out inside
    distance 2 mu^tau. Identical to ham_polar (same code path) outside."""
    mu = params.mu
    if mu == 0.0:
        return ham_polar(s, 0.0)
    r, phi = s.r, s.phi
    d_j = math.hypot(r * math.cos(phi) - (1.0 - mu), r * math.sin(phi))
    if d_j >= 2.0 * params.r2_radius:
        return ham_polar(s, mu)
    R, G = s.R, s.G
    h0 = 0.5 * R * R + 0.5 * G * G / (r * r) - G - 1.0 / r
    return h0 - mu * mollified_g1(d_j, params) - mu * _g2_only(r, phi, mu)


def _g2_only(r: float, phi: float, mu: float) -> float:
    # ((1-mu) r - d_s)/mu with the difference of squares expanded by hand
    c = math.cos(phi)
    d_s = math.sqrt(r * r + mu * mu + 2.0 * mu * r * c)
    num = -2.0 * r * r + mu * r * r - 2.0 * r * c - mu
    return num / (((1.0 - mu) * r + d_s) * r * d_s)


def mollified_ham_jupiter(s: JupiterCenteredState, params: ModelParams) -> float:
    mu = params.mu
    u1, u2 = s.u
    v1, v2 = s.v
    d_j = math.hypot(u1, u2)
    d_s = math.hypot(u1 + 1.0, u2)
    kin = 0.5 * (v1 * v1 + v2 * v2) - _cross(u1, u2, v1, v2)
    jup = mu * mollified_g1(d_j, params) if mu > 0.0 else 0.0
    return kin - (1.0 - mu) * u1 - jup - (1.0 - mu) / d_s - 0.5 * (1.0 - mu) ** 2


# ---------------------------------------------------------------------------
# Vector fields


def _rhs(t, y, mu):
    u1, u2, v1, v2 = y
    d_j2 = u1 * u1 + u2 * u2
    w1 = u1 + 1.0
    d_s2 = w1 * w1 + u2 * u2
    ks = (1.0 - mu) / (d_s2 * math.sqrt(d_s2))
    a1 = v2 + (1.0 - mu) - ks * w1
    a2 = -v1 - ks * u2
    if mu > 0.0:
        kj = mu / (d_j2 * math.sqrt(d_j2))
        a1 -= kj * u1
        a2 -= kj * u2
    return [v1 + u2, v2 - u1, a1, a2]


def _rhs_mollified(t, y, params):
    u1, u2, v1, v2 = y
    mu = params.mu
    w1 = u1 + 1.0
    d_s2 = w1 * w1 + u2 * u2
    ks = (1.0 - mu) / (d_s2 * math.sqrt(d_s2))
    a1 = v2 + (1.0 - mu) - ks * w1
    a2 = -v1 - ks * u2
    if mu > 0.0:
        d = math.hypot(u1, u2)
        if d > 0.0:
            # -dH/du = mu * g1hat'(d) * u/d
            k = mu * _mollified_g1_prime(d, params) / d
            a1 += k * u1
            a2 += k * u2
    return [v1 + u2, v2 - u1, a1, a2]


def vector_field(s: JupiterCenteredState, mu: float) -> np.ndarray:
    """(du/dt, dv/dt) = (dH/dv, -dH/du) for the Jupiter-centred Hamiltonian."""
    u = s.u
    if (mu > 0.0 and u[0] == 0.0 and u[1] == 0.0) or (u[0] == -1.0 and u[1] == 0.0):
        raise SingularityError("vector field evaluated at a primary")
    return np.array(_rhs(0.0, s.as_array(), mu))


def mollified_vector_field(s: JupiterCenteredState, params: ModelParams) -> np.ndarray:
    return np.array(_rhs_mollified(0.0, s.as_array(), params))


# ---------------------------------------------------------------------------
# Regions


class RegionLabel(enum.Enum):
    R1 = "R1"
    R2 = "R2"
    R3 = "R3"


def classify_region(u, params: ModelParams) -> RegionLabel:
    """Far region R1, transition region R2, collision region R3 by |u|.
    Boundary points get the inner label."""
    d = math.hypot(u[0], u[1])
    if d <= params.r3_radius:
        return RegionLabel.R3
    if d <= params.r2_radius:
        return RegionLabel.R2
    return RegionLabel.R1


# ---------------------------------------------------------------------------
# Integration


@dataclass(frozen=True)
class Event:
    t: float
    kind: str
    state: np.ndarray


@dataclass
class Trajectory:
    """Samples ``t`` (increasing in the direction of integration) and
    ``y`` with rows [u1, u2, v1, v2]."""

    t: np.ndarray
    y: np.ndarray
    events: list = field(default_factory=list)
    status: str = "done"
    closest_approach: float = math.inf

    @property
    def final(self) -> JupiterCenteredState:
        return JupiterCenteredState.from_array(self.y[-1])

    def states(self):
        return [JupiterCenteredState.from_array(row) for row in self.y]

    def events_of(self, kind: str) -> list:
        return [e for e in self.events if e.kind == kind]

    def jacobi(self, mu: float) -> np.ndarray:
        return np.array([jacobi_constant(s, mu) for s in self.states()])


ALL_EVENTS = ("enter_R2", "exit_R2", "enter_R3", "exit_R3", "collision", "min_distance")


def _make_events(kinds, params: ModelParams, stop_at, section_g0):
    fns, names = [], []
    r2sq = params.r2_radius ** 2
    r3sq = params.r3_radius ** 2
    eps = params.collision_epsilon

    def add(name, fn, direction):
        fn.direction = direction
        fn.terminal = name in stop_at
        fns.append(fn)
        names.append(name)

    for kind in kinds:
        if kind == "enter_R2":
            add(kind, lambda t, y: y[0] * y[0] + y[1] * y[1] - r2sq, -1)
        elif kind == "exit_R2":
            add(kind, lambda t, y: y[0] * y[0] + y[1] * y[1] - r2sq, 1)
        elif kind == "enter_R3":
            add(kind, lambda t, y: y[0] * y[0] + y[1] * y[1] - r3sq, -1)
        elif kind == "exit_R3":
            add(kind, lambda t, y: y[0] * y[0] + y[1] * y[1] - r3sq, 1)
        elif kind == "collision":
            fn = lambda t, y: math.hypot(y[0], y[1]) - eps  # noqa: E731
            fn.direction = -1
            fn.terminal = True
            fns.append(fn)
            names.append(kind)
        elif kind == "min_distance":
            # u . du/dt = u . v crosses zero upward at a local minimum of |u|
            add(kind, lambda t, y: y[0] * y[2] + y[1] * y[3], 1)
        elif kind == "section":
            if section_g0 is None:
                raise DomainError("section event needs section_g0")
            add(kind, lambda t, y: math.sin(_g_of(y, params.mu) - section_g0), -1)
        else:
            raise DomainError(f"unknown event kind {kind!r}")
    return fns, names


def _g_of(y, mu) -> float:
    try:
        return jupiter_to_delaunay(JupiterCenteredState.from_array(y), mu).g
    except (DomainError, ArithmeticError):
        return math.nan


def integrate(
    s0: JupiterCenteredState,
    t_span: tuple[float, float],
    params: ModelParams,
    *,
    rtol: float = 1e-12,
    atol: float = 1e-12,
    events: Iterable[str] = ("collision",),
    stop_at: Sequence[str] = (),
    section_g0: float | None = None,
    mollified: bool = False,
    t_eval: np.ndarray | None = None,
    max_step: float = math.inf,
) -> Trajectory:
    """Adaptive DOP853 integration in the Jupiter-centred chart.

    ``events`` selects detectors among ALL_EVENTS plus "section" (downward
    crossing of the perihelion argument through ``section_g0``). Kinds in
    ``stop_at`` terminate the run; "collision" always does. On step-size
    failure the run stops with status "failed" and the closest approach
    seen so far.
    """
    y0 = np.asarray(s0.as_array(), dtype=float)
    kinds = tuple(events)
    stop_at = set(stop_at)
    if mollified:
        fun = lambda t, y: _rhs_mollified(t, y, params)  # noqa: E731
        kinds = tuple(k for k in kinds if k != "collision")
    else:
        fun = lambda t, y: _rhs(t, y, params.mu)  # noqa: E731
        if params.mu > 0.0 and math.hypot(y0[0], y0[1]) == 0.0:
            raise SingularityError("initial state at Jupiter")
    if params.mu == 0.0:
        kinds = tuple(k for k in kinds if k in ("section", "min_distance"))
    fns, names = _make_events(kinds, params, stop_at, section_g0)
    sol = solve_ivp(fun, t_span, y0, method="DOP853", rtol=rtol, atol=atol,
                    events=fns or None, t_eval=t_eval, max_step=max_step)
    evs = []
    if fns:
        for name, ts, ys in zip(names, sol.t_events, sol.y_events):
            for te, ye in zip(ts, ys):
                evs.append(Event(float(te), name, np.array(ye)))
    forward = t_span[1] >= t_span[0]
    evs.sort(key=lambda e: e.t if forward else -e.t)
    closest = float(np.min(np.hypot(sol.y[0], sol.y[1]))) if sol.y.size else math.inf
    for e in evs:
        closest = min(closest, math.hypot(e.state[0], e.state[1]))
    if sol.status == -1:
        status = "failed"
    elif sol.status == 1:
        status = "collision" if any(e.kind == "collision" for e in evs) else "stopped"
    else:
        status = "done"
    return Trajectory(sol.t, sol.y.T.copy(), evs, status, closest)


# 2-stage Gauss-Legendre (order 4, symplectic) coefficients
_SQ3 = math.sqrt(3.0)
_GL_A = np.array([[0.25, 0.25 - _SQ3 / 6.0], [0.25 + _SQ3 / 6.0, 0.25]])
_GL_B = np.array([0.5, 0.5])


def integrate_symplectic(
    s0: JupiterCenteredState, t_final: float, dt: float, mu: float,
    *, tol: float = 1e-15, max_iter: int = 50,
) -> Trajectory:
    """Fixed-step implicit Gauss-Legendre integration (order 4, symplectic).

    Stage equations are solved by fixed-point iteration. Intended for
    long-time energy drift studies.
    """
    n = max(1, int(math.ceil(abs(t_final) / dt)))
    h = t_final / n
    y = np.asarray(s0.as_array(), dtype=float)
    ts = np.empty(n + 1)
    ys = np.empty((n + 1, 4))
    ts[0], ys[0] = 0.0, y
    f = lambda yy: np.array(_rhs(0.0, yy, mu))  # noqa: E731
    for i in range(n):
        k = np.vstack([f(y), f(y)])
        for _ in range(max_iter):
            k_new = np.vstack([f(y + h * (_GL_A[j] @ k)) for j in range(2)])
            delta = np.max(np.abs(k_new - k))
            k = k_new
            if delta <= tol * (1.0 + np.max(np.abs(k))):
                break
        y = y + h * (_GL_B @ k)
        ts[i + 1], ys[i + 1] = (i + 1) * h, y
    return Trajectory(ts, ys, [], "done", float(np.min(np.hypot(ys[:, 0], ys[:, 1]))))


# ---------------------------------------------------------------------------
# Linear transition model


def ham_lin(s: JupiterCenteredState) -> float:
    """Kinetic part |v|^2/2 - u^T J v that drives the motion in the
    transition region to first order."""
    u1, u2 = s.u
    v1, v2 = s.v
    return 0.5 * (v1 * v1 + v2 * v2) - _cross(u1, u2, v1, v2)


def _rot(t: float) -> np.ndarray:
    c, s = math.cos(t), math.sin(t)
    return np.array([[c, s], [-s, c]])


def flow_lin(s0: JupiterCenteredState, t: float) -> JupiterCenteredState:
    """Closed-form flow of ham_lin: v(t) = Rot(t) v0, u(t) = Rot(t)(u0 + t v0)."""
    rot = _rot(t)
    return JupiterCenteredState(rot @ (s0.u + t * s0.v), rot @ s0.v)


def rhs_lin(t, y):
    u1, u2, v1, v2 = y
    return [v1 + u2, v2 - u1, v2, -v1]


# ---------------------------------------------------------------------------
# Poincare section map


def lift_G(h: float, ell: float, g: float, L: float, params: ModelParams) -> float:
    """Angular momentum G with mollified_ham(ell, g, L, G) = h.

    Started from the unperturbed solution G0 = -1/(2L^2) - h and bracketed
    in a window of width 0.2 inside (-L, L).
    """
    G0 = -0.5 / (L * L) - h
    if not 0.0 < abs(G0) < L:
        raise DomainError(f"no valid G for h={h}, L={L}")

    def f(G):
        return mollified_ham(delaunay_to_polar(DelaunayState(ell, g, L, G)), params) - h

    if params.mu == 0.0:
        return G0
    width = 0.1
    lo = G0 - width
    hi = G0 + width
    if G0 > 0.0:
        lo, hi = max(lo, 1e-9), min(hi, L * (1.0 - 1e-12))
    else:
        lo, hi = max(lo, -L * (1.0 - 1e-12)), min(hi, -1e-9)
    try:
        flo, fhi = f(lo), f(hi)
    except (DomainError, ArithmeticError) as exc:
        raise DomainError(f"lift failed: {exc}") from exc
    if flo * fhi > 0.0:
        raise DomainError(f"G not bracketed for h={h}, L={L}")
    return brentq(f, lo, hi, xtol=1e-15, rtol=1e-15)


def poincare_map(
    h: float, g0: float, p: tuple[float, float], params: ModelParams,
    *, rtol: float = 1e-12, atol: float = 1e-12,
) -> tuple[float, float]:
    """First return (ell', L') to the section {g = g0} on the energy level
    {mollified H = h}.

    Since dg/dt = -1 + O(mu), the section is crossed downward once per
    time ~2*pi. For mu = 0 the map is ell' = ell + 2*pi/L^3 exactly, which
    is the twist ell - 2*pi*omega(L) read modulo 2*pi.
    """
    ell, L = p
    if not -1.5 < h < math.sqrt(2.0):
        raise DomainError(f"energy {h} outside (-3/2, sqrt 2)")
    G = lift_G(h, ell, g0, L, params)
    if params.mu == 0.0:
        return (ell + TWO_PI / L ** 3) % TWO_PI, L
    s0 = delaunay_to_jupiter(DelaunayState(ell, g0, L, G), params.mu)
    # leave the section before arming the detector
    first = integrate(s0, (0.0, math.pi), params, mollified=True, events=(),
                      rtol=rtol, atol=atol)
    second = integrate(first.final, (math.pi, 3.0 * math.pi), params, mollified=True,
                       events=("section",), stop_at=("section",), section_g0=g0,
                       rtol=rtol, atol=atol)
    hits = second.events_of("section")
    if not hits:
        raise IntegrationError("no return to the section")
    d = jupiter_to_delaunay(JupiterCenteredState.from_array(hits[0].state), params.mu)
    return d.ell, d.L


def poincare_jacobian(
    h: float, g0: float, p: tuple[float, float], params: ModelParams, step: float = 1e-6,
) -> np.ndarray:
    """Central finite-difference Jacobian of poincare_map in (ell, L)."""
    jac = np.empty((2, 2))
    for j in range(2):
        dp = [0.0, 0.0]
        dp[j] = step
        plus = poincare_map(h, g0, (p[0] + dp[0], p[1] + dp[1]), params)
        minus = poincare_map(h, g0, (p[0] - dp[0], p[1] - dp[1]), params)
        dl = (plus[0] - minus[0] + math.pi) % TWO_PI - math.pi
        jac[0, j] = dl / (2 * step)
        jac[1, j] = (plus[1] - minus[1]) / (2 * step)
    return jac

