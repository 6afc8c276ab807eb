"""Collision-region machinery near Jupiter.

Positions are blown up by u = sqrt(mu) * u_tilde (time by the same factor),
then regularised by the Levi-Civita map u_tilde = 2 z^2, v = w / (xi conj z),
where 1/(2 xi^2) is the scaled energy. On the zero level of

    K = xi^2 |z|^2 (H_tilde - 1/(2 xi^2))

the Hamiltonian flow of K is a reparametrisation of the physical flow with
dt/dsigma = 4 xi sqrt(mu) |z|^2, and it is regular through z = 0.

In real coordinates z = a + ib, w = c + id the exact regular form is

    K = |w|^2/2 - |z|^2/2 - sqrt(mu) xi^2/2
        - 2 sqrt(mu) xi |z|^2 (a d - b c) + xi^2 |z|^2 P(sqrt(mu) 2 z^2),
    P(u) = (1 - mu)(1 - u1 - 1/|u + e1|),

and K0 = |w|^2/2 - |z|^2/2 - sqrt(mu) xi^2/2 is its quadratic saddle part.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import DomainError, IntegrationError, SingularityError
from .kepler import JupiterCenteredState

ENERGY_WINDOW = (0.0, math.sqrt(2.0) + 1.5)
SHELL_TOL = 1e-10


@dataclass(frozen=True)
class ScaledState:
    """Blown-up position u_tilde = u / sqrt(mu), velocity v and scaled time
    ``sigma`` (physical time / sqrt(mu))."""

    u_tilde: np.ndarray
    v: np.ndarray
    sigma: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "u_tilde", np.asarray(self.u_tilde, dtype=float).reshape(2))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float).reshape(2))


@dataclass(frozen=True)
class LCState:
    z: complex
    w: complex
    xi: float

    def __post_init__(self):
        if not self.xi > 0.0:
            raise DomainError(f"xi must be positive, got {self.xi}")
        object.__setattr__(self, "z", complex(self.z))
        object.__setattr__(self, "w", complex(self.w))

    def as_array(self) -> np.ndarray:
        return np.array([self.z.real, self.z.imag, self.w.real, self.w.imag])


@dataclass(frozen=True)
class CollisionManifoldPoint:
    psi: float
    u: np.ndarray
    v: np.ndarray
    sigma: float  # fictitious time from the point to the collision
    t: float  # physical time from the point to the collision


def _c(vec) -> complex:
    return complex(vec[0], vec[1])


def _vec(c: complex) -> np.ndarray:
    return np.array([c.real, c.imag])


# ---------------------------------------------------------------------------
# Scaling and energy


def scale_to_local(s: JupiterCenteredState, mu: float, t: float = 0.0) -> ScaledState:
    rt = math.sqrt(mu)
    return ScaledState(s.u / rt, s.v, t / rt)


def scale_from_local(s: ScaledState, mu: float) -> tuple[JupiterCenteredState, float]:
    """Inverse of scale_to_local; also returns the physical time."""
    rt = math.sqrt(mu)
    return JupiterCenteredState(s.u_tilde * rt, s.v), s.sigma * rt


def energy_shift(mu: float) -> float:
    """Constant added to the Jupiter-centred energy to get the scaled one."""
    return 0.5 * (1.0 - mu) * (3.0 - mu)


def _P(u1: float, u2: float, mu: float) -> float:
    # 1 - 1/|u + e1| via expm1/log1p to keep the O(|u|) digits
    s = 2.0 * u1 + u1 * u1 + u2 * u2
    return (1.0 - mu) * (-math.expm1(-0.5 * math.log1p(s)) - u1)


def _grad_P(u1: float, u2: float, mu: float) -> tuple[float, float]:
    w1 = u1 + 1.0
    d2 = w1 * w1 + u2 * u2
    inv3 = 1.0 / (d2 * math.sqrt(d2))
    return (1.0 - mu) * (w1 * inv3 - 1.0), (1.0 - mu) * u2 * inv3


def scaled_hamiltonian(s: ScaledState, mu: float) -> float:
    """|v|^2/2 - sqrt(mu)/|u_t| - sqrt(mu) u_t^T J v + P(sqrt(mu) u_t)."""
    rt = math.sqrt(mu)
    x1, x2 = s.u_tilde
    v1, v2 = s.v
    r = math.hypot(x1, x2)
    if r == 0.0:
        raise SingularityError("scaled Hamiltonian at Jupiter")
    return (0.5 * (v1 * v1 + v2 * v2) - rt / r - rt * (x1 * v2 - x2 * v1)
            + _P(rt * x1, rt * x2, mu))


def xi_from_energy(h_physical: float, mu: float) -> float:
    """Energy scale xi with scaled energy 1/(2 xi^2), from the value of the
    Jupiter-centred Hamiltonian."""
    ht = h_physical + energy_shift(mu)
    if not ENERGY_WINDOW[0] < ht < ENERGY_WINDOW[1]:
        raise DomainError(f"scaled energy {ht} outside {ENERGY_WINDOW}")
    return 1.0 / math.sqrt(2.0 * ht)


# ---------------------------------------------------------------------------
# Levi-Civita map


def lc_forward(s: ScaledState, xi: float) -> LCState:
    """Principal square root z = sqrt(u_t/2), w = xi conj(z) v."""
    z = cmath.sqrt(_c(s.u_tilde) / 2.0)
    return LCState(z, xi * z.conjugate() * _c(s.v), xi)


def lc_inverse(s: LCState, sigma: float = 0.0) -> ScaledState:
    if s.z == 0:
        raise SingularityError("velocity undefined at the collision point z = 0")
    u = 2.0 * s.z * s.z
    v = s.w / (s.xi * s.z.conjugate())
    return ScaledState(_vec(u), _vec(v), sigma)


def jupiter_to_lc(s: JupiterCenteredState, mu: float, xi: float | None = None) -> LCState:
    """Physical state to (z, w); xi defaults to the state's own energy."""
    from .dynamics import ham_jupiter

    if xi is None:
        xi = xi_from_energy(ham_jupiter(s, mu), mu)
    return lc_forward(scale_to_local(s, mu), xi)


def lc_to_jupiter(s: LCState, mu: float) -> JupiterCenteredState:
    return scale_from_local(lc_inverse(s), mu)[0]


def lc_position(z: complex, mu: float) -> np.ndarray:
    """Physical position u = sqrt(mu) 2 z^2 (defined at z = 0 too)."""
    return _vec(math.sqrt(mu) * 2.0 * z * z)


# ---------------------------------------------------------------------------
# Regularised Hamiltonians


def K0(s: LCState, mu: float) -> float:
    return 0.5 * (abs(s.w) ** 2 - abs(s.z) ** 2) - 0.5 * math.sqrt(mu) * s.xi ** 2


def K_rho_exact(s: LCState, mu: float) -> float:
    """Regular closed form of K, exact for all z (used for integration)."""
    rt = math.sqrt(mu)
    xi = s.xi
    a, b, c, d = s.as_array()
    z2 = a * a + b * b
    zsq = s.z * s.z
    pu1, pu2 = 2.0 * rt * zsq.real, 2.0 * rt * zsq.imag
    return (0.5 * (c * c + d * d - z2) - 0.5 * rt * xi * xi
            - 2.0 * rt * xi * z2 * (a * d - b * c) + xi * xi * z2 * _P(pu1, pu2, mu))


def K_rho_definition(s: LCState, mu: float) -> float:
    """xi^2 |z|^2 (H_tilde - 1/(2 xi^2)) evaluated through lc_inverse and the
    Jupiter-centred Hamiltonian; needs z != 0."""
    from .dynamics import ham_jupiter

    phys, _ = scale_from_local(lc_inverse(s), mu)
    ht = ham_jupiter(phys, mu) + energy_shift(mu)
    return s.xi ** 2 * abs(s.z) ** 2 * (ht - 0.5 / s.xi ** 2)


def K_rho(s: LCState, mu: float) -> float:
    """Truncated expansion: K0 plus the Coriolis coupling plus the leading
    tidal term of order |z|^6. Omitted terms are O(mu^{3/2} |z|^8)."""
    rt = math.sqrt(mu)
    xi = s.xi
    z, w = s.z, s.w
    z2 = abs(z) ** 2
    coriolis = -2.0 * rt * xi * z2 * (z.conjugate() * w).imag
    z4 = z ** 4
    tidal = -0.5 * (1.0 - mu) * mu * xi ** 2 * (2.0 * z2 ** 3 + 3.0 * z2 * 2.0 * z4.real)
    return K0(s, mu) + coriolis + tidal


def _rhs_K(sig, y, rt, xi, mu):
    a, b, c, d, _t = y
    z2 = a * a + b * b
    cross = a * d - b * c
    k = 2.0 * rt * xi
    # u = sqrt(mu) 2 z^2
    u1 = 2.0 * rt * (a * a - b * b)
    u2 = 4.0 * rt * a * b
    P = _P(u1, u2, mu)
    gp1, gp2 = _grad_P(u1, u2, mu)
    x2 = xi * xi
    dK_dc = c + k * z2 * b
    dK_dd = d - k * z2 * a
    dK_da = (-a - k * (2.0 * a * cross + z2 * d)
             + x2 * (2.0 * a * P + z2 * 4.0 * rt * (gp1 * a + gp2 * b)))
    dK_db = (-b - k * (2.0 * b * cross - z2 * c)
             + x2 * (2.0 * b * P + z2 * 4.0 * rt * (-gp1 * b + gp2 * a)))
    return [dK_dc, dK_dd, -dK_da, -dK_db, 4.0 * xi * rt * z2]


def _rhs_K0(sig, y, rt, xi, mu):
    a, b, c, d, _t = y
    return [c, d, a, b, 4.0 * xi * rt * (a * a + b * b)]


def k0_linearization() -> np.ndarray:
    """Matrix of the linear K0 flow on (a, b, c, d)."""
    return np.array([[0, 0, 1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, 1, 0, 0]], dtype=float)


def k0_flow(s0: LCState, sigma: float) -> LCState:
    """Closed-form K0 flow: z'' = z, w = z'."""
    ch, sh = math.cosh(sigma), math.sinh(sigma)
    return LCState(s0.z * ch + s0.w * sh, s0.z * sh + s0.w * ch, s0.xi)


@dataclass
class RegularizedTrajectory:
    """Samples in fictitious time ``sigma`` with rows [a, b, c, d, t]."""

    sigma: np.ndarray
    y: np.ndarray
    xi: float
    mu: float
    events: dict = field(default_factory=dict)
    sol: object = None

    def lc_state(self, i: int) -> LCState:
        a, b, c, d, _ = self.y[i]
        return LCState(complex(a, b), complex(c, d), self.xi)

    @property
    def final(self) -> LCState:
        return self.lc_state(-1)

    @property
    def t(self) -> np.ndarray:
        return self.y[:, 4]

    def physical(self) -> tuple[np.ndarray, np.ndarray]:
        """Physical positions and velocities; velocity is NaN where z = 0."""
        rt = math.sqrt(self.mu)
        z = self.y[:, 0] + 1j * self.y[:, 1]
        w = self.y[:, 2] + 1j * self.y[:, 3]
        u = rt * 2.0 * z * z
        with np.errstate(divide="ignore", invalid="ignore"):
            v = w / (self.xi * np.conj(z))
        return (np.column_stack([u.real, u.imag]), np.column_stack([v.real, v.imag]))


def integrate_regularized(
    s0: LCState,
    sigma_span: tuple[float, float],
    mu: float,
    *,
    model: str = "full",
    rtol: float = 1e-12,
    atol: float = 1e-13,
    stop_radius: float | None = None,
    t0: float = 0.0,
    dense_output: bool = False,
    sigma_eval: np.ndarray | None = None,
    check_shell: bool = True,
) -> RegularizedTrajectory:
    """Integrate Hamilton's equations of K (model "full") or K0 ("quadratic")
    in fictitious time, carrying physical time as a fifth component.

    ``stop_radius`` stops the run when |z| grows through that value. Events
    "min_z" (local minima of |z|) are always recorded.
    """
    if model == "full":
        fun, energy = _rhs_K, K_rho_exact
    elif model == "quadratic":
        fun, energy = _rhs_K0, K0
    else:
        raise DomainError(f"unknown model {model!r}")
    if check_shell:
        k = energy(s0, mu)
        if abs(k) > SHELL_TOL:
            raise DomainError(f"initial state off the zero energy shell (K = {k:.3e})")
    rt = math.sqrt(mu)
    args = (rt, s0.xi, mu)
    # d|z|^2/dsigma = 2 (a c + b d) + O(sqrt mu); its sign flip marks a minimum
    min_z = lambda s, y, *a: y[0] * y[2] + y[1] * y[3]  # noqa: E731
    forward = sigma_span[1] >= sigma_span[0]
    min_z.direction = 1 if forward else -1
    min_z.terminal = False
    evs = [min_z]
    if stop_radius is not None:
        r2 = stop_radius ** 2
        exit_fn = lambda s, y, *a: y[0] * y[0] + y[1] * y[1] - r2  # noqa: E731
        # solve_ivp reads directions along the integration, not in sigma
        exit_fn.direction = 1
        exit_fn.terminal = True
        evs.append(exit_fn)
    y0 = np.append(s0.as_array(), t0)
    sol = solve_ivp(fun, sigma_span, y0, method="DOP853", rtol=rtol, atol=atol,
                    args=args, events=evs, dense_output=dense_output, t_eval=sigma_eval)
    if sol.status == -1:
        raise IntegrationError(sol.message)
    events = {"min_z": list(zip(sol.t_events[0], sol.y_events[0]))}
    if stop_radius is not None:
        events["exit"] = list(zip(sol.t_events[1], sol.y_events[1]))
    return RegularizedTrajectory(sol.t, sol.y.T.copy(), s0.xi, mu, events,
                                 sol if dense_output else None)


def collision_data(psi: float, mu: float, xi: float) -> LCState:
    """State at the collision: z = 0, w = mu^{1/4} xi e^{i psi}, so K = 0."""
    return LCState(0.0, mu ** 0.25 * xi * cmath.exp(1j * psi), xi)


def k0_exit_time(mu: float, rho: float, xi: float) -> float:
    """Fictitious time for the K0 flow from collision data to |u_t| = rho."""
    return math.asinh(math.sqrt(rho / 2.0) / (mu ** 0.25 * xi))


def collision_manifold(psi: float, mu: float, rho: float, xi: float,
                       *, model: str = "full") -> CollisionManifoldPoint:
    """Point on |u| = rho sqrt(mu) whose forward orbit hits Jupiter, reached by
    flowing the collision data backward until |u_t| = rho."""
    s0 = collision_data(psi, mu, xi)
    horizon = 3.0 * k0_exit_time(mu, rho, xi) + 5.0
    tr = integrate_regularized(s0, (0.0, -horizon), mu, model=model,
                               stop_radius=math.sqrt(rho / 2.0))
    if not tr.events.get("exit"):
        raise IntegrationError("backward orbit did not leave the collision region")
    sig, y = tr.events["exit"][0]
    st = LCState(complex(y[0], y[1]), complex(y[2], y[3]), xi)
    phys = lc_to_jupiter(st, mu)
    return CollisionManifoldPoint(psi, phys.u, phys.v, -float(sig), -float(y[4]))


def hyperbolic_deviation(psi: float, mu: float, rho: float, xi: float) -> tuple[float, float]:
    """Differences between the full and the quadratic flow run backward from
    the same collision data to |u_t| = rho: exit time in sigma, and the
    angle arg v - arg u at the exit."""
    out = []
    for model in ("full", "quadratic"):
        pt = collision_manifold(psi, mu, rho, xi, model=model)
        out.append((pt.sigma, math.atan2(pt.v[1], pt.v[0]) - math.atan2(pt.u[1], pt.u[0])))
    (s_full, a_full), (s_quad, a_quad) = out
    return abs(s_full - s_quad), abs(math.remainder(a_full - a_quad, 2.0 * math.pi))


def collision_manifold_angle_map(mu: float, rho: float, xi: float, n: int = 64):
    """Sample psi in [0, pi) and return arrays (psi, arg u, arg v) with the
    angles unwrapped along psi."""
    psis = np.linspace(0.0, math.pi, n, endpoint=False)
    au, av = [], []
    for p in psis:
        pt = collision_manifold(p, mu, rho, xi)
        au.append(math.atan2(pt.u[1], pt.u[0]))
        av.append(math.atan2(pt.v[1], pt.v[0]))
    return psis, np.unwrap(au), np.unwrap(av)


def psi_for_position_angle(theta: float, mu: float, rho: float, xi: float,
                           psi_guess: float, width: float = 0.3) -> float:
    """Solve arg u(psi) = theta (mod 2 pi) near ``psi_guess``; arg u turns
    about twice as fast as psi."""

    def f(p):
        pt = collision_manifold(p, mu, rho, xi)
        return math.remainder(math.atan2(pt.u[1], pt.u[0]) - theta, 2.0 * math.pi)

    lo, hi = psi_guess - width, psi_guess + width
    flo, fhi = f(lo), f(hi)
    if flo * fhi > 0.0:
        raise DomainError("position angle not bracketed on the collision manifold")
    return brentq(f, lo, hi, xtol=1e-14)


def splice_deviation(s: JupiterCenteredState, mu: float, rho: float, n: int = 40) -> float:
    """Largest relative difference in (u, v) between direct integration of
    the Jupiter-centred flow and the regularised flow mapped back, sampled
    while the orbit stays in the annulus rho sqrt(mu) <= |u| <= 2 rho sqrt(mu)."""
    from .dynamics import _rhs

    inner, outer = rho * math.sqrt(mu), 2.0 * rho * math.sqrt(mu)
    speed = float(np.hypot(*s.v))
    t_end = 4.0 * outer / speed
    ts = np.linspace(0.0, t_end, 4 * n + 1)
    direct = solve_ivp(_rhs, (0.0, t_end), s.as_array(), method="DOP853", rtol=1e-13,
                       atol=1e-15, t_eval=ts, args=(mu,))
    r = np.hypot(direct.y[0], direct.y[1])
    inside = (r >= inner * (1 - 1e-12)) & (r <= outer * (1 + 1e-12))
    stop = np.argmin(inside) if not inside.all() else inside.size
    keep = np.arange(stop)[:: max(1, stop // n)]
    if keep.size < 2:
        raise DomainError("orbit does not stay in the annulus")
    lc = jupiter_to_lc(s, mu)
    span = t_end / (2.0 * lc.xi * inner)
    for _ in range(8):
        tr = integrate_regularized(lc, (0.0, span), mu, rtol=1e-13, atol=1e-15, dense_output=True)
        if tr.t[-1] >= ts[keep[-1]]:
            break
        span *= 2.0
    else:
        raise IntegrationError("regularised flow did not reach the sample times")
    worst = 0.0
    for k in keep:
        tk = ts[k]
        sig = tk if tk == 0.0 else brentq(lambda x: tr.sol.sol(x)[4] - tk, 0.0, tr.sigma[-1],
                                           xtol=1e-15, rtol=1e-15)
        a, b, c, d, _ = tr.sol.sol(sig)
        phys = lc_to_jupiter(LCState(complex(a, b), complex(c, d), lc.xi), mu).as_array()
        ref = direct.y[:, k]
        worst = max(worst, float(np.linalg.norm(phys - ref) / np.linalg.norm(ref)))
    return worst


def pass_through_exponent(s0: LCState, mu: float, sigma_max: float,
                          offsets=np.logspace(-4, -2, 12)) -> float:
    """Integrate through the closest approach to z = 0 and fit the local
    power law |u_t| ~ |sigma - sigma_0|^p on both sides of it."""
    tr = integrate_regularized(s0, (0.0, sigma_max), mu, dense_output=True)
    hits = tr.events["min_z"]
    if not hits:
        raise DomainError("no closest approach within the span")
    sig0 = float(hits[0][0])
    xs, ys = [], []
    for off in offsets:
        for sgn in (-1.0, 1.0):
            a, b = tr.sol.sol(sig0 + sgn * off)[:2]
            xs.append(math.log(off))
            ys.append(math.log(2.0 * (a * a + b * b)))
    return float(np.polyfit(xs, ys, 1)[0])


# ---------------------------------------------------------------------------
# Diagonal coordinates of the saddle


def diagonalize(s: LCState) -> tuple[complex, complex]:
    r2 = math.sqrt(2.0)
    return (s.z + s.w) / r2, (s.z - s.w) / r2


def undiagonalize(X: complex, Y: complex, xi: float) -> LCState:
    r2 = math.sqrt(2.0)
    return LCState((X + Y) / r2, (X - Y) / r2, xi)


def K0_diagonal(X: complex, Y: complex, mu: float, xi: float) -> float:
    """K0 in the saddle coordinates: -(X1 Y1 + X2 Y2) - sqrt(mu) xi^2/2."""
    return -(X.real * Y.real + X.imag * Y.imag) - 0.5 * math.sqrt(mu) * xi * xi
