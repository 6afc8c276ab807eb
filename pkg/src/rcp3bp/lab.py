"""Experiments: collision shooting, transition-region segment evolution,
density scans over mu and the recurrence construction."""

from __future__ import annotations

import configparser
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq
from scipy.stats import linregress

from . import diophantine as dio
from .collision_geometry import (
    BRANCHES,
    VDeltaParams,
    collision_point,
    in_V_delta,
)
from .dynamics import (
    ModelParams,
    flow_lin,
    ham_jupiter,
    integrate,
    rhs_lin,
)
from .errors import DomainError, IntegrationError
from .kepler import (
    TWO_PI,
    DelaunayState,
    JupiterCenteredState,
    angle_diff,
    delaunay_to_jupiter,
    jupiter_to_delaunay,
)
from .levi_civita import (
    collision_manifold,
    integrate_regularized,
    jupiter_to_lc,
    k0_exit_time,
    xi_from_energy,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExperimentConfig:
    mu: float = 1e-4
    tau: float = 3.0 / 20.0
    rho: float = 10.0
    delta: float = 0.1
    varpi: float = 0.2
    gamma: float | None = None
    C_ball: float = 1.0
    rtol: float = 1e-12
    atol: float = 1e-12
    grid_n: int = 41
    width_factor: float = 3.0
    psi_grid: int = 48
    max_attempts: int = 3
    max_candidates: int = 4
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.varpi < math.pi / 2:
            raise DomainError("varpi must lie in (0, pi/2)")
        self.model  # validates region nesting

    @property
    def model(self) -> ModelParams:
        return ModelParams(self.mu, self.tau, self.rho, self.C_ball)

    @property
    def gamma_value(self) -> float:
        return self.gamma if self.gamma is not None else self.C_ball * self.mu ** 0.05

    @property
    def ball_turns(self) -> float:
        """Ball constant expressed in turns of the mean anomaly."""
        return self.C_ball / TWO_PI

    def with_mu(self, mu: float) -> "ExperimentConfig":
        return replace(self, mu=mu)


def load_config(path: str | Path, **overrides) -> ExperimentConfig:
    """Read ``key = value`` lines (``#`` comments allowed), then apply
    non-None overrides."""
    parser = configparser.ConfigParser()
    parser.read_string("[config]\n" + Path(path).read_text())
    kinds = {f.name: f.type for f in fields(ExperimentConfig)}
    values = {}
    for key, raw in parser["config"].items():
        if key not in kinds:
            raise DomainError(f"unknown config key {key!r}")
        values[key] = _parse_value(kinds[key], raw)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)


def _parse_value(kind, raw: str):
    kind = str(kind)
    if "int" in kind:
        return int(raw)
    if raw.strip().lower() in ("none", ""):
        return None
    return float(raw)


def sample_probes(n: int, config: ExperimentConfig, min_jupiter_distance: float = 0.5):
    """Deterministic probes in V_delta (uniform angles, L in [0.8, 1.3]) whose
    position is well away from Jupiter."""
    rng = np.random.default_rng(config.seed)
    p = VDeltaParams(config.delta)
    out = []
    while len(out) < n:
        L = rng.uniform(0.8, 1.3)
        G = rng.uniform(p.delta, L - p.delta)
        ell, g = rng.uniform(0.0, TWO_PI, size=2)
        s = DelaunayState(ell, g, L, G)
        if not in_V_delta(s, p):
            continue
        u = delaunay_to_jupiter(s, config.mu).u
        if math.hypot(*u) < min_jupiter_distance:
            continue
        out.append(s)
    return out


def delaunay_distance(a: DelaunayState, b: DelaunayState) -> float:
    return math.sqrt(angle_diff(a.ell, b.ell) ** 2 + angle_diff(a.g, b.g) ** 2
                     + (a.L - b.L) ** 2 + (a.G - b.G) ** 2)


# ---------------------------------------------------------------------------
# Collision manifold as a curve in the (arg u, arg v) plane


class UpsilonCurve:
    """Incoming collision states on |u| = rho sqrt(mu) at fixed energy,
    seen as arg v = arg u + f(arg u) with f periodic (f is close to -pi)."""

    def __init__(self, mu: float, rho: float, xi: float, n: int = 48):
        self.mu, self.rho, self.xi = mu, rho, xi
        psis = np.linspace(0.0, math.pi, n, endpoint=False)
        th, al = [], []
        for p in psis:
            pt = collision_manifold(p, mu, rho, xi)
            th.append(math.atan2(pt.u[1], pt.u[0]))
            al.append(math.atan2(pt.v[1], pt.v[0]))
        th = np.unwrap(th)
        al = np.unwrap(al)
        if th[-1] < th[0]:
            raise IntegrationError("collision manifold position angle is not increasing")
        self.theta0 = th[0]
        theta = np.append(th, th[0] + TWO_PI)
        offset = np.append(al - th, al[0] - th[0])
        psi_ext = np.append(psis, math.pi)
        self._f = CubicSpline(theta, offset, bc_type="periodic")
        self._psi = CubicSpline(theta, psi_ext - theta / 2.0, bc_type="periodic")

    def _reduce(self, theta: float) -> float:
        return self.theta0 + (theta - self.theta0) % TWO_PI

    def offset(self, theta: float) -> float:
        """f(theta) = arg v - arg u on the curve, from the spline."""
        return float(self._f(self._reduce(theta)))

    def psi_guess(self, theta: float) -> float:
        t = self._reduce(theta)
        return float(self._psi(t)) + t / 2.0

    def exact_point(self, theta: float):
        """Curve point with position angle theta, solved over psi."""
        guess = self.psi_guess(theta)

        def f(p):
            pt = collision_manifold(p, self.mu, self.rho, self.xi)
            return math.remainder(math.atan2(pt.u[1], pt.u[0]) - theta, TWO_PI)

        lo, hi = guess - 0.05, guess + 0.05
        if f(lo) * f(hi) > 0.0:
            lo, hi = guess - 0.4, guess + 0.4
        psi = brentq(f, lo, hi, xtol=1e-14)
        return psi, collision_manifold(psi, self.mu, self.rho, self.xi)

    def mismatch(self, u, v, exact: bool = False) -> tuple[float, float | None]:
        """Signed angle arg v - (velocity angle of the curve at arg u) in
        (-pi, pi], plus the matching psi when ``exact``."""
        th = math.atan2(u[1], u[0])
        av = math.atan2(v[1], v[0])
        if exact:
            psi, pt = self.exact_point(th)
            return math.remainder(av - math.atan2(pt.v[1], pt.v[0]), TWO_PI), psi
        return math.remainder(av - th - self.offset(th), TWO_PI), None


# ---------------------------------------------------------------------------
# Shooting


@dataclass
class Arrival:
    s: float
    t_R2: float | None
    state_R2: np.ndarray | None
    t_R3: float
    state_R3: np.ndarray
    closest: float


@dataclass
class ShootResult:
    initial: DelaunayState | None
    min_distance: float
    hit: bool
    t_hit: float
    intersection_psi: float | None
    sign_change: bool = False
    probe: DelaunayState | None = None
    distance_to_probe: float = math.nan
    branch: str = ""
    windings: int = -1
    q_star: int = 0
    scan: list = field(default_factory=list)
    message: str = ""

    def as_record(self) -> dict:
        ini = self.initial
        return {
            "hit": int(self.hit),
            "sign_change": int(self.sign_change),
            "min_distance": self.min_distance,
            "t_hit": self.t_hit,
            "psi": self.intersection_psi if self.intersection_psi is not None else math.nan,
            "ell": ini.ell if ini else math.nan,
            "g": ini.g if ini else math.nan,
            "L": ini.L if ini else math.nan,
            "G": ini.G if ini else math.nan,
            "distance_to_probe": self.distance_to_probe,
            "branch": self.branch,
            "windings": self.windings,
            "q_star": self.q_star,
            "message": self.message,
        }


def lift_on_energy(ell: float, g: float, L: float, h: float, mu: float, G_guess: float) -> float:
    """G with the true Hamiltonian equal to h at (ell, g, L, G)."""

    def f(G):
        return ham_jupiter(delaunay_to_jupiter(DelaunayState(ell, g, L, G), mu), mu) - h

    for width in (0.02, 0.1, 0.3):
        lo = max(G_guess - width, 1e-6 if G_guess > 0 else -L * (1 - 1e-12))
        hi = min(G_guess + width, L * (1 - 1e-12) if G_guess > 0 else -1e-6)
        try:
            flo, fhi = f(lo), f(hi)
        except ArithmeticError:
            continue
        if flo * fhi <= 0.0:
            return brentq(f, lo, hi, xtol=1e-15, rtol=1e-15)
    raise DomainError(f"no G on the energy level h={h} at ell={ell}, g={g}, L={L}")


def collision_candidates(probe: DelaunayState, config: ExperimentConfig):
    """Initial conditions on the probe's torus and section g = g_probe whose
    Kepler orbits reach Jupiter after k <= q* extra turns, nearest first.

    Entries are (distance in ell, ell, flight time, branch, k).
    """
    L, G = probe.L, probe.G
    omega = (1.0 / L ** 3) % 1.0
    thr = 4.0 * config.ball_turns * config.mu ** config.tau
    q_star = dio.find_q_star(omega, thr)
    out = []
    for branch in BRANCHES:
        cp = collision_point(L, G, config.mu, branch)
        t0 = (probe.g - cp.g_col) % TWO_PI
        for k in range(q_star + 1):
            t = t0 + TWO_PI * k
            if t < 1.0:
                continue
            ell = cp.ell_col - t / L ** 3
            out.append((abs(angle_diff(ell, probe.ell)), ell % TWO_PI, t, branch, k))
    out.sort(key=lambda c: c[0])
    return out, q_star


def _arrive(ic: JupiterCenteredState, t_expect: float, config: ExperimentConfig) -> Arrival | None:
    mp = config.model
    tr = integrate(ic, (0.0, t_expect + 3.0), mp, rtol=config.rtol, atol=config.atol,
                   events=("enter_R2", "enter_R3", "min_distance", "collision"),
                   stop_at=("enter_R3",))
    r3 = tr.events_of("enter_R3")
    if not r3 or not (t_expect - 2.0 <= r3[0].t <= t_expect + 3.0):
        return None
    r2 = [e for e in tr.events_of("enter_R2") if e.t <= r3[0].t]
    e2 = r2[-1] if r2 else None
    return Arrival(math.nan, e2.t if e2 else None, e2.state if e2 else None,
                   r3[0].t, r3[0].state, tr.closest_approach)


def _closest(ic: JupiterCenteredState, t_expect: float, config: ExperimentConfig) -> float:
    tr = integrate(ic, (0.0, t_expect + 3.0), config.model, rtol=1e-10, atol=1e-10,
                   events=("min_distance", "collision"))
    near = [math.hypot(e.state[0], e.state[1]) for e in tr.events_of("min_distance")
            if abs(e.t - t_expect) < 3.0]
    return min(near) if near else math.inf


def certify(ic: JupiterCenteredState, t_expect: float, h: float,
            config: ExperimentConfig) -> tuple[float, float]:
    """Fresh direct integration to the collision region, then the
    regularised flow to the closest approach. Returns (min |u|, time)."""
    arr = _arrive(ic, t_expect, config)
    if arr is None:
        return math.inf, math.nan
    mu = config.mu
    xi = xi_from_energy(h, mu)
    s = JupiterCenteredState.from_array(arr.state_R3)
    lc = jupiter_to_lc(s, mu, xi)
    horizon = 3.0 * k0_exit_time(mu, config.rho, xi) + 5.0
    tr = integrate_regularized(lc, (0.0, horizon), mu, stop_radius=math.sqrt(config.rho / 2.0) * 1.01,
                               t0=arr.t_R3, check_shell=False)
    z2 = tr.y[:, 0] ** 2 + tr.y[:, 1] ** 2
    i = int(np.argmin(z2))
    best, t_best = z2[i], tr.y[i, 4]
    for _, y in tr.events["min_z"]:
        zz = y[0] ** 2 + y[1] ** 2
        if zz < best:
            best, t_best = zz, y[4]
    return 2.0 * math.sqrt(mu) * best, float(t_best)


def shoot_collision(probe: DelaunayState, config: ExperimentConfig,
                    upsilon: UpsilonCurve | None = None) -> ShootResult:
    """Find a collision orbit starting near ``probe`` on its energy level.

    Kepler collision candidates on the probe's section, nearest first, seed a
    one-parameter family of initial conditions (shifts of ell, G lifted to
    the energy level). Each member is integrated to the collision region;
    the mismatch between its arrival velocity angle and that of the
    collision manifold at the same position angle is scanned for a sign
    change, refined by root finding, and the root is certified by a fresh
    regularised integration.
    """
    mu = config.mu
    if not in_V_delta(probe, VDeltaParams(config.delta)):
        raise DomainError("probe is not in V_delta")
    s_probe = delaunay_to_jupiter(probe, mu)
    h = ham_jupiter(s_probe, mu)
    xi = xi_from_energy(h, mu)
    if upsilon is None:
        upsilon = UpsilonCurve(mu, config.rho, xi, config.psi_grid)
    cands, q_star = collision_candidates(probe, config)
    if not cands:
        return ShootResult(None, math.inf, False, math.nan, None, probe=probe,
                           q_star=q_star, message="no collision candidate")
    L = probe.L
    eps = config.model.collision_epsilon
    speed = math.sqrt(max(2.0 - 1.0 / L ** 2, 0.1))
    half0 = config.width_factor * config.rho * math.sqrt(mu) / (L ** 3 * speed)
    best_fail = None
    for _, ell_c, t_c, branch, k in cands[:config.max_candidates]:
        centre, half = ell_c, half0
        G_prev = probe.G
        for attempt in range(config.max_attempts):
            grid = np.linspace(-half, half, config.grid_n)
            scan = []
            for s in grid:
                try:
                    G = lift_on_energy(centre + s, probe.g, L, h, mu, G_prev)
                except DomainError:
                    continue
                G_prev = G
                ic = delaunay_to_jupiter(DelaunayState(centre + s, probe.g, L, G), mu)
                arr = _arrive(ic, t_c, config)
                if arr is None:
                    scan.append((float(s), G, math.nan, math.inf))
                    continue
                d, _ = upsilon.mismatch(arr.state_R3[:2], arr.state_R3[2:])
                scan.append((float(s), G, d, arr.closest))
            bracket = _find_bracket(scan)
            if bracket is not None:
                res = _refine(bracket, centre, probe, h, t_c, upsilon, config)
                res.scan = scan
                res.branch, res.windings, res.q_star = branch, k, q_star
                res.probe = probe
                if res.initial is not None:
                    res.distance_to_probe = delaunay_distance(res.initial, probe)
                res.hit = res.min_distance <= eps
                if res.hit:
                    return res
                best_fail = res
                break
            # recentre on the closest approach seen, else widen
            valid = [row for row in scan if not math.isnan(row[2])]
            if valid:
                centre += min(valid, key=lambda r: abs(r[2]))[0]
            else:
                closest = []
                for s in grid[:: max(1, config.grid_n // 10)]:
                    try:
                        G = lift_on_energy(centre + s, probe.g, L, h, mu, probe.G)
                    except DomainError:
                        continue
                    ic = delaunay_to_jupiter(DelaunayState(centre + s, probe.g, L, G), mu)
                    closest.append((_closest(ic, t_c, config), s))
                if closest:
                    centre += min(closest)[1]
                half *= 2.0
    if best_fail is not None:
        best_fail.message = "sign change found but certification failed"
        return best_fail
    return ShootResult(None, math.inf, False, math.nan, None, probe=probe, q_star=q_star,
                       message="no sign change of the S1/Upsilon mismatch")


def _find_bracket(scan):
    rows = [r for r in scan if not math.isnan(r[2])]
    best = None
    for a, b in zip(rows, rows[1:]):
        if a[2] == 0.0:
            return a[0], a[0]
        if a[2] * b[2] < 0.0 and abs(b[2] - a[2]) < math.pi / 2:
            if best is None or abs(a[0]) + abs(b[0]) < abs(best[0]) + abs(best[1]):
                best = (a[0], b[0])
    return best


def _refine(bracket, centre, probe, h, t_c, upsilon, config) -> ShootResult:
    mu = config.mu
    cache = {}

    def ic_of(s):
        G = lift_on_energy(centre + s, probe.g, probe.L, h, mu, probe.G)
        return G, delaunay_to_jupiter(DelaunayState(centre + s, probe.g, probe.L, G), mu)

    def D(s):
        _, ic = ic_of(s)
        arr = _arrive(ic, t_c, config)
        if arr is None:
            raise IntegrationError("lost the collision region during refinement")
        d, psi = upsilon.mismatch(arr.state_R3[:2], arr.state_R3[2:], exact=True)
        cache[s] = psi
        return d

    a, b = bracket
    try:
        if a == b:
            s_star = a
            D(a)
        else:
            fa, fb = D(a), D(b)
            if fa * fb > 0.0:
                # spline and exact curve disagree in sign at an end: keep the
                # spline bracket midpoint as the estimate
                s_star = 0.5 * (a + b)
                D(s_star)
            else:
                s_star = brentq(D, a, b, xtol=1e-13, rtol=1e-13)
    except (IntegrationError, DomainError) as exc:
        return ShootResult(None, math.inf, False, math.nan, None, sign_change=True,
                           message=str(exc))
    G, ic = ic_of(s_star)
    dist, t_hit = certify(ic, t_c, h, config)
    initial = DelaunayState(centre + s_star, probe.g, probe.L, G)
    return ShootResult(initial, dist, False, t_hit, cache.get(s_star), sign_change=True)


# ---------------------------------------------------------------------------
# Transition region


@dataclass
class SegmentReport:
    arrivals: list
    dropped: int
    v0: np.ndarray
    velocity_spread: float
    crossing_time: float
    spread_ratio: float  # spread / mu^{tau/3}
    time_ratio: float  # crossing time / mu^tau
    sector_coverage: float  # fraction of the target sector spanned


def make_incoming_segment(v0, config: ExperimentConfig, n: int = 21,
                          reach: float = 1.5) -> list[JupiterCenteredState]:
    """Points on |u| = mu^tau moving with velocity v0, aimed so that their
    straight-line impact parameters span +-reach * rho sqrt(mu)."""
    mp = config.model
    v0 = np.asarray(v0, dtype=float)
    back = math.atan2(-v0[1], -v0[0])
    bmax = min(reach * mp.r3_radius / mp.r2_radius, 0.95)
    out = []
    for b in np.linspace(-bmax, bmax, n):
        ang = back + math.asin(b)
        out.append(JupiterCenteredState(mp.r2_radius * np.array([math.cos(ang), math.sin(ang)]), v0))
    return out


def evolve_segment_R2(segment: list[JupiterCenteredState], config: ExperimentConfig,
                      model: str = "full", t_max: float | None = None) -> SegmentReport:
    """Flow each segment point from |u| = mu^tau to |u| = rho sqrt(mu) under
    the full Hamiltonian or its linear part. Points that leave the transition
    region outward first are dropped."""
    mp = config.model
    t_max = t_max if t_max is not None else 10.0 * mp.r2_radius
    arrivals = []
    dropped = 0
    r3sq, r2sq = mp.r3_radius ** 2, mp.r2_radius ** 2
    for s in segment:
        if model == "full":
            tr = integrate(s, (0.0, t_max), mp, rtol=config.rtol, atol=config.atol,
                           events=("enter_R3", "exit_R2"), stop_at=("enter_R3", "exit_R2"))
            hits = tr.events_of("enter_R3")
            if not hits:
                dropped += 1
                continue
            arrivals.append((hits[0].t, hits[0].state))
        elif model == "linear":
            from scipy.integrate import solve_ivp

            def ent(t, y):
                return y[0] ** 2 + y[1] ** 2 - r3sq
            ent.terminal, ent.direction = True, -1

            def ext(t, y):
                return y[0] ** 2 + y[1] ** 2 - r2sq * (1 + 1e-9)
            ext.terminal, ext.direction = True, 1
            sol = solve_ivp(rhs_lin, (0.0, t_max), s.as_array(), method="DOP853",
                            rtol=1e-13, atol=1e-13, events=[ent, ext])
            if not sol.t_events[0].size:
                dropped += 1
                continue
            arrivals.append((float(sol.t_events[0][0]), sol.y_events[0][0]))
        else:
            raise DomainError(f"unknown model {model!r}")
    if not arrivals:
        return SegmentReport([], dropped, np.zeros(2), math.nan, math.nan, math.nan, math.nan, 0.0)
    vs = np.array([a[1][2:] for a in arrivals])
    v0 = vs.mean(axis=0)
    spread = float(np.max(np.linalg.norm(vs - v0, axis=1)))
    t_cross = float(max(a[0] for a in arrivals))
    # arrival position angles relative to arg v0 should sweep the back sector
    rel = np.array([(math.atan2(a[1][1], a[1][0]) - math.atan2(v0[1], v0[0])) % TWO_PI
                    for a in arrivals])
    lo, hi = math.pi / 2 + config.varpi / 2, 3 * math.pi / 2 - config.varpi / 2
    covered = (min(rel.max(), hi) - max(rel.min(), lo)) / (hi - lo)
    mu, tau = config.mu, config.tau
    return SegmentReport(arrivals, dropped, v0, spread, t_cross,
                         spread / mu ** (tau / 3.0), t_cross / mu ** tau, max(0.0, covered))


def linear_arrival_check(segment, config: ExperimentConfig) -> float:
    """Largest deviation between numerically integrated linear-model arrivals
    and the closed-form flow evaluated at the same times."""
    rep = evolve_segment_R2(segment, config, model="linear")
    worst = 0.0
    k = 0
    for s in segment:
        if k >= len(rep.arrivals):
            break
        t, y = rep.arrivals[k]
        closed = flow_lin(s, t).as_array()
        if np.linalg.norm(closed[:2]) > config.model.r3_radius * 1.001:
            continue
        worst = max(worst, float(np.max(np.abs(closed - y))))
        k += 1
    return worst


# ---------------------------------------------------------------------------
# Density scan


@dataclass
class DensityRecord:
    mu: float
    probe_index: int
    probe: DelaunayState
    distance: float
    hit: bool
    sign_change: bool
    min_distance: float


@dataclass
class DensitySummary:
    records: list
    medians: dict
    exponent: float
    exponent_stderr: float
    monotone: bool


def _density_record(job) -> DensityRecord:
    mu, i, probe, cfg = job
    try:
        res = shoot_collision(probe, cfg)
    except (DomainError, IntegrationError, ArithmeticError) as exc:
        log.warning("shot failed for probe %d at mu=%g: %s", i, mu, exc)
        return DensityRecord(mu, i, probe, math.nan, False, False, math.inf)
    dist = res.distance_to_probe if res.hit else math.nan
    return DensityRecord(mu, i, probe, dist, res.hit, res.sign_change, res.min_distance)


def density_scan(mu_list, probes, config: ExperimentConfig, workers: int = 1) -> DensitySummary:
    """Shoot from every probe at every mu; fit log(median distance) against
    log(mu). Failed shots are kept with distance NaN. With ``workers > 1``
    shots run in separate processes; records keep (mu, probe) order."""
    jobs = [(mu, i, probe, config.with_mu(mu)) for mu in mu_list for i, probe in enumerate(probes)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_density_record, jobs))
    else:
        records = [_density_record(j) for j in jobs]
    medians = {}
    for mu in mu_list:
        ds = [r.distance for r in records if r.mu == mu and not math.isnan(r.distance)]
        medians[mu] = float(np.median(ds)) if ds else math.nan
    xs = np.log([m for m in mu_list if not math.isnan(medians[m])])
    ys = np.log([medians[m] for m in mu_list if not math.isnan(medians[m])])
    if len(xs) >= 2:
        fit = linregress(xs, ys)
        exponent = float(fit.slope)
        stderr = float(fit.stderr) if len(xs) >= 3 else math.nan
    else:
        exponent, stderr = math.nan, math.nan
    ordered = sorted(mu_list, reverse=True)
    meds = [medians[m] for m in ordered]
    monotone = all(not math.isnan(a) and not math.isnan(b) and b <= a
                   for a, b in zip(meds, meds[1:]))
    return DensitySummary(records, medians, exponent, stderr, monotone)


# ---------------------------------------------------------------------------
# Recurrence


@dataclass
class RecurrenceReport:
    gamma: float
    steps: int
    start_ell: float
    return_steps: int
    return_distance: float
    collision_pass_step: int
    collision_pass_distance: float
    clearance: float
    clears: bool
    shifted: bool
    return_time: float
    full_flow_deviation: float = math.nan
    full_flow_returns: int = 0

    def as_record(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def recurrence_scan(probe: DelaunayState, config: ExperimentConfig,
                    full_flow: bool = True) -> RecurrenceReport:
    """Rotation-model recurrence on the probe's torus, read on the section
    g = g_probe in turns of ell.

    A base point z0 sits 4 c mu^tau ahead of the first collision trace (c the
    ball constant in turns). The rest of its two-sided orbit must clear
    the balls of radius 4 c mu^tau around both collision traces; otherwise
    the base point moves 10 c mu^tau further once. The start Y is the
    backward iterate of z0 nearest the probe; its forward orbit passes z0
    and then returns nearest the probe. Distances are reported in radians.
    """
    mu, tau = config.mu, config.tau
    gamma = config.gamma_value
    c = config.ball_turns
    L = probe.L
    omega = (1.0 / L ** 3) % 1.0
    traces = []
    for branch in BRANCHES:
        cp = collision_point(L, probe.G, mu, branch)
        t0 = (probe.g - cp.g_col) % TWO_PI
        traces.append(((cp.ell_col - t0 / L ** 3) / TWO_PI) % 1.0)
    radius = 4.0 * c * mu ** tau
    # the closing-lemma count is 1 at desk-scale mu; run at least until the
    # rotation first returns within the ball radius
    steps = max(dio.recurrence_q_star(c, mu, tau, gamma), dio.find_q_star(omega, radius))
    z0 = (traces[0] + radius) % 1.0
    shifted = not dio.shifted_orbit_clearance(omega, z0, traces, steps, radius, skip_origin=True)
    if shifted:
        z0 = (z0 + 10.0 * c * mu ** tau) % 1.0
    clear = dio.orbit_clearance(omega, z0, traces, steps, skip_origin=True)
    x_p = (probe.ell / TWO_PI) % 1.0
    qs = np.arange(0, steps + 1)
    back = dio.frac_multiples(omega, -qs) + z0
    i_b = int(np.argmin(dio.circle_norm(back - x_p)))
    start = float(back[i_b] % 1.0)
    fwd_q = np.arange(i_b + 1, i_b + 2 * steps + 2)
    fwd = dio.frac_multiples(omega, fwd_q) + start
    i_r = int(np.argmin(dio.circle_norm(fwd - x_p)))
    ret_steps = int(fwd_q[i_r])
    ret_dist = float(dio.circle_norm(fwd[i_r] - x_p)) * TWO_PI
    pass_dist = float(dio.circle_norm(z0 - traces[0])) * TWO_PI
    report = RecurrenceReport(gamma, steps, start * TWO_PI, ret_steps, ret_dist, i_b, pass_dist,
                              clear * TWO_PI, clear > radius, shifted, ret_steps * TWO_PI)
    if full_flow:
        report.full_flow_deviation, report.full_flow_returns = _full_flow_returns(
            probe, start * TWO_PI, omega, ret_steps, config)
        log.info("recurrence full-flow section deviation %.3e over %d returns",
                 report.full_flow_deviation, report.full_flow_returns)
    return report


def _full_flow_returns(probe, ell0, omega, steps, config) -> tuple[float, int]:
    """Integrate the true flow from (ell0, g_probe) on the probe's energy
    level and compare successive section returns with ell0 + q omega."""
    mu = config.mu
    h = ham_jupiter(delaunay_to_jupiter(probe, mu), mu)
    try:
        G = lift_on_energy(ell0, probe.g, probe.L, h, mu, probe.G)
    except DomainError:
        return math.nan, 0
    ic = delaunay_to_jupiter(DelaunayState(ell0, probe.g, probe.L, G), mu)
    first = integrate(ic, (0.0, 1.0), config.model, events=(), rtol=1e-11, atol=1e-11)
    tr = integrate(first.final, (1.0, steps * TWO_PI + 2.0), config.model,
                   events=("section", "collision"), section_g0=probe.g, rtol=1e-11, atol=1e-11)
    worst, n = 0.0, 0
    for q, ev in enumerate(tr.events_of("section"), start=1):
        try:
            d = jupiter_to_delaunay(JupiterCenteredState.from_array(ev.state), mu)
        except (DomainError, ArithmeticError):
            break
        model = (ell0 / TWO_PI + q * omega) % 1.0
        worst = max(worst, float(dio.circle_norm(d.ell / TWO_PI - model)) * TWO_PI)
        n = q
    return worst, n
