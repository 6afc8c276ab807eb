"""Collision set of the Kepler flow in Delaunay variables and the open sets
V and V_delta of ellipses that cross Jupiter's circle transversally."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NoCollisionError
from .kepler import (
    DelaunayState,
    JupiterCenteredState,
    eccentricity,
    h0_delaunay,
    true_anomaly,
)

BRANCHES = ("plus", "minus")
JACOBI_WINDOW = (-2.0 * math.sqrt(2.0), 3.0)


@dataclass(frozen=True)
class CollisionPoint:
    """Point (ell_col, g_col) on the torus (L, G) whose Kepler orbit is at
    Jupiter, r = 1 - mu and phi = 0, at the current instant.

    The angles are kept unreduced so that they vary continuously with
    (L, G) on each branch; ``u_star`` is the eccentric anomaly there.
    """

    branch: str
    ell_col: float
    g_col: float
    L: float
    G: float
    mu: float
    u_star: float

    def delaunay(self) -> DelaunayState:
        return DelaunayState(self.ell_col, self.g_col, self.L, self.G)


def collision_cosine(L: float, G: float, mu: float = 0.0) -> float:
    """cos u* = (L^2 - (1 - mu)) / (e L^2); a collision exists iff |.| < 1."""
    e = eccentricity(L, G)
    if e == 0.0:
        return math.inf
    return (L * L - (1.0 - mu)) / (e * L * L)


def collision_point(L: float, G: float, mu: float = 0.0, branch: str = "plus") -> CollisionPoint:
    if branch not in BRANCHES:
        raise DomainError(f"branch must be one of {BRANCHES}, got {branch!r}")
    if G == 0.0:
        raise DomainError("G = 0 is excluded")
    c = collision_cosine(L, G, mu)
    if not abs(c) < 1.0:
        raise NoCollisionError(
            f"ellipse (L={L}, G={G}) does not cross the circle r = 1 - mu (cos u* = {c})")
    e = eccentricity(L, G)
    u_plus = math.acos(c)
    u_star = u_plus if branch == "plus" else 2.0 * math.pi - u_plus
    ell = u_star - e * math.sin(u_star)
    g = -math.copysign(1.0, G) * true_anomaly(u_star, e)
    return CollisionPoint(branch, ell, g, L, G, mu, u_star)


def collision_graph_table(Ls, Gs, mu: float = 0.0) -> list[dict]:
    """Rows (L, G, branch, ell_col, g_col) over a grid, skipping (L, G)
    pairs without a collision."""
    rows = []
    for L in Ls:
        for G in Gs:
            for branch in BRANCHES:
                try:
                    cp = collision_point(float(L), float(G), mu, branch)
                except DomainError:
                    continue
                rows.append({"L": cp.L, "G": cp.G, "branch": branch,
                             "ell_col": cp.ell_col, "g_col": cp.g_col})
    return rows


def _apsides(L: float, G: float) -> tuple[float, float]:
    e = eccentricity(L, G)
    return L * L * (1.0 - e), L * L * (1.0 + e)


def in_V(s: DelaunayState) -> bool:
    """Non-degenerate, non-circular ellipses whose perihelion lies inside and
    aphelion outside the unit circle, G^2/(1+e) < 1 < G^2/(1-e)."""
    L, G = s.L, s.G
    if G == 0.0 or not abs(G) < L:
        return False
    e = eccentricity(L, G)
    return G * G / (1.0 + e) < 1.0 < G * G / (1.0 - e)


@dataclass(frozen=True)
class VDeltaParams:
    delta: float

    def __post_init__(self):
        if not 0.0 < self.delta < 0.5:
            raise DomainError(f"delta must lie in (0, 0.5), got {self.delta}")
        # V_delta must contain the torus L = 1, G = 1/2 + something for small delta
        probe = DelaunayState(0.0, 0.0, 1.0, 0.5 + self.delta)
        if not self.delta < 0.25 or not in_V_delta(probe, self):
            raise DomainError(f"V_delta is empty or degenerate for delta={self.delta}")


def in_V_delta(s: DelaunayState, p: VDeltaParams) -> bool:
    d = p.delta
    L, G = s.L, s.G
    if not in_V(s):
        return False
    if not d < L < 1.0 / d:
        return False
    if not d < abs(G) < L - d:
        return False
    e = eccentricity(L, G)
    if not (G * G / (1.0 + e) + d < 1.0 < G * G / (1.0 - e) - d):
        return False
    J = -2.0 * h0_delaunay(L, G)
    return JACOBI_WINDOW[0] < J < JACOBI_WINDOW[1]


def sample_V_delta(n: int, p: VDeltaParams, rng: np.random.Generator,
                   L_range: tuple[float, float] = (0.5, 2.0)) -> list[DelaunayState]:
    """Rejection sampler: uniform angles, (L, |G|) uniform in a box, random
    sign of G."""
    out: list[DelaunayState] = []
    lo, hi = max(L_range[0], p.delta), min(L_range[1], 1.0 / p.delta)
    while len(out) < n:
        L = rng.uniform(lo, hi)
        G = rng.uniform(p.delta, L - p.delta) * rng.choice((-1.0, 1.0))
        ell, g = rng.uniform(0.0, 2.0 * math.pi, size=2)
        s = DelaunayState(ell, g, L, G)
        if in_V_delta(s, p):
            out.append(s)
    return out


def collision_distance(s: JupiterCenteredState) -> float:
    return math.hypot(s.u[0], s.u[1])
