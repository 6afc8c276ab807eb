"""Collision orbits of the planar circular restricted three-body problem
near Jupiter: Kepler/Delaunay charts, rotating-frame dynamics, the Kepler
collision set, Levi-Civita regularisation, Diophantine tools for the
rotation of the mean anomaly, and the experiments built on them."""

from . import collision_geometry, diophantine, dynamics, export, kepler, lab, levi_civita
from .errors import (
    DomainError,
    IntegrationError,
    NoCollisionError,
    NumericError,
    SingularityError,
)

__version__ = "0.1.0"

__all__ = [
    "collision_geometry",
    "diophantine",
    "dynamics",
    "export",
    "kepler",
    "lab",
    "levi_civita",
    "DomainError",
    "IntegrationError",
    "NoCollisionError",
    "NumericError",
    "SingularityError",
]
