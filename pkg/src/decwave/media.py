"""Spatially varying acoustic material parameters.

Each vertex carries its own small-signal sound speed c0, ambient density
rho0, sound diffusivity delta and coefficient of nonlinearity beta; the
time stepper reads them vertex-locally (no averaging across interfaces).
Fields are assigned from a default parameter set plus an ordered list of
geometric overrides (boxes / spheres, closed sets, last match wins).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .mesh import SimplicialMesh


@dataclass(frozen=True)
class MaterialParams:
    """Physical parameters of one medium.

    c0 in m/s, rho0 in kg/m^3, delta (diffusivity of sound) in m^2/s,
    beta dimensionless.
    """

    c0: float
    rho0: float
    delta: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        if not self.c0 > 0.0:
            raise ValueError(f"c0 must be positive, got {self.c0}")
        if not self.rho0 > 0.0:
            raise ValueError(f"rho0 must be positive, got {self.rho0}")
        if self.delta < 0.0:
            raise ValueError(f"delta must be nonnegative, got {self.delta}")


@dataclass(frozen=True)
class Box:
    """Closed axis-aligned box; contains points with min <= x <= max."""

    lo: tuple[float, float, float]
    hi: tuple[float, float, float]

    def __post_init__(self):
        if any(a > b for a, b in zip(self.lo, self.hi)):
            raise ValueError(f"box min {self.lo} exceeds max {self.hi}")

    def contains(self, points: NDArray[np.float64]) -> NDArray[np.bool_]:
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        return np.all((points >= lo) & (points <= hi), axis=1)


@dataclass(frozen=True)
class Sphere:
    """Closed ball around ``center`` with the given radius."""

    center: tuple[float, float, float]
    radius: float

    def __post_init__(self):
        if not self.radius > 0.0:
            raise ValueError(f"radius must be positive, got {self.radius}")

    def contains(self, points: NDArray[np.float64]) -> NDArray[np.bool_]:
        d2 = ((points - np.asarray(self.center)) ** 2).sum(axis=1)
        return d2 <= self.radius**2


@dataclass
class RegionSpec:
    """Default material plus ordered geometric overrides (later wins)."""

    default: MaterialParams
    overrides: list[tuple[Box | Sphere, MaterialParams]] = field(default_factory=list)


class MaterialField:
    """Per-vertex material parameters, stored as flat arrays."""

    def __init__(self, c0, rho0, delta, beta):
        self.c0 = np.asarray(c0, dtype=np.float64)
        self.rho0 = np.asarray(rho0, dtype=np.float64)
        self.delta = np.asarray(delta, dtype=np.float64)
        self.beta = np.asarray(beta, dtype=np.float64)
        n = len(self.c0)
        if not (len(self.rho0) == len(self.delta) == len(self.beta) == n):
            raise ValueError("parameter arrays must have equal length")
        if np.any(self.c0 <= 0.0) or np.any(self.rho0 <= 0.0) or np.any(self.delta < 0.0):
            raise ValueError("invalid material values (need c0>0, rho0>0, delta>=0)")

    @classmethod
    def uniform(cls, n_vertices: int, params: MaterialParams) -> "MaterialField":
        return cls(
            np.full(n_vertices, params.c0),
            np.full(n_vertices, params.rho0),
            np.full(n_vertices, params.delta),
            np.full(n_vertices, params.beta),
        )

    def __len__(self) -> int:
        return len(self.c0)


def assign_regions(mesh: SimplicialMesh, spec: RegionSpec) -> MaterialField:
    """Assign each vertex the parameters of the last override containing it.

    Vertices outside all overrides get the default.  Overrides are
    applied in list order, so overlapping regions resolve to the later
    one.
    """
    fld = MaterialField.uniform(mesh.n_vertices, spec.default)
    for predicate, params in spec.overrides:
        inside = predicate.contains(mesh.vertices)
        fld.c0[inside] = params.c0
        fld.rho0[inside] = params.rho0
        fld.delta[inside] = params.delta
        fld.beta[inside] = params.beta
    return fld


def material_at(fld: MaterialField, v: int) -> MaterialParams:
    """Parameters stored at vertex ``v``."""
    if not 0 <= v < len(fld):
        raise IndexError(f"vertex {v} out of range for field of size {len(fld)}")
    return MaterialParams(
        c0=float(fld.c0[v]),
        rho0=float(fld.rho0[v]),
        delta=float(fld.delta[v]),
        beta=float(fld.beta[v]),
    )
