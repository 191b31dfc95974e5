"""Time stepping for finite-amplitude (Westervelt-type) wave propagation.

The governing equation for the acoustic pressure p is

    lap p - (1/c0^2) p_tt + (delta/c0^4) p_ttt
          + (beta/(rho0 c0^4)) (p^2)_tt = 0,

discretized with the DEC Laplacian in space and one-sided / centered
differences in time.  Writing the temporal part at level n-1 as

    L p := (p^n - 2 p^{n-1} + p^{n-2}) / (c0 dt)^2
         - delta/(c0^4 dt^3) (p^{n-1} - 3 p^{n-2} + 3 p^{n-3} - p^{n-4})
         - beta/(rho0 c0^4 dt^2) ((p^2)^{n-1} - 2 (p^2)^{n-2} + (p^2)^{n-3})

the three schemes equate it to the Laplacian evaluated at different
levels:

* explicit       lap p^{n-1} = L p       (one division per vertex),
* implicit       lap p^n     = L p       (global sparse solve),
* semi-implicit  neighbors at n-1, center at n (scalar solve per vertex).

The explicit scheme is conditionally stable; ``stable_dt`` returns the
largest time step the linear-wave analysis allows.  The other two are
used when that bound is too restrictive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from numpy.typing import NDArray
from scipy.sparse.linalg import cg

from .dec import LaplacianOperator
from .errors import AssemblyError, DivergenceError, LinearSolveError
from .media import MaterialField
from .mesh import DualMetrics, SimplicialMesh

EXPLICIT = "explicit"
IMPLICIT = "implicit"
SEMI_IMPLICIT = "semi_implicit"
SCHEMES = (EXPLICIT, IMPLICIT, SEMI_IMPLICIT)

BOUNDARY_NATURAL = "natural"
BOUNDARY_DIRICHLET_ZERO = "dirichlet_zero"
BOUNDARIES = (BOUNDARY_NATURAL, BOUNDARY_DIRICHLET_ZERO)

HISTORY_DEPTH = 4  # levels n-1 .. n-4, as required by the delta term


@dataclass
class SourceSpec:
    """Gaussian-enveloped tone burst injected at a set of vertices.

    The signal is A/(sigma sqrt(2 pi)) exp(-(t-t0)^2/(2 sigma^2))
    cos(omega (t-t0)); with amplitude, sigma and omega all 1 and t0 = 0
    this is the classic unit pulse.  ``additive`` mode adds the value to
    the current pressure, ``hard`` mode overwrites it.
    """

    vertices: tuple[int, ...]
    amplitude: float = 1.0
    t0: float = 0.0
    sigma: float = 1.0
    omega: float = 1.0
    mode: str = "additive"

    def __post_init__(self):
        self.vertices = tuple(int(v) for v in self.vertices)
        if not self.vertices:
            raise ValueError("source needs at least one injection vertex")
        if not self.sigma > 0.0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.mode not in ("additive", "hard"):
            raise ValueError(f"unknown source mode {self.mode!r}")

    @property
    def peak(self) -> float:
        """Envelope maximum |signal(t0)|."""
        return abs(self.amplitude) / (self.sigma * math.sqrt(2.0 * math.pi))


def source_signal(t: float, spec: SourceSpec) -> float:
    """Source pressure value at time t (Pa)."""
    u = (t - spec.t0) / spec.sigma
    return (
        spec.amplitude
        / (spec.sigma * math.sqrt(2.0 * math.pi))
        * math.exp(-0.5 * u * u)
        * math.cos(spec.omega * (t - spec.t0))
    )


@dataclass
class LinearSolveConfig:
    """Controls for the implicit scheme's conjugate-gradient solve."""

    rel_tol: float = 1e-10
    max_iter: int | None = None  # None: 10 * n_vertices

    def __post_init__(self):
        if not 0.0 < self.rel_tol < 1.0:
            raise ValueError(f"rel_tol must be in (0, 1), got {self.rel_tol}")
        if self.max_iter is not None and self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass
class SolverState:
    """Rotating pressure history plus stepping parameters.

    ``history[k]`` holds the field at time level ``step_index - k``; a
    step consumes levels n-1 .. n-4, produces level n = step_index + 1,
    and rotates.  All fields start at zero: runs begin from rest and are
    driven by the source.
    """

    step_index: int
    dt: float
    scheme: str
    boundary: str
    history: list[NDArray[np.float64]] = field(default_factory=list)

    @property
    def pressure(self) -> NDArray[np.float64]:
        """Most recent field (time ``step_index * dt``)."""
        return self.history[0]

    @property
    def time(self) -> float:
        return self.step_index * self.dt


def init_state(
    mesh: SimplicialMesh,
    dt: float,
    scheme: str = EXPLICIT,
    boundary: str = BOUNDARY_NATURAL,
) -> SolverState:
    """Fresh all-zero state (cold start from rest)."""
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}, expected one of {SCHEMES}")
    if boundary not in BOUNDARIES:
        raise ValueError(
            f"unknown boundary policy {boundary!r}, expected one of {BOUNDARIES}"
        )
    history = [np.zeros(mesh.n_vertices) for _ in range(HISTORY_DEPTH)]
    return SolverState(
        step_index=0, dt=dt, scheme=scheme, boundary=boundary, history=history
    )


def inject_source(state: SolverState, spec: SourceSpec, t: float) -> SolverState:
    """Apply the source to the newest history level before a step."""
    idx = list(spec.vertices)
    n = len(state.history[0])
    if min(idx) < 0 or max(idx) >= n:
        raise ValueError(f"source vertices {idx} out of range for {n} vertices")
    value = source_signal(t, spec)
    if spec.mode == "additive":
        state.history[0][idx] += value
    else:
        state.history[0][idx] = value
    return state


def nonlinear_rhs_L(
    state: SolverState, media: MaterialField, v: int
) -> tuple[float, float]:
    """Split the temporal operator at vertex v into (coefficient, constant).

    The full value is ``coefficient * p_v^n + constant`` where p_v^n is
    the unknown next-level pressure; the constant collects the stored
    history levels (squared-pressure terms are squares of the stored
    fields).
    """
    p1, p2, p3, p4 = (lvl[v] for lvl in state.history)
    c0 = media.c0[v]
    rho0 = media.rho0[v]
    delta = media.delta[v]
    beta = media.beta[v]
    dt = state.dt

    coef = 1.0 / (c0 * dt) ** 2
    const = -(2.0 * p1 - p2) * coef
    const -= delta / (c0**4 * dt**3) * (p1 - 3.0 * p2 + 3.0 * p3 - p4)
    const -= beta / (rho0 * c0**4 * dt**2) * (p1**2 - 2.0 * p2**2 + p3**2)
    return coef, const


def _split_temporal(
    state: SolverState, media: MaterialField
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Vectorized version of :func:`nonlinear_rhs_L` over all vertices."""
    p1, p2, p3, p4 = state.history
    dt = state.dt
    coef = 1.0 / (media.c0 * dt) ** 2
    const = -(2.0 * p1 - p2) * coef
    const -= media.delta / (media.c0**4 * dt**3) * (p1 - 3.0 * p2 + 3.0 * p3 - p4)
    const -= media.beta / (media.rho0 * media.c0**4 * dt**2) * (
        p1**2 - 2.0 * p2**2 + p3**2
    )
    return coef, const


def _commit(
    state: SolverState, p_new: NDArray[np.float64], mesh: SimplicialMesh
) -> SolverState:
    """Boundary policy, divergence check, history rotation."""
    if state.boundary == BOUNDARY_DIRICHLET_ZERO:
        p_new[mesh.vertex_is_boundary] = 0.0
    if not np.all(np.isfinite(p_new)):
        raise DivergenceError(
            "non-finite pressure value produced", step=state.step_index + 1
        )
    state.history.insert(0, p_new)
    state.history.pop()
    state.step_index += 1
    return state


def step_explicit(
    state: SolverState,
    laplacian: LaplacianOperator,
    media: MaterialField,
    mesh: SimplicialMesh,
) -> SolverState:
    """One conditionally stable step: Laplacian at the known level n-1."""
    if state.scheme != EXPLICIT:
        raise ValueError(f"state is configured for scheme {state.scheme!r}")
    coef, const = _split_temporal(state, media)
    p_new = (laplacian.matrix @ state.history[0] - const) / coef
    return _commit(state, p_new, mesh)


def step_implicit(
    state: SolverState,
    laplacian: LaplacianOperator,
    media: MaterialField,
    metrics: DualMetrics,
    mesh: SimplicialMesh,
    cfg: LinearSolveConfig | None = None,
) -> SolverState:
    """One unconditionally stable step: Laplacian at the unknown level n.

    Solves (lap - C) p^n = r with C the diagonal of temporal
    coefficients.  Multiplying rows by the dual areas turns the system
    into a symmetric positive-definite one, solved by conjugate
    gradients to the configured relative tolerance (warm-started from
    the previous level).
    """
    if state.scheme != IMPLICIT:
        raise ValueError(f"state is configured for scheme {state.scheme!r}")
    cfg = cfg or LinearSolveConfig()
    coef, const = _split_temporal(state, media)

    areas = metrics.dual_area
    # -areas * lap == d0^T star1 d0, symmetric positive semi-definite.
    lhs = sp.csr_array(
        -sp.diags_array(areas) @ laplacian.matrix + sp.diags_array(areas * coef)
    )
    rhs = -areas * const

    n = laplacian.n_vertices
    maxiter = cfg.max_iter if cfg.max_iter is not None else 10 * n
    p_new, info = cg(
        lhs, rhs, x0=state.history[0], rtol=cfg.rel_tol, atol=0.0, maxiter=maxiter
    )
    if info != 0:
        residual = float(
            np.linalg.norm(rhs - lhs @ p_new) / max(np.linalg.norm(rhs), 1e-300)
        )
        raise LinearSolveError(
            f"conjugate gradients did not converge within {maxiter} iterations "
            f"at step {state.step_index + 1}",
            residual=residual,
        )
    return _commit(state, p_new, mesh)


def step_semi_implicit(
    state: SolverState,
    laplacian: LaplacianOperator,
    media: MaterialField,
    mesh: SimplicialMesh,
) -> SolverState:
    """One unconditionally stable step with a scalar solve per vertex.

    Neighbor pressures enter at level n-1 while the center value is
    taken at level n, both in the Laplacian term and in the temporal
    operator; each vertex equation is then linear in the single unknown.
    """
    if state.scheme != SEMI_IMPLICIT:
        raise ValueError(f"state is configured for scheme {state.scheme!r}")
    coef, const = _split_temporal(state, media)

    p1 = state.history[0]
    diag = laplacian.matrix.diagonal()  # == -(weight sum)/area, <= 0
    neighbor_term = laplacian.matrix @ p1 - diag * p1
    denom = coef - diag
    if np.any(denom <= 0.0):
        raise AssemblyError("nonpositive center coefficient in semi-implicit update")
    p_new = (neighbor_term - const) / denom
    return _commit(state, p_new, mesh)


def advance(
    state: SolverState,
    laplacian: LaplacianOperator,
    media: MaterialField,
    metrics: DualMetrics,
    mesh: SimplicialMesh,
    cfg: LinearSolveConfig | None = None,
) -> SolverState:
    """Step with whichever scheme the state is configured for."""
    if state.scheme == EXPLICIT:
        return step_explicit(state, laplacian, media, mesh)
    if state.scheme == IMPLICIT:
        return step_implicit(state, laplacian, media, metrics, mesh, cfg)
    return step_semi_implicit(state, laplacian, media, mesh)


def stable_dt(
    mesh: SimplicialMesh, metrics: DualMetrics, media: MaterialField
) -> float:
    """Largest time step for which the explicit scheme is non-amplifying.

    Per vertex the linear-wave analysis requires
    c0 dt <= sqrt(2 / ((1/P_v) sum_e dual_len(e)/primal_len(e))); the
    returned bound is the minimum over vertices.  Vertices with zero
    incident weight sum carry no wave coupling and are excluded.
    """
    if np.any(metrics.dual_area <= 0.0):
        raise AssemblyError("stability bound needs positive dual areas")
    weights = metrics.dual_edge_length / metrics.primal_edge_length
    wsum = np.zeros(mesh.n_vertices)
    np.add.at(wsum, mesh.edges[:, 0], weights)
    np.add.at(wsum, mesh.edges[:, 1], weights)

    coupled = wsum > 0.0
    if not np.any(coupled):
        raise AssemblyError("no vertex has wave coupling; cannot bound dt")
    bounds = np.sqrt(2.0 * metrics.dual_area[coupled] / wsum[coupled]) / media.c0[
        coupled
    ]
    return float(bounds.min())
