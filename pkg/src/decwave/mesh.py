"""Triangle meshes and their circumcentric dual geometry.

A mesh is a set of vertices in 3-space plus triangles; flat 2D problems
simply use z = 0.  From the triangles we derive the undirected edge list
(canonical order: smaller vertex index first, edges sorted
lexicographically), the edge-to-triangle adjacency, and the
circumcentric-dual measures that the discrete operators are built from:

* ``primal_edge_length[e]``  -- Euclidean length of edge e,
* ``dual_edge_length[e]``    -- length of the dual edge, i.e. the sum of
  the circumcenter-to-edge-midpoint segments of the 1 or 2 incident
  triangles (unsigned),
* ``dual_area[v]``           -- area of the dual cell of vertex v,
  accumulated as signed quadrangle areas (vertex, edge midpoint,
  triangle circumcenter, other edge midpoint) so that the dual areas sum
  to the total surface area exactly, even when circumcenters fall
  outside their triangles.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import MeshError

# Triangles flatter than this (relative to their longest edge) are degenerate.
DEGENERATE_REL_AREA = 1e-12

# Barycentric slack used when classifying circumcenter positions.
WELL_CENTERED_TOL = 1e-9

CIRCUMCENTER_INTERIOR = "interior"
CIRCUMCENTER_ON_BOUNDARY = "boundary"
CIRCUMCENTER_EXTERIOR = "exterior"


class SimplicialMesh:
    """An edge-manifold triangle mesh with derived adjacency.

    Parameters
    ----------
    vertices : (n, 3) float array-like
        Vertex coordinates in meters.
    triangles : (m, 3) int array-like
        Vertex index triples.  Orientation does not need to be globally
        consistent.

    Raises
    ------
    MeshError
        On out-of-range indices, degenerate triangles (repeated or
        collinear vertices) or non-manifold edges (more than two
        incident triangles).
    """

    def __init__(self, vertices, triangles):
        self.vertices: NDArray[np.float64] = np.asarray(vertices, dtype=np.float64)
        self.triangles: NDArray[np.int64] = np.asarray(triangles, dtype=np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise MeshError("vertices must be an (n, 3) array")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise MeshError("triangles must be an (m, 3) array")
        self._validate_triangles()
        self._derive_edges()

    # -- construction helpers -------------------------------------------------

    def _validate_triangles(self) -> None:
        t = self.triangles
        n = len(self.vertices)
        bad = np.nonzero((t < 0) | (t >= n))[0]
        if bad.size:
            _raise_for_triangle(
                f"triangle {bad[0]} references vertex {t[bad[0]].max()} "
                f"but mesh has {n} vertices",
                int(bad[0]),
            )
        repeated = np.nonzero(
            (t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 0] == t[:, 2])
        )[0]
        if repeated.size:
            _raise_for_triangle(
                f"triangle {repeated[0]} repeats a vertex", int(repeated[0])
            )

        a = self.vertices[t[:, 0]]
        b = self.vertices[t[:, 1]]
        c = self.vertices[t[:, 2]]
        cross = np.cross(b - a, c - a)
        self.triangle_areas: NDArray[np.float64] = 0.5 * np.linalg.norm(cross, axis=1)
        longest = np.sqrt(
            np.maximum.reduce(
                [
                    ((b - a) ** 2).sum(axis=1),
                    ((c - b) ** 2).sum(axis=1),
                    ((a - c) ** 2).sum(axis=1),
                ]
            )
        )
        flat = np.nonzero(self.triangle_areas <= DEGENERATE_REL_AREA * longest**2)[0]
        if flat.size:
            _raise_for_triangle(
                f"triangle {flat[0]} has zero area", int(flat[0])
            )

    def _derive_edges(self) -> None:
        t = self.triangles
        nt = len(t)
        pairs = np.sort(
            np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [0, 2]]]), axis=1
        )
        tri_ids = np.tile(np.arange(nt, dtype=np.int64), 3)
        # np.unique sorts rows lexicographically: the canonical edge order.
        self.edges, inv = np.unique(pairs, axis=0, return_inverse=True)
        inv = inv.ravel()
        ne = len(self.edges)

        counts = np.bincount(inv, minlength=ne)
        if counts.max(initial=0) > 2:
            e = int(np.argmax(counts > 2))
            offenders = np.sort(tri_ids[inv == e])
            _raise_for_triangle(
                f"edge ({self.edges[e, 0]}, {self.edges[e, 1]}) is shared by "
                f"{counts[e]} triangles (non-manifold)",
                int(offenders[2]),
            )

        order = np.lexsort((tri_ids, inv))
        sorted_inv = inv[order]
        starts = np.nonzero(np.r_[True, sorted_inv[1:] != sorted_inv[:-1]])[0]
        slot = np.arange(3 * nt) - np.repeat(starts, np.diff(np.r_[starts, 3 * nt]))
        self.edge_triangles: NDArray[np.int64] = np.full((ne, 2), -1, dtype=np.int64)
        self.edge_triangles[sorted_inv, slot] = tri_ids[order]

        vid = self.edges.ravel()
        eid = np.repeat(np.arange(ne, dtype=np.int64), 2)
        order = np.lexsort((eid, vid))
        cuts = np.searchsorted(vid[order], np.arange(1, len(self.vertices)))
        self.vertex_edges: list[NDArray[np.int64]] = np.split(eid[order], cuts)

        self.edge_is_boundary: NDArray[np.bool_] = self.edge_triangles[:, 1] < 0
        self.vertex_is_boundary: NDArray[np.bool_] = np.zeros(
            len(self.vertices), dtype=bool
        )
        self.vertex_is_boundary[self.edges[self.edge_is_boundary].ravel()] = True

    # -- basic queries ---------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def total_area(self) -> float:
        return float(self.triangle_areas.sum())

    def nearest_vertex(self, point) -> int:
        """Index of the vertex closest to ``point`` (ties: lowest index)."""
        d2 = ((self.vertices - np.asarray(point, dtype=np.float64)) ** 2).sum(axis=1)
        return int(np.argmin(d2))

    def __repr__(self) -> str:
        return (
            f"SimplicialMesh({self.n_vertices} vertices, "
            f"{self.n_triangles} triangles, {self.n_edges} edges)"
        )


def _raise_for_triangle(message: str, triangle_index: int):
    err = MeshError(message)
    err.triangle_index = triangle_index
    raise err


@dataclass
class DualMetrics:
    """Circumcentric-dual measures of a mesh (see module docstring)."""

    primal_edge_length: NDArray[np.float64]  # (n_edges,)  > 0
    dual_edge_length: NDArray[np.float64]  # (n_edges,)  >= 0
    dual_area: NDArray[np.float64]  # (n_vertices,)
    circumcenters: NDArray[np.float64]  # (n_triangles, 3)


@dataclass
class WellCenteredReport:
    """Classification of circumcenter positions, for mesh-quality checks.

    ``flags[t]`` is one of ``"interior"``, ``"boundary"``, ``"exterior"``
    (position of triangle t's circumcenter relative to the triangle).
    ``negative_contributions`` counts (edge, triangle) incidences whose
    circumcenter-to-midpoint segment points away from the triangle, i.e.
    obtuse angles opposite an edge.  ``worst_triangle`` is the triangle
    with the most exterior circumcenter, or None if all are contained.
    """

    flags: NDArray[np.str_]
    negative_contributions: int
    worst_triangle: int | None

    def counts(self) -> dict[str, int]:
        return {
            kind: int((self.flags == kind).sum())
            for kind in (
                CIRCUMCENTER_INTERIOR,
                CIRCUMCENTER_ON_BOUNDARY,
                CIRCUMCENTER_EXTERIOR,
            )
        }

    @property
    def is_well_centered(self) -> bool:
        return not np.any(self.flags == CIRCUMCENTER_EXTERIOR)


# -- OFF input -----------------------------------------------------------------


def load_mesh(source: io.TextIOBase) -> SimplicialMesh:
    """Read an ASCII OFF stream into a validated mesh.

    Expected layout: a header line ``OFF``, a counts line ``V F E`` (the
    edge count is ignored), V vertex lines of 3 reals, F face lines
    ``3 i j k``.  Blank lines and ``#`` comments are skipped.  All
    structural problems are reported with the offending line number.
    """
    lines = source.read().splitlines()
    pos = 0

    def next_line(what: str) -> tuple[int, str]:
        nonlocal pos
        while pos < len(lines):
            pos += 1
            text = lines[pos - 1].strip()
            if text and not text.startswith("#"):
                return pos, text
        raise MeshError(f"unexpected end of stream, expected {what}", line=len(lines))

    lineno, header = next_line("OFF header")
    if header != "OFF":
        raise MeshError(f"expected OFF header, got {header!r}", line=lineno)

    lineno, counts = next_line("counts line")
    fields = counts.split()
    if len(fields) != 3:
        raise MeshError("counts line must hold 3 integers (V F E)", line=lineno)
    try:
        n_vertices, n_faces = int(fields[0]), int(fields[1])
    except ValueError:
        raise MeshError(f"bad counts line {counts!r}", line=lineno) from None
    if n_vertices < 0 or n_faces < 0:
        raise MeshError("counts must be nonnegative", line=lineno)

    vertices = np.empty((n_vertices, 3), dtype=np.float64)
    for i in range(n_vertices):
        lineno, text = next_line(f"vertex {i}")
        fields = text.split()
        if len(fields) != 3:
            raise MeshError(
                f"vertex line must hold 3 coordinates, got {len(fields)}", line=lineno
            )
        try:
            vertices[i] = [float(f) for f in fields]
        except ValueError:
            raise MeshError(f"bad vertex line {text!r}", line=lineno) from None

    triangles = np.empty((n_faces, 3), dtype=np.int64)
    face_lines = np.empty(n_faces, dtype=np.int64)
    for i in range(n_faces):
        lineno, text = next_line(f"face {i}")
        fields = text.split()
        try:
            sizes = [int(f) for f in fields]
        except ValueError:
            raise MeshError(f"bad face line {text!r}", line=lineno) from None
        if not sizes or sizes[0] != 3 or len(sizes) != 4:
            raise MeshError(
                f"only triangular faces are supported, got {text!r}", line=lineno
            )
        triangles[i] = sizes[1:]
        face_lines[i] = lineno

    try:
        return SimplicialMesh(vertices, triangles)
    except MeshError as err:
        t = getattr(err, "triangle_index", None)
        if t is not None:
            raise MeshError(str(err), line=int(face_lines[t])) from None
        raise


def load_mesh_file(path) -> SimplicialMesh:
    with open(path, "r", encoding="ascii") as stream:
        return load_mesh(stream)


# -- circumcenters -------------------------------------------------------------


def circumcenter(a, b, c) -> NDArray[np.float64]:
    """Circumcenter of the triangle (a, b, c), in its own plane.

    Solves the two perpendicular-bisector conditions
    ``(x - a).(b - a) = |b - a|^2 / 2`` and ``(x - a).(c - a) = |c - a|^2 / 2``
    for ``x = a + alpha (b - a) + beta (c - a)``.
    """
    a = np.asarray(a, dtype=np.float64)
    u = np.asarray(b, dtype=np.float64) - a
    v = np.asarray(c, dtype=np.float64) - a
    uu, vv, uv = u @ u, v @ v, u @ v
    det = uu * vv - uv * uv  # == |u x v|^2
    if det <= (DEGENERATE_REL_AREA**2) * uu * vv:
        raise MeshError("cannot compute circumcenter of collinear points")
    alpha = (vv * (uu - uv)) / (2.0 * det)
    beta = (uu * (vv - uv)) / (2.0 * det)
    return a + alpha * u + beta * v


def _triangle_circumcenters(mesh: SimplicialMesh) -> NDArray[np.float64]:
    """Vectorized circumcenters of all triangles."""
    a = mesh.vertices[mesh.triangles[:, 0]]
    u = mesh.vertices[mesh.triangles[:, 1]] - a
    v = mesh.vertices[mesh.triangles[:, 2]] - a
    uu = (u * u).sum(axis=1)
    vv = (v * v).sum(axis=1)
    uv = (u * v).sum(axis=1)
    det = uu * vv - uv * uv
    alpha = (vv * (uu - uv)) / (2.0 * det)
    beta = (uu * (vv - uv)) / (2.0 * det)
    return a + alpha[:, None] * u + beta[:, None] * v


# -- dual measures ---------------------------------------------------------------


def dual_metrics(mesh: SimplicialMesh) -> DualMetrics:
    """Compute all circumcentric-dual measures of a mesh.

    Dual edge lengths are unsigned: each incident triangle contributes
    the distance from its circumcenter to the edge midpoint (zero when
    the circumcenter sits on the edge, as for right triangles).  Dual
    areas are signed quadrangle sums, so they partition the total
    surface area exactly; individual values can be nonpositive on badly
    shaped meshes, which the operator assembly rejects later.
    """
    cc = _triangle_circumcenters(mesh)

    endpoints = mesh.vertices[mesh.edges]  # (ne, 2, 3)
    primal = np.linalg.norm(endpoints[:, 1] - endpoints[:, 0], axis=1)

    midpoints = 0.5 * (endpoints[:, 0] + endpoints[:, 1])
    t0 = mesh.edge_triangles[:, 0]
    t1 = mesh.edge_triangles[:, 1]
    dual = np.linalg.norm(cc[t0] - midpoints, axis=1)
    interior = t1 >= 0
    dual[interior] += np.linalg.norm(cc[t1[interior]] - midpoints[interior], axis=1)

    tri = mesh.triangles
    pts = mesh.vertices
    normal = np.cross(
        pts[tri[:, 1]] - pts[tri[:, 0]], pts[tri[:, 2]] - pts[tri[:, 0]]
    )
    normal /= np.linalg.norm(normal, axis=1)[:, None]

    dual_area = np.zeros(mesh.n_vertices, dtype=np.float64)
    for k in range(3):
        v = pts[tri[:, k]]
        m1 = 0.5 * (v + pts[tri[:, (k + 1) % 3]])  # midpoint toward next vertex
        m2 = 0.5 * (v + pts[tri[:, (k + 2) % 3]])  # midpoint toward previous vertex
        quad = 0.5 * (
            np.cross(m1 - v, cc - v) + np.cross(cc - v, m2 - v)
        )
        np.add.at(dual_area, tri[:, k], (quad * normal).sum(axis=1))

    return DualMetrics(
        primal_edge_length=primal,
        dual_edge_length=dual,
        dual_area=dual_area,
        circumcenters=cc,
    )


def quality_report(mesh: SimplicialMesh, metrics: DualMetrics) -> WellCenteredReport:
    """Classify each triangle by where its circumcenter falls.

    The discrete operators are derived under the assumption that every
    triangle contains its circumcenter.  Right triangles put it on the
    boundary (harmless: the corresponding dual length is zero) and
    obtuse triangles push it outside, which shows up as dual-edge
    segments pointing the wrong way.  Callers decide whether to warn or
    reject.
    """
    tri = mesh.triangles
    pts = mesh.vertices
    a = pts[tri[:, 0]]
    u = pts[tri[:, 1]] - a
    v = pts[tri[:, 2]] - a
    w = metrics.circumcenters - a
    uu = (u * u).sum(axis=1)
    vv = (v * v).sum(axis=1)
    uv = (u * v).sum(axis=1)
    det = uu * vv - uv * uv
    alpha = ((w * u).sum(axis=1) * vv - (w * v).sum(axis=1) * uv) / det
    beta = ((w * v).sum(axis=1) * uu - (w * u).sum(axis=1) * uv) / det
    bary = np.stack([1.0 - alpha - beta, alpha, beta], axis=1)

    low = bary.min(axis=1)
    flags = np.full(mesh.n_triangles, CIRCUMCENTER_ON_BOUNDARY, dtype="<U8")
    flags[low > WELL_CENTERED_TOL] = CIRCUMCENTER_INTERIOR
    flags[low < -WELL_CENTERED_TOL] = CIRCUMCENTER_EXTERIOR

    exterior = np.nonzero(flags == CIRCUMCENTER_EXTERIOR)[0]
    worst = int(exterior[np.argmin(low[exterior])]) if exterior.size else None

    negative = 0
    endpoints = pts[mesh.edges]
    midpoints = 0.5 * (endpoints[:, 0] + endpoints[:, 1])
    for col in range(2):
        t = mesh.edge_triangles[:, col]
        valid = t >= 0
        cc = metrics.circumcenters[t[valid]]
        mid = midpoints[valid]
        # Vertex of the triangle opposite this edge.
        tpts = tri[t[valid]]
        is_end = (tpts[:, :, None] == mesh.edges[valid][:, None, :]).any(axis=2)
        opposite = tpts[~is_end]
        toward_inside = pts[opposite] - mid
        dot = ((cc - mid) * toward_inside).sum(axis=1)
        scale = np.linalg.norm(cc - mid, axis=1) * np.linalg.norm(
            toward_inside, axis=1
        )
        negative += int((dot < -1e-12 * scale).sum())

    return WellCenteredReport(
        flags=flags, negative_contributions=negative, worst_triangle=worst
    )
