"""Generators for the structured meshes used in tests and examples.

Run ``python -m decwave.meshgen <directory>`` to (re)write the mesh
files shipped with the example configs.
"""

from __future__ import annotations

import sys

import numpy as np
from numpy.typing import NDArray


def square_grid(
    n: int, size: float = 1.0
) -> tuple[NDArray[np.float64], NDArray[np.int64]]:
    """(n+1)^2 vertices on [0, size]^2 at z=0, each cell split by the
    same lower-left-to-upper-right diagonal (2 n^2 right triangles)."""
    if n < 1:
        raise ValueError("need at least one cell")
    step = size / n
    coords = np.arange(n + 1, dtype=np.float64) * step
    xs, ys = np.meshgrid(coords, coords)  # row-major: index = iy*(n+1) + ix
    vertices = np.column_stack([xs.ravel(), ys.ravel(), np.zeros((n + 1) ** 2)])

    ix, iy = np.meshgrid(np.arange(n), np.arange(n))
    v00 = (iy * (n + 1) + ix).ravel()
    v10 = v00 + 1
    v01 = v00 + (n + 1)
    v11 = v01 + 1
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    return vertices, np.concatenate([lower, upper]).astype(np.int64)


def grid_vertex(n: int, ix: int, iy: int) -> int:
    """Flat index of grid vertex (ix, iy) for an n-cell square grid."""
    return iy * (n + 1) + ix


_ICOSAHEDRON_VERTICES = [
    (-1, 1.618033988749895, 0), (1, 1.618033988749895, 0),
    (-1, -1.618033988749895, 0), (1, -1.618033988749895, 0),
    (0, -1, 1.618033988749895), (0, 1, 1.618033988749895),
    (0, -1, -1.618033988749895), (0, 1, -1.618033988749895),
    (1.618033988749895, 0, -1), (1.618033988749895, 0, 1),
    (-1.618033988749895, 0, -1), (-1.618033988749895, 0, 1),
]

_ICOSAHEDRON_FACES = [
    (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
    (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
    (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
    (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
]


def icosphere(
    subdivisions: int, radius: float = 1.0
) -> tuple[NDArray[np.float64], NDArray[np.int64]]:
    """Subdivided icosahedron projected to a sphere.

    Vertex counts per level: 12, 42, 162, 642, 2562, ...
    """
    if subdivisions < 0:
        raise ValueError("subdivisions must be nonnegative")
    vertices = [np.array(v, dtype=np.float64) for v in _ICOSAHEDRON_VERTICES]
    faces = list(_ICOSAHEDRON_FACES)

    for _ in range(subdivisions):
        midpoint: dict[tuple[int, int], int] = {}

        def split(i: int, j: int) -> int:
            key = (min(i, j), max(i, j))
            if key not in midpoint:
                vertices.append(0.5 * (vertices[i] + vertices[j]))
                midpoint[key] = len(vertices) - 1
            return midpoint[key]

        next_faces = []
        for a, b, c in faces:
            ab, bc, ca = split(a, b), split(b, c), split(c, a)
            next_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = next_faces

    pts = np.array(vertices)
    pts *= radius / np.linalg.norm(pts, axis=1)[:, None]
    return pts, np.array(faces, dtype=np.int64)


def off_text(vertices: NDArray[np.float64], triangles: NDArray[np.int64]) -> str:
    """Serialize a mesh as ASCII OFF with full float precision."""
    lines = ["OFF", f"{len(vertices)} {len(triangles)} 0"]
    for x, y, z in vertices:
        lines.append(f"{float(x)!r} {float(y)!r} {float(z)!r}")
    for i, j, k in triangles:
        lines.append(f"3 {i} {j} {k}")
    return "\n".join(lines) + "\n"


def write_off(path, vertices, triangles) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(off_text(np.asarray(vertices, dtype=np.float64), triangles))


def main(argv=None) -> int:
    import os

    args = sys.argv[1:] if argv is None else argv
    if len(args) != 1:
        print("usage: python -m decwave.meshgen <output-directory>", file=sys.stderr)
        return 2
    out = args[0]
    os.makedirs(out, exist_ok=True)
    write_off(os.path.join(out, "grid_33.off"), *square_grid(32))
    write_off(os.path.join(out, "icosphere_2562.off"), *icosphere(4))
    print(f"wrote grid_33.off and icosphere_2562.off to {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
