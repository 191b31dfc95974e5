import io
import math

import numpy as np
import pytest

from decwave import SimplicialMesh, dual_metrics, load_mesh
from decwave.meshgen import icosphere, off_text, square_grid


def make_mesh(vertices, triangles) -> SimplicialMesh:
    return SimplicialMesh(np.asarray(vertices, dtype=float), triangles)


def single_triangle() -> SimplicialMesh:
    return make_mesh([(0, 0, 0), (1, 0, 0), (0, 1, 0)], [(0, 1, 2)])


def equilateral_triangle() -> SimplicialMesh:
    return make_mesh(
        [(0, 0, 0), (1, 0, 0), (0.5, math.sqrt(3.0) / 2.0, 0)], [(0, 1, 2)]
    )


def two_triangle_square() -> SimplicialMesh:
    """Unit square split by the (0,0)-(1,1) diagonal: two right triangles."""
    return make_mesh(
        [(0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0)], [(0, 1, 2), (0, 2, 3)]
    )


def hexagon_fan() -> SimplicialMesh:
    """Six unit equilateral triangles around a center vertex."""
    ring = [
        (math.cos(k * math.pi / 3.0), math.sin(k * math.pi / 3.0), 0.0)
        for k in range(6)
    ]
    triangles = [(0, 1 + k, 1 + (k + 1) % 6) for k in range(6)]
    return make_mesh([(0.0, 0.0, 0.0)] + ring, triangles)


def grid_mesh(n: int, size: float = 1.0) -> SimplicialMesh:
    return SimplicialMesh(*square_grid(n, size))


def sphere_mesh(subdivisions: int = 2) -> SimplicialMesh:
    return SimplicialMesh(*icosphere(subdivisions))


def obtuse_triangle() -> SimplicialMesh:
    return make_mesh([(0, 0, 0), (4, 0, 0), (2, 0.5, 0)], [(0, 1, 2)])


def roundtrip_off(mesh: SimplicialMesh) -> SimplicialMesh:
    return load_mesh(io.StringIO(off_text(mesh.vertices, mesh.triangles)))


@pytest.fixture
def unit_grid_8():
    return grid_mesh(8)


@pytest.fixture
def metrics_grid_8(unit_grid_8):
    return dual_metrics(unit_grid_8)
