"""File emission: VTK snapshots, probe CSV series, run manifest.

Snapshots are legacy ASCII VTK unstructured grids (triangle cells, one
point-data scalar array named "pressure") so any standard viewer can
render them.  All numeric output is formatted deterministically:
snapshots use 9 significant digits, probe series full round-trip
precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import OutputError
from .mesh import SimplicialMesh

VTK_HEADER = "# vtk DataFile Version 3.0"
VTK_TRIANGLE = 5


def write_snapshot(mesh: SimplicialMesh, fld, path) -> None:
    """Write one pressure field over the mesh as a legacy VTK file."""
    values = np.asarray(fld, dtype=np.float64)
    if values.shape != (mesh.n_vertices,):
        raise OutputError(
            f"field has shape {values.shape}, expected ({mesh.n_vertices},)"
        )
    lines = [
        VTK_HEADER,
        "pressure snapshot",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {mesh.n_vertices} double",
    ]
    lines += [f"{x:.9g} {y:.9g} {z:.9g}" for x, y, z in mesh.vertices]
    lines.append(f"CELLS {mesh.n_triangles} {4 * mesh.n_triangles}")
    lines += [f"3 {i} {j} {k}" for i, j, k in mesh.triangles]
    lines.append(f"CELL_TYPES {mesh.n_triangles}")
    lines += [str(VTK_TRIANGLE)] * mesh.n_triangles
    lines.append(f"POINT_DATA {mesh.n_vertices}")
    lines.append("SCALARS pressure double 1")
    lines.append("LOOKUP_TABLE default")
    lines += [f"{v:.9g}" for v in values]
    try:
        with open(path, "w", encoding="ascii") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as err:
        raise OutputError(f"cannot write snapshot {path}: {err}") from err


def read_snapshot(
    path,
) -> tuple[NDArray[np.float64], NDArray[np.int64], NDArray[np.float64]]:
    """Re-read a snapshot written by :func:`write_snapshot`.

    Structural checks only (section order, counts, cell types); returns
    (points, triangles, pressure values).
    """

    def fail(msg: str):
        raise OutputError(f"{path}: {msg}")

    try:
        with open(path, "r", encoding="ascii") as fh:
            lines = [line.strip() for line in fh.read().splitlines() if line.strip()]
    except OSError as err:
        raise OutputError(f"cannot read snapshot {path}: {err}") from err

    try:
        return _parse_snapshot_lines(lines, fail)
    except (IndexError, ValueError) as err:
        fail(f"truncated or malformed snapshot ({err})")


def _parse_snapshot_lines(lines, fail):
    if len(lines) < 5 or lines[0] != VTK_HEADER:
        fail("missing VTK header")
    if lines[2] != "ASCII" or lines[3] != "DATASET UNSTRUCTURED_GRID":
        fail("not an ASCII unstructured grid")

    pos = 4
    fields = lines[pos].split()
    if len(fields) != 3 or fields[0] != "POINTS" or fields[2] != "double":
        fail(f"expected POINTS header, got {lines[pos]!r}")
    n_points = int(fields[1])
    pos += 1
    points = np.array(
        [[float(t) for t in line.split()] for line in lines[pos : pos + n_points]]
    )
    if points.shape != (n_points, 3):
        fail("short POINTS block")
    pos += n_points

    fields = lines[pos].split()
    if len(fields) != 3 or fields[0] != "CELLS":
        fail(f"expected CELLS header, got {lines[pos]!r}")
    n_cells = int(fields[1])
    if int(fields[2]) != 4 * n_cells:
        fail("CELLS size entry must be 4 * cell count for triangles")
    pos += 1
    cells = []
    for line in lines[pos : pos + n_cells]:
        entry = [int(t) for t in line.split()]
        if len(entry) != 4 or entry[0] != 3:
            fail(f"non-triangle cell line {line!r}")
        cells.append(entry[1:])
    triangles = np.array(cells, dtype=np.int64).reshape(n_cells, 3)
    pos += n_cells

    fields = lines[pos].split()
    if fields[0] != "CELL_TYPES" or int(fields[1]) != n_cells:
        fail(f"expected CELL_TYPES header, got {lines[pos]!r}")
    pos += 1
    if any(line != str(VTK_TRIANGLE) for line in lines[pos : pos + n_cells]):
        fail("unexpected cell type")
    pos += n_cells

    if lines[pos].split() != ["POINT_DATA", str(n_points)]:
        fail(f"expected POINT_DATA header, got {lines[pos]!r}")
    if lines[pos + 1].split() != ["SCALARS", "pressure", "double", "1"]:
        fail(f"expected SCALARS pressure, got {lines[pos + 1]!r}")
    if lines[pos + 2] != "LOOKUP_TABLE default":
        fail(f"expected LOOKUP_TABLE, got {lines[pos + 2]!r}")
    pos += 3
    if len(lines) - pos != n_points:
        fail(f"expected {n_points} scalar lines, found {len(lines) - pos}")
    values = np.array([float(line) for line in lines[pos:]])
    if np.max(triangles, initial=0) >= n_points:
        fail("cell references point beyond POINTS block")
    return points, triangles, values


@dataclass
class ProbeRecord:
    """Pressure samples at the probe vertices after one step."""

    step: int
    time: float
    values: tuple[float, ...]


def write_probe(records: list[ProbeRecord], path, n_probes: int | None = None) -> None:
    """Write probe records as CSV with full float round-trip precision.

    Header is ``step,time,p_0,...``; the probe count is inferred from
    the records (or taken from ``n_probes`` when the list is empty).
    """
    if records:
        widths = {len(r.values) for r in records}
        if len(widths) != 1:
            raise OutputError(f"inconsistent probe record widths: {sorted(widths)}")
        width = widths.pop()
        if n_probes is not None and n_probes != width:
            raise OutputError(f"records have {width} values, expected {n_probes}")
    else:
        width = n_probes or 0
    header = "step,time" + "".join(f",p_{i}" for i in range(width))
    lines = [header]
    for r in records:
        lines.append(
            f"{r.step},{float(r.time)!r}"
            + "".join(f",{float(v)!r}" for v in r.values)
        )
    try:
        with open(path, "w", encoding="ascii", newline="") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as err:
        raise OutputError(f"cannot write probe file {path}: {err}") from err


def read_probe(path) -> tuple[list[str], NDArray[np.float64]]:
    """Read back a probe CSV: (column names, data rows)."""
    try:
        with open(path, "r", encoding="ascii") as fh:
            lines = [line for line in fh.read().splitlines() if line]
    except OSError as err:
        raise OutputError(f"cannot read probe file {path}: {err}") from err
    if not lines:
        raise OutputError(f"{path}: empty probe file")
    columns = lines[0].split(",")
    data = np.array(
        [[float(t) for t in line.split(",")] for line in lines[1:]]
    ).reshape(len(lines) - 1, len(columns))
    return columns, data


def write_manifest(path, parameters: dict, outputs: list[str]) -> None:
    """Plain-text run manifest: parameters plus the emitted file list."""
    lines = ["# decwave run manifest"]
    lines += [f"{key} = {value}" for key, value in parameters.items()]
    lines.append("[outputs]")
    lines += list(outputs)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as err:
        raise OutputError(f"cannot write manifest {path}: {err}") from err


def read_manifest(path) -> tuple[dict[str, str], list[str]]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    parameters: dict[str, str] = {}
    outputs: list[str] = []
    in_outputs = False
    for line in lines:
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        if text == "[outputs]":
            in_outputs = True
            continue
        if in_outputs:
            outputs.append(text)
        elif "=" in text:
            key, value = text.split("=", 1)
            parameters[key.strip()] = value.strip()
    return parameters, outputs
