"""Command line entry points.

Subcommands:

* ``decwave run --config FILE``       run a simulation
* ``decwave check-mesh --mesh FILE``  mesh quality report
* ``decwave stable-dt --config FILE`` print the explicit stability bound

Relative paths inside a config file (mesh, output_dir) are resolved
against the config file's directory.  Exit status is 0 on success and
nonzero on any error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from . import __version__, dec, driver, mesh as meshmod, solver
from .config import SimulationConfig, parse_config_file
from .errors import DecwaveError
from .media import assign_regions


def _load_config(path: str) -> SimulationConfig:
    config = parse_config_file(path)
    base = os.path.dirname(os.path.abspath(path))
    if not os.path.isabs(config.mesh_path):
        config.mesh_path = os.path.join(base, config.mesh_path)
    if not os.path.isabs(config.output_dir):
        config.output_dir = os.path.join(base, config.output_dir)
    return config


def _cmd_run(args) -> int:
    summary = driver.run_simulation(_load_config(args.config))
    print(f"steps run:        {summary.steps_run}")
    print(f"dt:               {summary.dt:.6e} s (stable bound {summary.stable_dt:.6e} s)")
    print(f"final max |p|:    {summary.final_max_abs_pressure:.6e} Pa")
    print(f"peak max |p|:     {summary.max_abs_pressure:.6e} Pa")
    print(f"wall time:        {summary.wall_time_s:.3f} s")
    print(f"outputs ({len(summary.outputs)} files) in {summary.output_dir}")
    return 0


def _cmd_check_mesh(args) -> int:
    grid = meshmod.load_mesh_file(args.mesh)
    metrics = meshmod.dual_metrics(grid)
    report = meshmod.quality_report(grid, metrics)
    counts = report.counts()
    print(grid)
    print(f"total area:        {grid.total_area():.9g} m^2")
    print(f"dual area sum:     {metrics.dual_area.sum():.9g} m^2")
    print(f"boundary edges:    {int(grid.edge_is_boundary.sum())}")
    print(f"circumcenters:     {counts['interior']} interior, "
          f"{counts['boundary']} on-boundary, {counts['exterior']} exterior")
    print(f"negative dual-edge contributions: {report.negative_contributions}")
    if report.worst_triangle is not None:
        print(f"worst triangle:    {report.worst_triangle}")
    if args.strict and not report.is_well_centered:
        print("FAIL: mesh has exterior circumcenters", file=sys.stderr)
        return 1
    return 0


def _cmd_stable_dt(args) -> int:
    config = _load_config(args.config)
    grid = meshmod.load_mesh_file(config.mesh_path)
    metrics = meshmod.dual_metrics(grid)
    media = assign_regions(grid, config.material)
    dec.assemble_laplacian(grid, metrics)  # surfaces assembly problems early
    bound = solver.stable_dt(grid, metrics, media)
    dt = config.dt if config.dt is not None else config.dt_factor * bound
    print(f"stable dt bound:  {bound!r} s")
    print(f"run would use dt: {dt!r} s")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="decwave",
        description="Nonlinear ultrasound propagation on triangle meshes",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a configured simulation")
    p_run.add_argument("--config", required=True, help="configuration file")
    p_run.set_defaults(func=_cmd_run)

    p_check = sub.add_parser("check-mesh", help="print a mesh quality report")
    p_check.add_argument("--mesh", required=True, help="OFF mesh file")
    p_check.add_argument(
        "--strict", action="store_true",
        help="fail if any circumcenter falls outside its triangle",
    )
    p_check.set_defaults(func=_cmd_check_mesh)

    p_dt = sub.add_parser("stable-dt", help="print the explicit stability bound")
    p_dt.add_argument("--config", required=True, help="configuration file")
    p_dt.set_defaults(func=_cmd_stable_dt)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(format="%(levelname)s %(message)s", level=logging.INFO)
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DecwaveError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
