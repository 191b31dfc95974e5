"""Simulation configuration files.

The format is a flat ``key = value`` list with bracketed section
headers; ``#`` starts a comment.  Keys before any section control the
run, ``[material]`` sets the default medium, each ``[region]`` section
adds one geometric override (applied in file order, later sections win
on overlap), ``[source]`` defines the injected signal and each
``[probe]`` section one recording point::

    mesh = meshes/grid_33.off
    scheme = explicit            # explicit | implicit | semi_implicit
    dt_factor = 0.9              # or: dt = 1.0e-5  (exactly one of the two)
    steps = 400
    output_every = 20
    output_dir = out
    boundary = natural           # natural | dirichlet_zero

    [material]                   # defaults: c0=340 rho0=10000 delta=0.01 beta=1
    c0 = 340.0

    [region]                     # box needs min/max, sphere center/radius
    shape = box
    min = 0.5 -1.0 -1.0
    max = 2.0  2.0  2.0
    c0 = 3400.0                  # unset parameters inherit [material]

    [source]
    position = 0.25 0.5 0.0      # snapped to the nearest mesh vertex
    amplitude = 1.0
    sigma = 8.0e-4
    omega = 4000.0
    t0 = 4.8e-3
    mode = additive              # additive | hard

    [probe]
    position = 0.75 0.5 0.0

All structural problems are reported with their line number.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

from .errors import ConfigError
from .media import Box, MaterialParams, RegionSpec, Sphere
from .solver import BOUNDARIES, BOUNDARY_NATURAL, EXPLICIT, SCHEMES

DEFAULT_MATERIAL = {"c0": 340.0, "rho0": 10000.0, "delta": 0.01, "beta": 1.0}
DEFAULT_DT_FACTOR = 0.9

_GLOBAL_KEYS = {
    "mesh", "scheme", "dt", "dt_factor", "steps", "output_every",
    "output_dir", "boundary", "strict_mesh",
}
_MATERIAL_KEYS = {"c0", "rho0", "delta", "beta"}
_REGION_KEYS = _MATERIAL_KEYS | {"shape", "min", "max", "center", "radius"}
_SOURCE_KEYS = {"position", "amplitude", "sigma", "omega", "t0", "mode"}
_PROBE_KEYS = {"position"}
_SECTIONS = {"material", "region", "source", "probe"}


@dataclass
class SourcePoint:
    """Source description at config level: a point, snapped to the
    nearest vertex when the mesh is loaded."""

    position: tuple[float, float, float]
    amplitude: float = 1.0
    sigma: float = 1.0
    omega: float = 1.0
    t0: float = 0.0
    mode: str = "additive"


@dataclass
class SimulationConfig:
    mesh_path: str
    steps: int
    scheme: str = EXPLICIT
    dt: float | None = None
    dt_factor: float | None = DEFAULT_DT_FACTOR
    output_every: int = 1
    output_dir: str = "output"
    boundary: str = BOUNDARY_NATURAL
    strict_mesh: bool = False
    material: RegionSpec = field(
        default_factory=lambda: RegionSpec(MaterialParams(**DEFAULT_MATERIAL))
    )
    source: SourcePoint | None = None
    probes: list[tuple[float, float, float]] = field(default_factory=list)


class _Block:
    """One section's key/value pairs with their line numbers."""

    def __init__(self, name: str, line: int):
        self.name = name
        self.line = line
        self.pairs: dict[str, tuple[str, int]] = {}

    def set(self, key: str, value: str, line: int):
        if key in self.pairs:
            where = f"[{self.name}]" if self.name else "the top level"
            raise ConfigError(f"duplicate key {key!r} in {where}", line=line)
        self.pairs[key] = (value, line)

    def take(self, key: str, default=None) -> tuple[str, int] | None:
        return self.pairs.get(key, default)


def _tokenize(source: io.TextIOBase) -> list[_Block]:
    blocks = [_Block("", 0)]  # global block
    for lineno, raw in enumerate(source.read().splitlines(), start=1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        if text.startswith("[") and text.endswith("]"):
            name = text[1:-1].strip()
            if name not in _SECTIONS:
                raise ConfigError(f"unknown section [{name}]", line=lineno)
            blocks.append(_Block(name, lineno))
            continue
        if "=" not in text:
            raise ConfigError(f"expected 'key = value', got {text!r}", line=lineno)
        key, value = (part.strip() for part in text.split("=", 1))
        if not key or not value:
            raise ConfigError(f"expected 'key = value', got {text!r}", line=lineno)
        blocks[-1].set(key, value, lineno)
    return blocks


def _check_keys(block: _Block, allowed: set[str]) -> None:
    for key, (_, lineno) in block.pairs.items():
        if key not in allowed:
            where = f"[{block.name}]" if block.name else "the top level"
            raise ConfigError(f"unknown key {key!r} in {where}", line=lineno)


def _float(block: _Block, key: str, default: float | None = None) -> float | None:
    got = block.take(key)
    if got is None:
        return default
    value, lineno = got
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{key} must be a number, got {value!r}", line=lineno) from None


def _int(block: _Block, key: str, default: int | None = None) -> int | None:
    got = block.take(key)
    if got is None:
        return default
    value, lineno = got
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {value!r}", line=lineno) from None


def _point(block: _Block, key: str) -> tuple[float, float, float] | None:
    got = block.take(key)
    if got is None:
        return None
    value, lineno = got
    parts = value.split()
    if len(parts) != 3:
        raise ConfigError(f"{key} must be 3 numbers, got {value!r}", line=lineno)
    try:
        x, y, z = (float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"{key} must be 3 numbers, got {value!r}", line=lineno) from None
    return (x, y, z)


def _choice(block: _Block, key: str, options, default: str) -> str:
    got = block.take(key)
    if got is None:
        return default
    value, lineno = got
    if value not in options:
        raise ConfigError(
            f"{key} must be one of {', '.join(options)}; got {value!r}", line=lineno
        )
    return value


def _material_params(block: _Block, fallback: dict[str, float]) -> MaterialParams:
    values = {k: _float(block, k, fallback[k]) for k in _MATERIAL_KEYS}
    try:
        return MaterialParams(**values)
    except ValueError as err:
        raise ConfigError(str(err), line=block.line) from None


def parse_config(source: io.TextIOBase) -> SimulationConfig:
    """Parse and fully validate a configuration stream."""
    blocks = _tokenize(source)
    top = blocks[0]
    _check_keys(top, _GLOBAL_KEYS)

    got = top.take("mesh")
    if got is None:
        raise ConfigError("missing required key 'mesh'")
    mesh_path = got[0]

    steps = _int(top, "steps")
    if steps is None:
        raise ConfigError("missing required key 'steps'")
    if steps < 1:
        raise ConfigError(f"steps must be >= 1, got {steps}", line=top.take("steps")[1])

    dt = _float(top, "dt")
    dt_factor = _float(top, "dt_factor")
    if dt is not None and dt_factor is not None:
        raise ConfigError(
            "give either dt or dt_factor, not both", line=top.take("dt_factor")[1]
        )
    if dt is not None and dt <= 0.0:
        raise ConfigError(f"dt must be positive, got {dt}", line=top.take("dt")[1])
    if dt_factor is not None and dt_factor <= 0.0:
        raise ConfigError(
            f"dt_factor must be positive, got {dt_factor}",
            line=top.take("dt_factor")[1],
        )
    if dt is None and dt_factor is None:
        dt_factor = DEFAULT_DT_FACTOR

    output_every = _int(top, "output_every", 1)
    if output_every < 1:
        raise ConfigError(
            f"output_every must be >= 1, got {output_every}",
            line=top.take("output_every")[1],
        )

    strict = _choice(top, "strict_mesh", ("true", "false"), "false") == "true"

    config = SimulationConfig(
        mesh_path=mesh_path,
        steps=steps,
        scheme=_choice(top, "scheme", SCHEMES, EXPLICIT),
        dt=dt,
        dt_factor=dt_factor,
        output_every=output_every,
        output_dir=top.take("output_dir", ("output", 0))[0],
        boundary=_choice(top, "boundary", BOUNDARIES, BOUNDARY_NATURAL),
        strict_mesh=strict,
    )

    material_blocks = [b for b in blocks[1:] if b.name == "material"]
    if len(material_blocks) > 1:
        raise ConfigError(
            "only one [material] section allowed", line=material_blocks[1].line
        )
    defaults = dict(DEFAULT_MATERIAL)
    if material_blocks:
        _check_keys(material_blocks[0], _MATERIAL_KEYS)
        default_params = _material_params(material_blocks[0], defaults)
    else:
        default_params = MaterialParams(**defaults)
    default_values = {
        "c0": default_params.c0, "rho0": default_params.rho0,
        "delta": default_params.delta, "beta": default_params.beta,
    }

    overrides = []
    for block in blocks[1:]:
        if block.name != "region":
            continue
        _check_keys(block, _REGION_KEYS)
        shape = _choice(block, "shape", ("box", "sphere"), "box")
        params = _material_params(block, default_values)
        try:
            if shape == "box":
                lo, hi = _point(block, "min"), _point(block, "max")
                if lo is None or hi is None:
                    raise ConfigError(
                        "box region needs 'min' and 'max'", line=block.line
                    )
                overrides.append((Box(lo, hi), params))
            else:
                center = _point(block, "center")
                radius = _float(block, "radius")
                if center is None or radius is None:
                    raise ConfigError(
                        "sphere region needs 'center' and 'radius'", line=block.line
                    )
                overrides.append((Sphere(center, radius), params))
        except ValueError as err:
            raise ConfigError(str(err), line=block.line) from None
    config.material = RegionSpec(default=default_params, overrides=overrides)

    source_blocks = [b for b in blocks[1:] if b.name == "source"]
    if len(source_blocks) > 1:
        raise ConfigError(
            "only one [source] section allowed", line=source_blocks[1].line
        )
    if source_blocks:
        block = source_blocks[0]
        _check_keys(block, _SOURCE_KEYS)
        position = _point(block, "position")
        if position is None:
            raise ConfigError("source needs a 'position'", line=block.line)
        sigma = _float(block, "sigma", 1.0)
        if sigma <= 0.0:
            raise ConfigError(
                f"sigma must be positive, got {sigma}", line=block.take("sigma")[1]
            )
        config.source = SourcePoint(
            position=position,
            amplitude=_float(block, "amplitude", 1.0),
            sigma=sigma,
            omega=_float(block, "omega", 1.0),
            t0=_float(block, "t0", 0.0),
            mode=_choice(block, "mode", ("additive", "hard"), "additive"),
        )

    for block in blocks[1:]:
        if block.name != "probe":
            continue
        _check_keys(block, _PROBE_KEYS)
        position = _point(block, "position")
        if position is None:
            raise ConfigError("probe needs a 'position'", line=block.line)
        config.probes.append(position)

    return config


def parse_config_file(path) -> SimulationConfig:
    with open(path, "r", encoding="utf-8") as stream:
        return parse_config(stream)
