"""decwave: finite-amplitude ultrasound propagation on triangle meshes.

Solves a Westervelt-type nonlinear wave equation on flat triangulations
and curved surface meshes with discrete-exterior-calculus operators and
explicit / implicit / semi-implicit time stepping.
"""

__version__ = "0.1.0"

from .config import SimulationConfig, SourcePoint, parse_config, parse_config_file
from .dec import (
    LaplacianOperator,
    assemble_laplacian,
    hodge_star0,
    hodge_star1,
    incidence_d0,
    laplacian_stencil_reference,
)
from .driver import RunSummary, run_simulation
from .errors import (
    AssemblyError,
    ConfigError,
    DecwaveError,
    DivergenceError,
    LinearSolveError,
    MeshError,
    OutputError,
)
from .media import (
    Box,
    MaterialField,
    MaterialParams,
    RegionSpec,
    Sphere,
    assign_regions,
    material_at,
)
from .mesh import (
    DualMetrics,
    SimplicialMesh,
    WellCenteredReport,
    circumcenter,
    dual_metrics,
    load_mesh,
    load_mesh_file,
    quality_report,
)
from .output import ProbeRecord, read_snapshot, write_probe, write_snapshot
from .solver import (
    LinearSolveConfig,
    SolverState,
    SourceSpec,
    advance,
    init_state,
    inject_source,
    nonlinear_rhs_L,
    source_signal,
    stable_dt,
    step_explicit,
    step_implicit,
    step_semi_implicit,
)

__all__ = [name for name in dir() if not name.startswith("_")]
