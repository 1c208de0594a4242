"""Potentials-based FDTD solver with a discrete energy-conservation audit."""

from .constants import CHI0, EPS0, MU0
from .grid import (
    A_DOT_PERP,
    B_TAN,
    FACES,
    SCALAR_GRAD_PERP,
    GridError,
    GridIndex,
    GridSpec,
    HangingSite,
    build_grid,
    dual_weight,
    enumerate_hanging,
)
from .materials import (
    MaterialError,
    MaterialMaps,
    load_voxel_cells,
    materials_from_cells,
    uniform_materials,
)
from .scalar import (
    ScalarSim,
    ScalarState,
    SolverError,
    init_scalar,
    reconstruct_phi,
    scalar_outputs,
    step_scalar,
)
from .vector import VectorSim, VectorState, init_vector, step_vector, vector_outputs
from .dissipation import (
    BalanceReport,
    DissipationError,
    PdResult,
    SystemMatrices,
    assemble_system,
    audit_balance,
    cfl_limit,
    check_positive_definite,
    dense_oracle_step,
    storage,
    storage_scalar,
    storage_vector,
    supply_scalar,
    supply_vector,
)
from .cavity import (
    CavityError,
    CavityMode,
    cavity_boundary_drive,
    cavity_initial_state,
    cavity_params,
    eval_cavity,
    exact_energies,
)
from .harness import (
    ConfigError,
    MaterialSpec,
    RunConfig,
    RunSummary,
    TimeSeriesRow,
    load_config,
    parse_config,
    read_timeseries_csv,
    run_experiment,
    write_timeseries_csv,
)
from .materials import read_voxel_pairs

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
