import numpy as np
import pytest

from conftest import (
    inhomogeneous_materials,
    random_vector_inputs,
    random_vector_state,
    small_grid,
    vacuum,
)
from pfdtd import (
    A_DOT_PERP,
    B_TAN,
    EPS0,
    MU0,
    GridSpec,
    SolverError,
    VectorState,
    assemble_system,
    audit_balance,
    build_grid,
    cfl_limit,
    check_positive_definite,
    dense_oracle_step,
    init_vector,
    step_vector,
    storage_vector,
    vector_outputs,
)


def stable_dt(grid, factor=0.9):
    return factor * cfl_limit(grid.spec, EPS0, MU0)


def test_zero_state_is_fixed_point():
    grid = small_grid()
    sim = init_vector(grid, vacuum(grid), stable_dt(grid), VectorState.zeros(grid))
    y_tan, y_kappa = step_vector(sim)
    assert np.all(y_tan == 0.0) and np.all(y_kappa == 0.0)
    assert storage_vector(sim) == 0.0


def test_init_validation():
    grid = small_grid()
    with pytest.raises(SolverError):
        init_vector(grid, vacuum(grid), -1e-12, VectorState.zeros(grid))
    with pytest.raises(SolverError):
        init_vector(grid, vacuum(grid), 1e-12, VectorState.zeros(small_grid(3, 3, 3)))


def test_input_validation():
    grid = small_grid()
    sim = init_vector(grid, vacuum(grid), stable_dt(grid), VectorState.zeros(grid))
    with pytest.raises(SolverError):
        sim.step(np.zeros(sim.n_perp + 1), np.zeros(sim.n_btan))
    bad = np.zeros(sim.n_btan)
    bad[-1] = np.inf
    with pytest.raises(SolverError):
        sim.step(np.zeros(sim.n_perp), bad)


def _single_btan_response(face, host_axis, b_axis, host_ijk):
    """Change of the host-edge rate after one step driven by a unit
    tangential-B sample at one site, zero state."""
    dx, dy, dz = 1.0, 1.0, 1.0
    grid = build_grid(GridSpec(4, 4, 4, dx, dy, dz))
    mats = vacuum(grid)
    dt = stable_dt(grid)
    sim = init_vector(grid, mats, dt, VectorState.zeros(grid))
    sites = grid.hanging(B_TAN)
    idx = next(i for i, s in enumerate(sites)
               if s.face == face and s.axis == b_axis and s.host_ijk == host_ijk)
    u_btan = np.zeros(sim.n_btan)
    u_btan[idx] = 1.0
    sim.step(np.zeros(sim.n_perp), u_btan)
    a = (sim.state.ax, sim.state.ay, sim.state.az)[host_axis]
    return dt, a[host_ijk]


def test_bottom_wall_tangential_b_coefficients():
    # bottom wall, interior host edges: the hanging B_y sample feeds the
    # x-directed rate with weight -dx*dy/mu inside the edge equation;
    # the hanging B_x sample feeds the y-directed rate with +dx*dy/mu.
    # With unit cells the edge equation weight is eps*(dy*dz/2)*dx.
    dt, dax = _single_btan_response("z-", host_axis=0, b_axis=1, host_ijk=(1, 2, 0))
    expect = -dt * (1.0 / MU0) / (EPS0 * 0.5)
    assert dax == pytest.approx(expect, rel=1e-14)

    dt, day = _single_btan_response("z-", host_axis=1, b_axis=0, host_ijk=(2, 1, 0))
    assert day == pytest.approx(dt * (1.0 / MU0) / (EPS0 * 0.5), rel=1e-14)


def test_top_wall_signs_flip():
    dt, dax = _single_btan_response("z+", host_axis=0, b_axis=1, host_ijk=(1, 2, 4))
    assert dax == pytest.approx(dt * (1.0 / MU0) / (EPS0 * 0.5), rel=1e-14)


def test_normal_rate_input_mirrors_scalar_with_minus():
    # a unit normal dA/dt sample on the x- wall drives kappa at its host
    # node by -sign*area*eps/(chi*V'') * dt = +dt*area*eps/(chi*V'')
    grid = build_grid(GridSpec(2, 2, 2, 1.0, 1.0, 1.0))
    mats = vacuum(grid)
    dt = stable_dt(grid)
    sim = init_vector(grid, mats, dt, VectorState.zeros(grid))
    sites = grid.hanging(A_DOT_PERP)
    idx = next(i for i, s in enumerate(sites)
               if s.face == "x-" and s.host_ijk == (0, 1, 1))
    u = np.zeros(sim.n_perp)
    u[idx] = 1.0
    sim.step(u, np.zeros(sim.n_btan))
    area = 1.0  # interior wall node, unit cells
    v_dual = 0.5
    chi = MU0 * EPS0 ** 2
    expect = dt * area * EPS0 / (chi * v_dual)
    assert sim.state.kappa[0, 1, 1] == pytest.approx(expect, rel=1e-14)


@pytest.mark.parametrize("homogeneous", [True, False])
def test_matches_dense_oracle(homogeneous):
    rng = np.random.default_rng(23)
    grid = small_grid()
    mats = vacuum(grid) if homogeneous else inhomogeneous_materials(grid, rng)
    dt = stable_dt(grid)
    sys = assemble_system(grid, mats, dt, "vector")
    state0 = random_vector_state(grid, rng)
    x = state0.to_vector()
    sim = init_vector(grid, mats, dt, state0)
    for _ in range(20):
        u_perp, u_btan = random_vector_inputs(grid, rng, sim.n_perp, sim.n_btan)
        sim.step(u_perp, u_btan)
        x = dense_oracle_step(sys, x, np.concatenate([u_perp, u_btan]))
        rel = np.linalg.norm(sim.state.to_vector() - x) / np.linalg.norm(x)
        assert rel <= 1e-12


@pytest.mark.parametrize("dt_factor", [0.5, 0.999, 1.001])
def test_energy_balance_any_dt(dt_factor):
    rng = np.random.default_rng(31)
    grid = small_grid(2, 3, 2)
    mats = inhomogeneous_materials(grid, rng)
    dt = dt_factor * cfl_limit(grid.spec, EPS0, MU0)
    dim = sum(grid.n_edges) + sum(grid.n_faces) + grid.n_nodes
    sim = init_vector(grid, mats, dt, VectorState.from_vector(
        grid, rng.standard_normal(dim)))
    n_perp, n_btan = sim.n_perp, sim.n_btan
    rep = audit_balance(
        sim, lambda n: (rng.standard_normal(n_perp) * 1e-8,
                        rng.standard_normal(n_btan) * 1e-8), 25)
    assert rep.max_abs_residual <= 1e-12 * rep.max_abs_storage


def test_zero_input_energy_constant_inhomogeneous():
    rng = np.random.default_rng(37)
    grid = build_grid(GridSpec(4, 4, 4, 0.02, 0.025, 0.03))
    mats = inhomogeneous_materials(grid, rng, smooth=True)
    dt = 0.95 * cfl_limit(grid.spec, EPS0, MU0)
    assert check_positive_definite(assemble_system(grid, mats, dt, "vector")).pd
    dim = sum(grid.n_edges) + sum(grid.n_faces) + grid.n_nodes
    sim = init_vector(grid, mats, dt, VectorState.from_vector(
        grid, rng.standard_normal(dim)))
    e0 = storage_vector(sim)
    rep = audit_balance(sim, None, 1000)
    assert np.max(np.abs(rep.e_after - e0)) <= 1e-12 * abs(e0)


def test_outputs_match_assembled_observation_matrix():
    rng = np.random.default_rng(41)
    grid = small_grid()
    mats = vacuum(grid)
    dt = stable_dt(grid)
    sys = assemble_system(grid, mats, dt, "vector")
    x = rng.standard_normal(sys.n_state)
    sim = init_vector(grid, mats, dt, VectorState.from_vector(grid, x))
    y_tan, y_kappa = vector_outputs(sim)
    y = sys.L_out.T @ x
    np.testing.assert_array_equal(y_kappa, y[:sim.n_perp])
    np.testing.assert_array_equal(y_tan, y[sim.n_perp:])


def test_outputs_gather_hosts():
    rng = np.random.default_rng(43)
    grid = small_grid(2, 3, 2)
    state = VectorState.zeros(grid)
    state.kappa[:] = rng.standard_normal(grid.node_shape)
    state.ax[:] = rng.standard_normal(grid.edge_shapes[0])
    state.ay[:] = rng.standard_normal(grid.edge_shapes[1])
    state.az[:] = rng.standard_normal(grid.edge_shapes[2])
    sim = init_vector(grid, vacuum(grid), stable_dt(grid), state)
    y_tan, y_kappa = vector_outputs(sim)
    a = (state.ax, state.ay, state.az)
    for idx, s in enumerate(grid.hanging(B_TAN)):
        host_axis = 3 - "xyz".index(s.face[0]) - s.axis
        assert y_tan[idx] == a[host_axis][s.host_ijk]
    for idx, s in enumerate(grid.hanging(A_DOT_PERP)):
        assert y_kappa[idx] == state.kappa[s.host_ijk]


def test_storage_single_interior_flux_sample():
    # unit B on one interior secondary edge of a unit-cell grid stores
    # B^2/(2 mu) (dual area and length are both 1 there)
    grid = build_grid(GridSpec(2, 2, 2, 1.0, 1.0, 1.0))
    state = VectorState.zeros(grid)
    state.bx[1, 0, 0] = 1.0  # secondary x edge strictly inside in x
    sim = init_vector(grid, vacuum(grid), stable_dt(grid), state)
    assert storage_vector(sim) == pytest.approx(0.5 / MU0, rel=1e-15)
    assert storage_vector(sim) == pytest.approx(3.9789e5, rel=1e-4)


def test_storage_matches_quadratic_form():
    rng = np.random.default_rng(47)
    grid = small_grid()
    mats = inhomogeneous_materials(grid, rng)
    dt = stable_dt(grid)
    sys = assemble_system(grid, mats, dt, "vector")
    x = rng.standard_normal(sys.n_state)
    sim = init_vector(grid, mats, dt, VectorState.from_vector(grid, x))
    assert storage_vector(sim) == pytest.approx(
        0.5 * dt * float(x @ (sys.R @ x)), rel=1e-12)
