import numpy as np
import pytest

from conftest import inhomogeneous_materials, random_scalar_state, small_grid, vacuum
from pfdtd import (
    EPS0,
    MU0,
    SCALAR_GRAD_PERP,
    GridSpec,
    ScalarState,
    SolverError,
    assemble_system,
    audit_balance,
    build_grid,
    cfl_limit,
    check_positive_definite,
    dense_oracle_step,
    init_scalar,
    reconstruct_phi,
    scalar_outputs,
    step_scalar,
    storage_scalar,
)


def stable_dt(grid, factor=0.9):
    return factor * cfl_limit(grid.spec, EPS0, MU0)


def test_zero_state_is_fixed_point():
    grid = small_grid()
    sim = init_scalar(grid, vacuum(grid), stable_dt(grid), ScalarState.zeros(grid))
    y = step_scalar(sim, np.zeros(sim.n_sites))
    assert np.all(y == 0.0)
    assert np.all(sim.state.p == 0.0)
    assert np.all(sim.state.gx == 0.0)
    assert storage_scalar(sim) == 0.0


def test_uniform_rate_is_invariant():
    # spatially constant p with zero gradient: all fluxes cancel,
    # including at the walls (u = 0 there contributes nothing)
    grid = small_grid(3, 2, 2)
    state = ScalarState.zeros(grid)
    state.p[:] = 7.5
    sim = init_scalar(grid, vacuum(grid), stable_dt(grid), state)
    step_scalar(sim, np.zeros(sim.n_sites))
    np.testing.assert_array_equal(sim.state.p, np.full(grid.node_shape, 7.5))
    assert np.all(sim.state.gx == 0.0)
    assert np.all(sim.state.gy == 0.0)
    assert np.all(sim.state.gz == 0.0)


def test_init_validation():
    grid = small_grid()
    state = ScalarState.zeros(grid)
    with pytest.raises(SolverError):
        init_scalar(grid, vacuum(grid), 0.0, state)
    bad = ScalarState.zeros(small_grid(3, 3, 3))
    with pytest.raises(SolverError):
        init_scalar(grid, vacuum(grid), 1e-12, bad)


def test_input_validation():
    grid = small_grid()
    sim = init_scalar(grid, vacuum(grid), stable_dt(grid), ScalarState.zeros(grid))
    with pytest.raises(SolverError):
        sim.step(np.zeros(sim.n_sites - 1))
    bad = np.zeros(sim.n_sites)
    bad[0] = np.nan
    with pytest.raises(SolverError):
        sim.step(bad)


@pytest.mark.parametrize("homogeneous", [True, False])
def test_matches_dense_oracle(homogeneous):
    rng = np.random.default_rng(11)
    grid = small_grid()
    mats = vacuum(grid) if homogeneous else inhomogeneous_materials(grid, rng)
    dt = stable_dt(grid)
    sys = assemble_system(grid, mats, dt, "scalar")
    state0 = random_scalar_state(grid, rng)
    x = state0.to_vector()
    sim = init_scalar(grid, mats, dt, state0)
    for _ in range(20):
        u = rng.standard_normal(sys.n_input)
        sim.step(u)
        x = dense_oracle_step(sys, x, u)
        rel = np.linalg.norm(sim.state.to_vector() - x) / np.linalg.norm(x)
        assert rel <= 1e-12


@pytest.mark.parametrize("dt_factor", [0.5, 0.999, 1.001])
def test_energy_balance_any_dt(dt_factor):
    # the discrete balance is exact for any time step, including just
    # above the stability limit (where the state starts to grow and
    # rounding eventually swamps the identity, hence few steps)
    rng = np.random.default_rng(3)
    grid = small_grid(3, 3, 2)
    mats = inhomogeneous_materials(grid, rng)
    dt = dt_factor * cfl_limit(grid.spec, EPS0, MU0)
    x0 = rng.standard_normal(sum(grid.n_edges) + grid.n_nodes)
    sim = init_scalar(grid, mats, dt, ScalarState.from_vector(grid, x0))
    n_sites = sim.n_sites
    rep = audit_balance(sim, lambda n: rng.standard_normal(n_sites) * 1e-8, 25)
    assert rep.max_abs_residual <= 1e-12 * rep.max_abs_storage


def test_zero_input_energy_constant_inhomogeneous():
    rng = np.random.default_rng(19)
    grid = build_grid(GridSpec(4, 4, 4, 0.02, 0.025, 0.03))
    mats = inhomogeneous_materials(grid, rng, smooth=True)
    # conservative limit: the smallest sqrt(mu*eps) over cells (vacuum)
    dt = 0.95 * cfl_limit(grid.spec, EPS0, MU0)
    assert check_positive_definite(assemble_system(grid, mats, dt, "scalar")).pd
    x0 = rng.standard_normal(sum(grid.n_edges) + grid.n_nodes)
    sim = init_scalar(grid, mats, dt, ScalarState.from_vector(grid, x0))
    e0 = storage_scalar(sim)
    rep = audit_balance(sim, None, 1000)
    assert np.max(np.abs(rep.e_after - e0)) <= 1e-12 * abs(e0)


def test_outputs_gather_host_nodes():
    rng = np.random.default_rng(2)
    grid = small_grid()
    state = ScalarState.zeros(grid)
    state.p[:] = rng.standard_normal(grid.node_shape)
    sim = init_scalar(grid, vacuum(grid), stable_dt(grid), state)
    y = scalar_outputs(sim)
    sites = grid.hanging(SCALAR_GRAD_PERP)
    for idx, s in enumerate(sites):
        assert y[idx] == state.p[s.host_ijk]
    # a corner node feeds three sites with the same value
    corner = [idx for idx, s in enumerate(sites) if s.host_ijk == (0, 0, 0)]
    assert len(corner) == 3
    assert len({y[idx] for idx in corner}) == 1


def test_outputs_match_assembled_observation_matrix():
    rng = np.random.default_rng(8)
    grid = small_grid()
    mats = vacuum(grid)
    dt = stable_dt(grid)
    sys = assemble_system(grid, mats, dt, "scalar")
    x = rng.standard_normal(sys.n_state)
    sim = init_scalar(grid, mats, dt, ScalarState.from_vector(grid, x))
    np.testing.assert_allclose(scalar_outputs(sim), sys.L_out.T @ x, rtol=0, atol=0)


def test_reconstruct_phi():
    grid = small_grid()
    dt = stable_dt(grid)
    state = ScalarState.zeros(grid)
    sim = init_scalar(grid, vacuum(grid), dt, state)
    phi = np.full(grid.node_shape, 2.0)
    np.testing.assert_array_equal(reconstruct_phi(sim, phi, dt), phi)
    # constant rate c0 grows phi by m*dt*c0 over m applications
    sim.state.p[:] = 3.0
    for _ in range(4):
        phi = reconstruct_phi(sim, phi, dt)
    np.testing.assert_allclose(phi, 2.0 + 4 * dt * 3.0, rtol=1e-15)
    with pytest.raises(SolverError):
        reconstruct_phi(sim, np.zeros(3), dt)


def test_storage_single_boundary_edge():
    # unit gradient sample on one edge of a unit cell: the edge's dual
    # area is a quarter of the unit face, so E = eps0/8
    grid = build_grid(GridSpec(1, 1, 1, 1.0, 1.0, 1.0))
    state = ScalarState.zeros(grid)
    state.gx[0, 0, 0] = 1.0
    dt = stable_dt(grid)
    sim = init_scalar(grid, vacuum(grid), dt, state)
    assert storage_scalar(sim) == pytest.approx(EPS0 / 8.0, rel=1e-15)
    sys = assemble_system(grid, vacuum(grid), dt, "scalar")
    x = sim.state.to_vector()
    assert storage_scalar(sim) == pytest.approx(0.5 * dt * (x @ (sys.R @ x)), rel=1e-13)
