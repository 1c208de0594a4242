import numpy as np
import pytest

from conftest import small_grid
from pfdtd import (
    A_DOT_PERP,
    B_TAN,
    EPS0,
    MU0,
    SCALAR_GRAD_PERP,
    GridSpec,
    MaterialError,
    build_grid,
    load_voxel_cells,
    materials_from_cells,
    uniform_materials,
)


def test_vacuum_values():
    grid = small_grid()
    m = uniform_materials(grid, 1.0, 1.0)
    for a in range(3):
        assert np.all(m.eps_edge[a] == EPS0)
        assert np.all(m.mu_inv_sedge[a] == 1.0 / MU0)
    assert np.all(m.chi_node == MU0 * EPS0 ** 2)
    assert np.all(m.eps_hanging[SCALAR_GRAD_PERP] == EPS0)
    assert np.all(m.mu_inv_hanging == 1.0 / MU0)


def test_relative_scaling():
    grid = small_grid()
    m = uniform_materials(grid, 4.0, 1.0)
    assert np.all(m.eps_edge[0] == 4.0 * EPS0)
    assert np.all(m.chi_node == MU0 * (4.0 * EPS0) ** 2)  # 16x vacuum chi


def test_nonpositive_rejected():
    grid = small_grid()
    with pytest.raises(MaterialError):
        uniform_materials(grid, 0.0, 1.0)
    with pytest.raises(MaterialError):
        uniform_materials(grid, 1.0, -2.0)


def test_from_cells_uniform_matches_uniform_exactly():
    grid = small_grid(3, 2, 4)
    n = grid.spec.n_cells
    got = materials_from_cells(grid, np.full(n, EPS0), np.full(n, MU0))
    want = uniform_materials(grid, 1.0, 1.0)
    for a in range(3):
        np.testing.assert_array_equal(got.eps_edge[a], want.eps_edge[a])
        np.testing.assert_array_equal(got.mu_inv_sedge[a], want.mu_inv_sedge[a])
    np.testing.assert_array_equal(got.chi_node, want.chi_node)
    for fam in (SCALAR_GRAD_PERP, A_DOT_PERP):
        np.testing.assert_array_equal(got.eps_hanging[fam], want.eps_hanging[fam])
    np.testing.assert_array_equal(got.mu_inv_hanging, want.mu_inv_hanging)


def test_half_space_interface_average():
    # eps0 in the lower x layer, 2*eps0 in the upper: edges lying in
    # the interface plane average to 1.5*eps0
    grid = small_grid(2, 2, 2)
    eps = np.empty((2, 2, 2))
    eps[0] = EPS0
    eps[1] = 2.0 * EPS0
    m = materials_from_cells(grid, eps, np.full((2, 2, 2), MU0))
    # y edges at i=1 sit on the interface
    assert np.all(m.eps_edge[1][1] == 1.5 * EPS0)
    assert np.all(m.eps_edge[1][0] == EPS0)
    assert np.all(m.eps_edge[1][2] == 2.0 * EPS0)
    # x edges never straddle the interface
    assert np.all(m.eps_edge[0][0] == EPS0)
    assert np.all(m.eps_edge[0][1] == 2.0 * EPS0)


def test_single_cell_everything_inherits():
    grid = build_grid(GridSpec(1, 1, 1, 0.5, 0.5, 0.5))
    m = materials_from_cells(grid, [3.0 * EPS0], [MU0])
    for a in range(3):
        assert np.all(m.eps_edge[a] == 3.0 * EPS0)
    assert np.all(m.eps_hanging[SCALAR_GRAD_PERP] == 3.0 * EPS0)


def test_secondary_edge_mu_inverse_of_mean():
    grid = small_grid(2, 1, 1)
    mu = np.array([MU0, 3.0 * MU0]).reshape(2, 1, 1)
    m = materials_from_cells(grid, np.full((2, 1, 1), EPS0), mu)
    # secondary x edge at the interface crosses both cells
    assert m.mu_inv_sedge[0][1, 0, 0] == 1.0 / (2.0 * MU0)
    assert m.mu_inv_sedge[0][0, 0, 0] == 1.0 / MU0
    # hanging b_tan coefficients on the x- wall come from the first cell
    sites = grid.hanging(B_TAN)
    for idx, s in enumerate(sites):
        if s.face == "x-":
            assert m.mu_inv_hanging[idx] == 1.0 / MU0
        if s.face == "x+":
            assert m.mu_inv_hanging[idx] == 1.0 / (3.0 * MU0)


def test_hanging_perp_inherits_boundary_cell_mean():
    grid = small_grid(2, 2, 1)
    eps = EPS0 * np.arange(1.0, 5.0).reshape(2, 2, 1)
    m = materials_from_cells(grid, eps, np.full((2, 2, 1), MU0))
    sites = grid.hanging(SCALAR_GRAD_PERP)
    vals = m.eps_hanging[SCALAR_GRAD_PERP]
    for idx, s in enumerate(sites):
        if s.face == "z-" and s.host_ijk == (1, 1, 0):
            # center node of the wall: mean of all four cells
            assert vals[idx] == pytest.approx(EPS0 * 2.5, rel=1e-15)
        if s.face == "x-" and s.host_ijk == (0, 0, 0):
            assert vals[idx] == EPS0 * 1.0


def test_size_mismatch_and_positivity():
    grid = small_grid()
    with pytest.raises(MaterialError):
        materials_from_cells(grid, np.full(7, EPS0), np.full(7, MU0))
    bad = np.full(grid.spec.n_cells, EPS0)
    bad[3] = -EPS0
    with pytest.raises(MaterialError):
        materials_from_cells(grid, bad, np.full(grid.spec.n_cells, MU0))


@pytest.mark.parametrize("fmt", ["csv", "bin"])
def test_voxel_file_round_trip(tmp_path, fmt):
    rng = np.random.default_rng(5)
    grid = small_grid(2, 3, 2)
    n = grid.spec.n_cells
    eps_r = rng.uniform(1.0, 4.0, n)
    mu_r = rng.uniform(1.0, 2.0, n)
    if fmt == "csv":
        path = tmp_path / "cells.csv"
        np.savetxt(path, np.column_stack([eps_r, mu_r]), delimiter=",")
        eps_back = np.loadtxt(path, delimiter=",")[:, 0]
    else:
        path = tmp_path / "cells.f64"
        np.column_stack([eps_r, mu_r]).astype("<f8").tofile(path)
        eps_back = eps_r
    m = load_voxel_cells(path, grid)
    want = materials_from_cells(grid, eps_back * EPS0, mu_r * MU0)
    for a in range(3):
        np.testing.assert_array_equal(m.eps_edge[a], want.eps_edge[a])
    np.testing.assert_array_equal(m.chi_node, want.chi_node)


def test_voxel_wrong_cell_count(tmp_path):
    grid = small_grid()
    path = tmp_path / "cells.f64"
    np.ones(10, dtype="<f8").tofile(path)
    with pytest.raises(MaterialError):
        load_voxel_cells(path, grid)
