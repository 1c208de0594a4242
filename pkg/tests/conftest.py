"""Shared helpers for the test suite."""

import numpy as np

from pfdtd import (
    EPS0,
    MU0,
    GridSpec,
    ScalarState,
    VectorState,
    build_grid,
    materials_from_cells,
    uniform_materials,
)

C0 = 1.0 / np.sqrt(MU0 * EPS0)


def small_grid(nx=2, ny=2, nz=2, dx=0.013, dy=0.011, dz=0.017):
    return build_grid(GridSpec(nx, ny, nz, dx, dy, dz))


def smooth_eps_cells(grid, rng):
    """Smooth random per-cell permittivity in [EPS0, 4*EPS0]."""
    xs = grid.center_coords(0)
    ys = grid.center_coords(1)
    zs = grid.center_coords(2)
    lx, ly, lz = grid.spec.extent
    px, py, pz = rng.uniform(0.0, 2.0 * np.pi, size=3)
    wave = (np.sin(2.0 * np.pi * xs / lx + px)[:, None, None]
            * np.sin(2.0 * np.pi * ys / ly + py)[None, :, None]
            * np.sin(2.0 * np.pi * zs / lz + pz)[None, None, :])
    return EPS0 * (2.5 + 1.5 * wave)


def inhomogeneous_materials(grid, rng, smooth=False):
    if smooth:
        eps = smooth_eps_cells(grid, rng)
    else:
        eps = EPS0 * rng.uniform(1.0, 4.0, size=grid.spec.shape)
    mu = np.full(grid.spec.shape, MU0)
    return materials_from_cells(grid, eps, mu)


def vacuum(grid):
    return uniform_materials(grid, 1.0, 1.0)


def random_scalar_state(grid, rng, scale=1.0):
    """Random state with energy-commensurate block magnitudes
    (gradient ~ scale V/m, rate ~ c*scale V/s)."""
    s = ScalarState.zeros(grid)
    s.gx[:] = scale * rng.standard_normal(grid.edge_shapes[0])
    s.gy[:] = scale * rng.standard_normal(grid.edge_shapes[1])
    s.gz[:] = scale * rng.standard_normal(grid.edge_shapes[2])
    s.p[:] = C0 * scale * rng.standard_normal(grid.node_shape)
    return s


def random_vector_state(grid, rng, scale=1.0):
    """Random state with energy-commensurate block magnitudes
    (rates ~ scale V/m, B ~ scale/c T, kappa ~ c*scale V/s)."""
    s = VectorState.zeros(grid)
    s.ax[:] = scale * rng.standard_normal(grid.edge_shapes[0])
    s.ay[:] = scale * rng.standard_normal(grid.edge_shapes[1])
    s.az[:] = scale * rng.standard_normal(grid.edge_shapes[2])
    s.bx[:] = scale / C0 * rng.standard_normal(grid.face_shapes[0])
    s.by[:] = scale / C0 * rng.standard_normal(grid.face_shapes[1])
    s.bz[:] = scale / C0 * rng.standard_normal(grid.face_shapes[2])
    s.kappa[:] = C0 * scale * rng.standard_normal(grid.node_shape)
    return s


def random_vector_inputs(grid, rng, n_perp, n_btan, scale=1.0):
    return (scale * rng.standard_normal(n_perp),
            scale / C0 * rng.standard_normal(n_btan))
