"""Material coefficient maps for lossless isotropic dielectrics.

The solvers need eps on primary edges, chi = mu*eps^2 on nodes, 1/mu on
secondary edges, and coefficients at the hanging sites.  Maps can be
built for a homogeneous medium, from per-cell values (arithmetic
averaging onto shared entities), or loaded from a voxel file.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import EPS0, MU0
from .grid import A_DOT_PERP, B_TAN, FACES, SCALAR_GRAD_PERP, GridIndex, _face_axis_side


class MaterialError(ValueError):
    pass


@dataclass(frozen=True)
class MaterialMaps:
    """Per-entity coefficients; immutable after construction.

    eps_edge[a] has the primary a-edge shape, mu_inv_sedge[a] the
    secondary a-edge (primary a-face) shape, chi_node the node shape.
    eps_hanging holds one flat array per perpendicular family in the
    site ordering; mu_inv_hanging is the b_tan counterpart.
    """

    eps_edge: tuple[np.ndarray, np.ndarray, np.ndarray]
    chi_node: np.ndarray
    mu_inv_sedge: tuple[np.ndarray, np.ndarray, np.ndarray]
    eps_hanging: dict[str, np.ndarray]
    mu_inv_hanging: np.ndarray

    def validate(self, grid: GridIndex) -> "MaterialMaps":
        for a in range(3):
            if self.eps_edge[a].shape != grid.edge_shapes[a]:
                raise MaterialError(f"eps_edge[{a}] shape mismatch")
            if self.mu_inv_sedge[a].shape != grid.face_shapes[a]:
                raise MaterialError(f"mu_inv_sedge[{a}] shape mismatch")
        if self.chi_node.shape != grid.node_shape:
            raise MaterialError("chi_node shape mismatch")
        arrays = [*self.eps_edge, self.chi_node, *self.mu_inv_sedge,
                  *self.eps_hanging.values(), self.mu_inv_hanging]
        for arr in arrays:
            if not np.all(np.isfinite(arr)) or not np.all(arr > 0.0):
                raise MaterialError("material coefficients must be positive and finite")
        return self


def uniform_materials(grid: GridIndex, eps_r: float, mu_r: float) -> MaterialMaps:
    """Constant maps for a homogeneous medium with chi = mu*eps^2."""
    if not (eps_r > 0.0 and mu_r > 0.0):
        raise MaterialError(f"relative constants must be positive, got {eps_r}, {mu_r}")
    eps = eps_r * EPS0
    mu = mu_r * MU0
    chi = mu * eps ** 2
    n_perp = len(grid.hanging(SCALAR_GRAD_PERP))
    n_btan = len(grid.hanging(B_TAN))
    return MaterialMaps(
        eps_edge=tuple(np.full(grid.edge_shapes[a], eps) for a in range(3)),
        chi_node=np.full(grid.node_shape, chi),
        mu_inv_sedge=tuple(np.full(grid.face_shapes[a], 1.0 / mu) for a in range(3)),
        eps_hanging={
            SCALAR_GRAD_PERP: np.full(n_perp, eps),
            A_DOT_PERP: np.full(n_perp, eps),
        },
        mu_inv_hanging=np.full(n_btan, 1.0 / mu),
    ).validate(grid)


def _extend(cells: np.ndarray, axis: int) -> np.ndarray:
    """Clipped two-point mean from n cell layers to n+1 node planes."""
    n = cells.shape[axis]
    lo = cells.take(indices=range(0, 1), axis=axis)
    hi = cells.take(indices=range(n - 1, n), axis=axis)
    if n == 1:
        mid_shape = list(cells.shape)
        mid_shape[axis] = 0
        mid = np.empty(mid_shape)
    else:
        a = cells.take(indices=range(0, n - 1), axis=axis)
        b = cells.take(indices=range(1, n), axis=axis)
        mid = 0.5 * (a + b)
    return np.concatenate([lo, mid, hi], axis=axis)


def _hanging_from_face_layers(grid, face_layer_eps, face_layer_mu):
    """Sample per-face node/edge coefficients into the site orderings."""
    perp_eps = []
    for face in FACES:
        # node-plane values on the face: extend the cell layer in-face
        layer = face_layer_eps[face]
        vals = _extend(_extend(layer, 0), 1)
        perp_eps.append(vals.ravel())
    btan_mu_inv = []
    for face in FACES:
        axis, _ = _face_axis_side(face)
        t1, t2 = [a for a in range(3) if a != axis]
        layer = face_layer_mu[face]
        for e_axis in sorted(a for a in range(3) if a != axis):
            b_axis = 3 - axis - e_axis
            # host edges run along e_axis: cell index there, node plane
            # along b_axis
            local_b = 0 if b_axis == t1 else 1
            vals = _extend(layer, local_b)
            btan_mu_inv.append((1.0 / vals).ravel())
    return np.concatenate(perp_eps), np.concatenate(btan_mu_inv)


def materials_from_cells(grid: GridIndex, cell_eps, cell_mu) -> MaterialMaps:
    """Average per-cell eps and mu onto the grid entities.

    Cell arrays are flat (row-major, k fastest) or shaped (nx, ny, nz).
    Shared entities take the arithmetic mean of their adjacent cells;
    chi is formed from the node means so chi = mu*eps^2 holds per node;
    secondary-edge values store 1/(mean mu).  Hanging sites inherit the
    mean of their adjacent boundary cells.
    """
    shape = grid.spec.shape
    eps = np.asarray(cell_eps, dtype=float)
    mu = np.asarray(cell_mu, dtype=float)
    try:
        eps = eps.reshape(shape)
        mu = mu.reshape(shape)
    except ValueError:
        raise MaterialError(
            f"cell arrays must have {grid.spec.n_cells} entries for grid {shape}")
    if not (np.all(eps > 0.0) and np.all(mu > 0.0)):
        raise MaterialError("cell eps and mu must be positive")

    # primary a-edges: mean over the <=4 cells sharing the edge
    eps_edge = []
    for axis in range(3):
        t1, t2 = [a for a in range(3) if a != axis]
        eps_edge.append(_extend(_extend(eps, t1), t2))

    # nodes: mean over the <=8 sharing cells, chi from the node means
    eps_node = _extend(_extend(_extend(eps, 0), 1), 2)
    mu_node = _extend(_extend(_extend(mu, 0), 1), 2)
    chi_node = mu_node * eps_node ** 2

    # secondary a-edges cross <=2 cells along a
    mu_inv_sedge = tuple(1.0 / _extend(mu, axis) for axis in range(3))

    # boundary cell layers per face
    def layer(arr, face):
        axis, side = _face_axis_side(face)
        idx = shape[axis] - 1 if side else 0
        return arr.take(indices=idx, axis=axis)

    face_eps = {face: layer(eps, face) for face in FACES}
    face_mu = {face: layer(mu, face) for face in FACES}
    perp_eps, btan_mu_inv = _hanging_from_face_layers(grid, face_eps, face_mu)

    return MaterialMaps(
        eps_edge=tuple(eps_edge),
        chi_node=chi_node,
        mu_inv_sedge=mu_inv_sedge,
        eps_hanging={SCALAR_GRAD_PERP: perp_eps, A_DOT_PERP: perp_eps.copy()},
        mu_inv_hanging=btan_mu_inv,
    ).validate(grid)


def read_voxel_pairs(path) -> tuple[np.ndarray, np.ndarray]:
    """Per-cell relative (eps_r, mu_r) arrays from a voxel file.

    Files hold one pair per cell in row-major, k-fastest cell order.
    .csv: two comma-separated columns, no header.  Any other extension
    is read as raw little-endian float64 pairs.
    """
    path = str(path)
    if path.endswith(".csv"):
        data = np.loadtxt(path, delimiter=",", dtype=float)
    else:
        data = np.fromfile(path, dtype="<f8")
    data = np.asarray(data, dtype=float).reshape(-1, 2)
    return data[:, 0].copy(), data[:, 1].copy()


def load_voxel_cells(path, grid: GridIndex) -> MaterialMaps:
    """Build MaterialMaps from a voxel file of relative pairs."""
    eps_r, mu_r = read_voxel_pairs(path)
    if eps_r.shape[0] != grid.spec.n_cells:
        raise MaterialError(
            f"voxel file has {eps_r.shape[0]} cells, grid needs {grid.spec.n_cells}")
    return materials_from_cells(grid, eps_r * EPS0, mu_r * MU0)
