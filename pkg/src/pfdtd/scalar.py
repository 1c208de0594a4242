"""Leapfrog solver for the scalar-potential first-order system.

State variables (see grid module for the staggering):

    g = grad(phi) samples on primary edges, at integer times n*dt
    p = d(phi)/dt samples on nodes, at half-integer times (n-1/2)*dt

One step advances p then g (the explicit triangular order):

    chi*V''/dt * (p+ - p-) = sum over secondary-cell faces of
                             S''*eps*g  (outward), where a face lying
                             in the wall takes the hanging sample u
                             instead of a regular edge
    eps*S''*l'/dt * (g+ - g) = eps*S'' * (difference of p+ at the two
                             end nodes)

Boundary inputs u are the scalar_grad_perp hanging samples at t = n*dt,
ordered as in grid.enumerate_hanging; boundary outputs are the p values
at the hanging-site host nodes.  Together with the storage function and
supply rate in the dissipation module, the step satisfies an exact
discrete energy balance for any dt.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import FACES, SCALAR_GRAD_PERP, GridIndex
from .materials import MaterialMaps


class SolverError(ValueError):
    pass


@dataclass
class ScalarState:
    """g on edges at n*dt, p on nodes at (n-1/2)*dt."""

    gx: np.ndarray
    gy: np.ndarray
    gz: np.ndarray
    p: np.ndarray
    n: int = 0

    @classmethod
    def zeros(cls, grid: GridIndex) -> "ScalarState":
        return cls(
            gx=np.zeros(grid.edge_shapes[0]),
            gy=np.zeros(grid.edge_shapes[1]),
            gz=np.zeros(grid.edge_shapes[2]),
            p=np.zeros(grid.node_shape),
        )

    def copy(self) -> "ScalarState":
        return ScalarState(self.gx.copy(), self.gy.copy(), self.gz.copy(),
                           self.p.copy(), self.n)

    def to_vector(self) -> np.ndarray:
        """Flat state (gx, gy, gz, p), the assembly ordering."""
        return np.concatenate([self.gx.ravel(), self.gy.ravel(),
                               self.gz.ravel(), self.p.ravel()])

    @classmethod
    def from_vector(cls, grid: GridIndex, vec: np.ndarray, n: int = 0) -> "ScalarState":
        vec = np.asarray(vec, dtype=float)
        shapes = (*grid.edge_shapes, grid.node_shape)
        sizes = [int(np.prod(s)) for s in shapes]
        if vec.shape != (sum(sizes),):
            raise SolverError(f"state vector length {vec.shape} != {sum(sizes)}")
        parts = np.split(vec, np.cumsum(sizes)[:-1])
        return cls(*(p.reshape(s).copy() for p, s in zip(parts, shapes)), n=n)

    def validate(self, grid: GridIndex) -> "ScalarState":
        shapes = (*grid.edge_shapes, grid.node_shape)
        arrays = (self.gx, self.gy, self.gz, self.p)
        for arr, shape in zip(arrays, shapes):
            if arr.shape != shape:
                raise SolverError(f"state array shape {arr.shape} != {shape}")
        return self


def _face_chunks(grid: GridIndex, family: str):
    """(face, 2-D shape) of each contiguous chunk of the site ordering."""
    chunks = []
    for face in FACES:
        axis = "xyz".index(face[0])
        t1, t2 = [a for a in range(3) if a != axis]
        shape = (grid.node_shape[t1], grid.node_shape[t2])
        chunks.append((face, shape))
    return chunks


def dual_eps_flux(grid: GridIndex, eps_edge, fields, areas, eps_face,
                  face_slices, u: np.ndarray | None) -> np.ndarray:
    """Outward flux of an eps-weighted edge field through the secondary
    cell surfaces, one value per node.

    Edges missing at the wall are replaced by hanging ghost samples
    eps_site * u_site; with u None the wall faces contribute nothing.
    areas are the transverse dual-area products (syz, sxz, sxy).
    """
    nx, ny, nz = grid.spec.shape
    gx, gy, gz = fields
    syz, sxz, sxy = areas

    def face_input(face, shape):
        if u is None:
            return None
        return u[face_slices[face]].reshape(shape)

    fx = eps_edge[0] * gx
    dfx = np.empty(grid.node_shape)
    np.subtract(fx[1:], fx[:-1], out=dfx[1:nx])
    uxm = face_input("x-", (ny + 1, nz + 1))
    uxp = face_input("x+", (ny + 1, nz + 1))
    dfx[0] = fx[0] - (eps_face["x-"] * uxm if uxm is not None else 0.0)
    dfx[nx] = (eps_face["x+"] * uxp if uxp is not None else 0.0) - fx[nx - 1]
    out = syz[None, :, :] * dfx

    fy = eps_edge[1] * gy
    dfy = np.empty(grid.node_shape)
    np.subtract(fy[:, 1:], fy[:, :-1], out=dfy[:, 1:ny])
    uym = face_input("y-", (nx + 1, nz + 1))
    uyp = face_input("y+", (nx + 1, nz + 1))
    dfy[:, 0] = fy[:, 0] - (eps_face["y-"] * uym if uym is not None else 0.0)
    dfy[:, ny] = (eps_face["y+"] * uyp if uyp is not None else 0.0) - fy[:, ny - 1]
    out += sxz[:, None, :] * dfy

    fz = eps_edge[2] * gz
    dfz = np.empty(grid.node_shape)
    np.subtract(fz[:, :, 1:], fz[:, :, :-1], out=dfz[:, :, 1:nz])
    uzm = face_input("z-", (nx + 1, ny + 1))
    uzp = face_input("z+", (nx + 1, ny + 1))
    dfz[:, :, 0] = fz[:, :, 0] - (eps_face["z-"] * uzm if uzm is not None else 0.0)
    dfz[:, :, nz] = (eps_face["z+"] * uzp if uzp is not None else 0.0) - fz[:, :, nz - 1]
    out += sxy[:, :, None] * dfz
    return out


class ScalarSim:
    """Owns one ScalarState plus precomputed update coefficients."""

    kind = "scalar"

    def __init__(self, grid: GridIndex, materials: MaterialMaps, dt: float,
                 state0: ScalarState):
        if not (dt > 0.0 and np.isfinite(dt)):
            raise SolverError(f"dt must be positive, got {dt!r}")
        materials.validate(grid)
        state0.validate(grid)
        self.grid = grid
        self.materials = materials
        self.dt = float(dt)
        self.state = state0.copy()

        wx, wy, wz = grid.w
        # transverse dual areas, shared by the flux and the hanging sites
        self.syz = wy[:, None] * wz[None, :]
        self.sxz = wx[:, None] * wz[None, :]
        self.sxy = wx[:, None] * wy[None, :]
        self.volume = grid.node_volumes()
        self.inv_node = dt / (materials.chi_node * self.volume)
        self.dt_over_step = tuple(dt / d for d in grid.spec.steps)

        # hanging bookkeeping: per-face slices and eps reshaped per face
        sites = grid.hanging_arrays(SCALAR_GRAD_PERP)
        self.n_sites = len(sites.sign)
        self.face_slices = sites.face_slices
        self.eps_face = {}
        for face, shape in _face_chunks(grid, SCALAR_GRAD_PERP):
            sl = sites.face_slices[face]
            self.eps_face[face] = materials.eps_hanging[SCALAR_GRAD_PERP][sl].reshape(shape)

        # storage weights
        self.edge_weight = tuple(
            materials.eps_edge[a] * grid.edge_dual_areas(a) * grid.spec.steps[a]
            for a in range(3))
        self.node_weight = materials.chi_node * self.volume

    # ---- boundary input handling -------------------------------------

    def flux(self, u: np.ndarray | None) -> np.ndarray:
        """Outward flux of eps*g through each secondary cell surface.

        u is the hanging input vector, or None for the interior-only
        flux (the hanging faces then contribute nothing); the latter is
        the cross term of the storage function.
        """
        s = self.state
        return dual_eps_flux(self.grid, self.materials.eps_edge,
                             (s.gx, s.gy, s.gz),
                             (self.syz, self.sxz, self.sxy),
                             self.eps_face, self.face_slices, u)

    # ---- stepping -----------------------------------------------------

    def step(self, u: np.ndarray | None = None) -> np.ndarray:
        """Advance one step with hanging inputs u at t = n*dt.

        Returns the boundary outputs p at t = (n+1/2)*dt.
        """
        if u is not None:
            u = np.asarray(u, dtype=float)
            if u.shape != (self.n_sites,):
                raise SolverError(f"expected {self.n_sites} inputs, got {u.shape}")
            if not np.all(np.isfinite(u)):
                raise SolverError("non-finite boundary input")
        s = self.state
        s.p += self.inv_node * self.flux(u)
        rx, ry, rz = self.dt_over_step
        s.gx += rx * (s.p[1:] - s.p[:-1])
        s.gy += ry * (s.p[:, 1:] - s.p[:, :-1])
        s.gz += rz * (s.p[:, :, 1:] - s.p[:, :, :-1])
        s.n += 1
        return self.outputs()

    def outputs(self) -> np.ndarray:
        """p gathered at the hanging-site host nodes (site ordering)."""
        p = self.state.p
        return np.concatenate([
            p[0].ravel(), p[-1].ravel(),
            p[:, 0].ravel(), p[:, -1].ravel(),
            p[:, :, 0].ravel(), p[:, :, -1].ravel(),
        ])


# ---- module-level operations -----------------------------------------

def init_scalar(grid: GridIndex, materials: MaterialMaps, dt: float,
                state0: ScalarState) -> ScalarSim:
    return ScalarSim(grid, materials, dt, state0)


def step_scalar(sim: ScalarSim, u_n: np.ndarray | None = None) -> np.ndarray:
    return sim.step(u_n)


def scalar_outputs(sim: ScalarSim) -> np.ndarray:
    return sim.outputs()


def reconstruct_phi(sim: ScalarSim, phi_prev: np.ndarray, dt: float) -> np.ndarray:
    """Midpoint-rule potential update phi + dt * p at the current state."""
    phi_prev = np.asarray(phi_prev, dtype=float)
    if phi_prev.shape != sim.grid.node_shape:
        raise SolverError(f"phi shape {phi_prev.shape} != {sim.grid.node_shape}")
    return phi_prev + dt * sim.state.p
