"""Leapfrog solver for the vector-potential system.

State variables (same staggering conventions as the scalar solver):

    a = dA/dt on primary edges, at integer times n*dt
    b = B on secondary edges, at half-integer times
    kappa = -chi^{-1} div(eps A) on nodes, at half-integer times

One step advances b, kappa, then a:

    b+ = b- + dt * curl(a), from primary-face circulations (complete
         everywhere, no boundary samples needed)
    chi*V''/dt * (k+ - k-) = -[outward flux of eps*a, with a_dot_perp
         hanging samples closing the wall faces]
    eps*S''*l'/dt * (a+ - a) = -l' * [circulation of (1/mu)*b around
         the edge's dual face, b_tan hanging samples standing in on
         wall segments, segment lengths boundary-halved]
         - eps*S'' * (end-node difference of k+)

Boundary inputs: a_dot_perp samples at t = n*dt and b_tan samples at
t = (n+1/2)*dt.  Boundary outputs: a on the b_tan host edges (integer
times) and kappa at the a_dot_perp host nodes (half-integer times).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import A_DOT_PERP, B_TAN, FACES, GridIndex, _face_axis_side
from .materials import MaterialMaps
from .scalar import SolverError, _face_chunks, dual_eps_flux


@dataclass
class VectorState:
    """a on edges at n*dt; b on secondary edges and kappa on nodes at
    (n-1/2)*dt."""

    ax: np.ndarray
    ay: np.ndarray
    az: np.ndarray
    bx: np.ndarray
    by: np.ndarray
    bz: np.ndarray
    kappa: np.ndarray
    n: int = 0

    @classmethod
    def zeros(cls, grid: GridIndex) -> "VectorState":
        return cls(
            ax=np.zeros(grid.edge_shapes[0]),
            ay=np.zeros(grid.edge_shapes[1]),
            az=np.zeros(grid.edge_shapes[2]),
            bx=np.zeros(grid.face_shapes[0]),
            by=np.zeros(grid.face_shapes[1]),
            bz=np.zeros(grid.face_shapes[2]),
            kappa=np.zeros(grid.node_shape),
        )

    def copy(self) -> "VectorState":
        return VectorState(self.ax.copy(), self.ay.copy(), self.az.copy(),
                           self.bx.copy(), self.by.copy(), self.bz.copy(),
                           self.kappa.copy(), self.n)

    def to_vector(self) -> np.ndarray:
        """Flat state (ax, ay, az, bx, by, bz, kappa), assembly ordering."""
        return np.concatenate([
            self.ax.ravel(), self.ay.ravel(), self.az.ravel(),
            self.bx.ravel(), self.by.ravel(), self.bz.ravel(),
            self.kappa.ravel()])

    @classmethod
    def from_vector(cls, grid: GridIndex, vec: np.ndarray, n: int = 0) -> "VectorState":
        vec = np.asarray(vec, dtype=float)
        shapes = (*grid.edge_shapes, *grid.face_shapes, grid.node_shape)
        sizes = [int(np.prod(s)) for s in shapes]
        if vec.shape != (sum(sizes),):
            raise SolverError(f"state vector length {vec.shape} != {sum(sizes)}")
        parts = np.split(vec, np.cumsum(sizes)[:-1])
        return cls(*(p.reshape(s).copy() for p, s in zip(parts, shapes)), n=n)

    def validate(self, grid: GridIndex) -> "VectorState":
        shapes = (*grid.edge_shapes, *grid.face_shapes, grid.node_shape)
        arrays = (self.ax, self.ay, self.az, self.bx, self.by, self.bz, self.kappa)
        for arr, shape in zip(arrays, shapes):
            if arr.shape != shape:
                raise SolverError(f"state array shape {arr.shape} != {shape}")
        return self


class VectorSim:
    """Owns one VectorState plus precomputed update coefficients."""

    kind = "vector"

    def __init__(self, grid: GridIndex, materials: MaterialMaps, dt: float,
                 state0: VectorState):
        if not (dt > 0.0 and np.isfinite(dt)):
            raise SolverError(f"dt must be positive, got {dt!r}")
        materials.validate(grid)
        state0.validate(grid)
        self.grid = grid
        self.materials = materials
        self.dt = float(dt)
        self.state = state0.copy()

        wx, wy, wz = grid.w
        self.syz = wy[:, None] * wz[None, :]
        self.sxz = wx[:, None] * wz[None, :]
        self.sxy = wx[:, None] * wy[None, :]
        self.volume = grid.node_volumes()
        self.inv_node = dt / (materials.chi_node * self.volume)
        self.dt_over_step = tuple(dt / d for d in grid.spec.steps)
        # dt / (eps * S'') per edge, for the circulation term
        self.inv_circ = (
            dt / (materials.eps_edge[0] * self.syz[None, :, :]),
            dt / (materials.eps_edge[1] * self.sxz[:, None, :]),
            dt / (materials.eps_edge[2] * self.sxy[:, :, None]),
        )

        # a_dot_perp bookkeeping (same face layout as the scalar input)
        perp = grid.hanging_arrays(A_DOT_PERP)
        self.n_perp = len(perp.sign)
        self.perp_slices = perp.face_slices
        self.eps_face = {}
        for face, shape in _face_chunks(grid, A_DOT_PERP):
            sl = perp.face_slices[face]
            self.eps_face[face] = materials.eps_hanging[A_DOT_PERP][sl].reshape(shape)

        # b_tan bookkeeping: per (face, host axis) chunk slice, 2-D shape
        # and 1/mu coefficients
        btan = grid.hanging_arrays(B_TAN)
        self.n_btan = len(btan.sign)
        self.btan_chunks: dict[tuple[str, int], tuple[slice, tuple[int, int], np.ndarray]] = {}
        for face in FACES:
            n_axis, _ = _face_axis_side(face)
            offset = btan.face_slices[face].start
            for e_axis in sorted(a for a in range(3) if a != n_axis):
                shape = tuple(grid.edge_shapes[e_axis][a]
                              for a in range(3) if a != n_axis)
                count = shape[0] * shape[1]
                sl = slice(offset, offset + count)
                mu_inv = materials.mu_inv_hanging[sl].reshape(shape)
                self.btan_chunks[(face, e_axis)] = (sl, shape, mu_inv)
                offset += count

        # storage weights
        self.edge_weight = tuple(
            materials.eps_edge[a] * grid.edge_dual_areas(a) * grid.spec.steps[a]
            for a in range(3))
        self.sedge_weight = tuple(
            materials.mu_inv_sedge[a] * grid.face_areas(a) * grid.sedge_lengths(a)
            for a in range(3))
        self.node_weight = materials.chi_node * self.volume

    # ---- pieces shared by step and storage -----------------------------

    def curl_a(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """curl(a) per secondary edge, from primary-face circulations."""
        s = self.state
        dx, dy, dz = self.grid.spec.steps
        cx = (s.az[:, 1:, :] - s.az[:, :-1, :]) / dy - (s.ay[:, :, 1:] - s.ay[:, :, :-1]) / dz
        cy = (s.ax[:, :, 1:] - s.ax[:, :, :-1]) / dz - (s.az[1:, :, :] - s.az[:-1, :, :]) / dx
        cz = (s.ay[1:, :, :] - s.ay[:-1, :, :]) / dx - (s.ax[:, 1:, :] - s.ax[:, :-1, :]) / dy
        return cx, cy, cz

    def flux_a(self, u_perp: np.ndarray | None) -> np.ndarray:
        """Outward flux of eps*a per node (interior-only when u is None)."""
        s = self.state
        return dual_eps_flux(self.grid, self.materials.eps_edge,
                             (s.ax, s.ay, s.az),
                             (self.syz, self.sxz, self.sxy),
                             self.eps_face, self.perp_slices, u_perp)

    def _ghost(self, u_btan: np.ndarray | None, face: str, e_axis: int):
        """Hanging (1/mu)*B ghost samples for one face chunk."""
        sl, shape, mu_inv = self.btan_chunks[(face, e_axis)]
        if u_btan is None:
            return np.zeros(shape)
        return mu_inv * u_btan[sl].reshape(shape)

    def circ_h(self, u_btan: np.ndarray | None):
        """Circulation of (1/mu)*b around each primary edge's dual face,
        wall segments taken from the hanging samples."""
        grid = self.grid
        nx, ny, nz = grid.spec.shape
        wx, wy, wz = grid.w
        s = self.state
        hx = self.materials.mu_inv_sedge[0] * s.bx
        hy = self.materials.mu_inv_sedge[1] * s.by
        hz = self.materials.mu_inv_sedge[2] * s.bz

        # x edges: wz * d(hz)/dy-sides - wy * d(hy)/dz-sides
        dhz = np.empty(grid.edge_shapes[0])
        np.subtract(hz[:, 1:, :], hz[:, :-1, :], out=dhz[:, 1:ny, :])
        dhz[:, 0, :] = hz[:, 0, :] - self._ghost(u_btan, "y-", 0)
        dhz[:, ny, :] = self._ghost(u_btan, "y+", 0) - hz[:, ny - 1, :]
        dhy = np.empty(grid.edge_shapes[0])
        np.subtract(hy[:, :, 1:], hy[:, :, :-1], out=dhy[:, :, 1:nz])
        dhy[:, :, 0] = hy[:, :, 0] - self._ghost(u_btan, "z-", 0)
        dhy[:, :, nz] = self._ghost(u_btan, "z+", 0) - hy[:, :, nz - 1]
        circ_x = wz[None, None, :] * dhz - wy[None, :, None] * dhy

        # y edges: wx * d(hx)/dz-sides - wz * d(hz)/dx-sides
        dhx = np.empty(grid.edge_shapes[1])
        np.subtract(hx[:, :, 1:], hx[:, :, :-1], out=dhx[:, :, 1:nz])
        dhx[:, :, 0] = hx[:, :, 0] - self._ghost(u_btan, "z-", 1)
        dhx[:, :, nz] = self._ghost(u_btan, "z+", 1) - hx[:, :, nz - 1]
        dhz = np.empty(grid.edge_shapes[1])
        np.subtract(hz[1:, :, :], hz[:-1, :, :], out=dhz[1:nx, :, :])
        dhz[0, :, :] = hz[0, :, :] - self._ghost(u_btan, "x-", 1)
        dhz[nx, :, :] = self._ghost(u_btan, "x+", 1) - hz[nx - 1, :, :]
        circ_y = wx[:, None, None] * dhx - wz[None, None, :] * dhz

        # z edges: wy * d(hy)/dx-sides - wx * d(hx)/dy-sides
        dhy = np.empty(grid.edge_shapes[2])
        np.subtract(hy[1:, :, :], hy[:-1, :, :], out=dhy[1:nx, :, :])
        dhy[0, :, :] = hy[0, :, :] - self._ghost(u_btan, "x-", 2)
        dhy[nx, :, :] = self._ghost(u_btan, "x+", 2) - hy[nx - 1, :, :]
        dhx = np.empty(grid.edge_shapes[2])
        np.subtract(hx[:, 1:, :], hx[:, :-1, :], out=dhx[:, 1:ny, :])
        dhx[:, 0, :] = hx[:, 0, :] - self._ghost(u_btan, "y-", 2)
        dhx[:, ny, :] = self._ghost(u_btan, "y+", 2) - hx[:, ny - 1, :]
        circ_z = wy[None, :, None] * dhy - wx[:, None, None] * dhx

        return circ_x, circ_y, circ_z

    # ---- stepping -------------------------------------------------------

    def step(self, u_perp: np.ndarray | None = None,
             u_btan: np.ndarray | None = None):
        """Advance one step; u_perp sampled at n*dt, u_btan at (n+1/2)*dt.

        Returns (a on b_tan hosts at (n+1)*dt, kappa on a_dot_perp hosts
        at (n+1/2)*dt).
        """
        u_perp = self._check_input(u_perp, self.n_perp)
        u_btan = self._check_input(u_btan, self.n_btan)
        s = self.state
        dt = self.dt

        cx, cy, cz = self.curl_a()
        s.bx += dt * cx
        s.by += dt * cy
        s.bz += dt * cz

        s.kappa -= self.inv_node * self.flux_a(u_perp)

        circ_x, circ_y, circ_z = self.circ_h(u_btan)
        rx, ry, rz = self.dt_over_step
        k = s.kappa
        s.ax -= self.inv_circ[0] * circ_x + rx * (k[1:] - k[:-1])
        s.ay -= self.inv_circ[1] * circ_y + ry * (k[:, 1:] - k[:, :-1])
        s.az -= self.inv_circ[2] * circ_z + rz * (k[:, :, 1:] - k[:, :, :-1])
        s.n += 1
        return self.outputs()

    @staticmethod
    def _check_input(u, n):
        if u is None:
            return None
        u = np.asarray(u, dtype=float)
        if u.shape != (n,):
            raise SolverError(f"expected {n} inputs, got {u.shape}")
        if not np.all(np.isfinite(u)):
            raise SolverError("non-finite boundary input")
        return u

    def outputs(self):
        """(a at b_tan hosts, kappa at a_dot_perp hosts), site order."""
        s = self.state
        y_tan = np.concatenate([
            s.ay[0].ravel(), s.az[0].ravel(),
            s.ay[-1].ravel(), s.az[-1].ravel(),
            s.ax[:, 0].ravel(), s.az[:, 0].ravel(),
            s.ax[:, -1].ravel(), s.az[:, -1].ravel(),
            s.ax[:, :, 0].ravel(), s.ay[:, :, 0].ravel(),
            s.ax[:, :, -1].ravel(), s.ay[:, :, -1].ravel(),
        ])
        k = s.kappa
        y_kappa = np.concatenate([
            k[0].ravel(), k[-1].ravel(),
            k[:, 0].ravel(), k[:, -1].ravel(),
            k[:, :, 0].ravel(), k[:, :, -1].ravel(),
        ])
        return y_tan, y_kappa


# ---- module-level operations -----------------------------------------

def init_vector(grid: GridIndex, materials: MaterialMaps, dt: float,
                state0: VectorState) -> VectorSim:
    return VectorSim(grid, materials, dt, state0)


def step_vector(sim: VectorSim, u_perp_n: np.ndarray | None = None,
                u_btan_nhalf: np.ndarray | None = None):
    return sim.step(u_perp_n, u_btan_nhalf)


def vector_outputs(sim: VectorSim):
    return sim.outputs()
