"""Discrete energy bookkeeping and system-level audits.

Both solvers are instances of the one-step recurrence

    (R + F) x+ = (R - F) x- + B u,     y = L^T x

with R symmetric, F antisymmetric and B = L S for a diagonal S pairing
each boundary input with its conjugate output.  The storage function

    E(x) = (dt/2) x^T R x

then changes by exactly the supply

    s = dt * (y- + y+)^T S u / 2

every step, for any dt.  E is nonnegative whenever R is positive
definite, which for homogeneous media holds up to the familiar
leapfrog time-step limit.

Production-size grids never form R: storage and supply are evaluated
matrix-free from the solver fields.  assemble_system builds the sparse
R, F, B, L, S explicitly for desk-scale grids; dense_oracle_step solves
the implicit form directly and is the reference the fast solvers are
tested against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .grid import A_DOT_PERP, B_TAN, SCALAR_GRAD_PERP, GridIndex, GridSpec, SiteArrays
from .materials import MaterialMaps
from .scalar import ScalarSim
from .vector import VectorSim

_ASSEMBLY_DIM_LIMIT = 200_000


class DissipationError(ValueError):
    pass


# ---------------------------------------------------------------------
# time step limit
# ---------------------------------------------------------------------

def cfl_limit(spec: GridSpec, eps, mu) -> float:
    """Largest stable leapfrog time step sqrt(mu*eps)/sqrt(sum dx^-2).

    eps and mu may be scalars (homogeneous medium) or per-cell arrays;
    arrays use the smallest sqrt(mu*eps) over cells, a conservative
    bound that should be confirmed with check_positive_definite.
    """
    eps = np.asarray(eps, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if np.any(eps <= 0.0) or np.any(mu <= 0.0):
        raise DissipationError("eps and mu must be positive")
    root = float(np.min(np.sqrt(mu * eps)))
    denom = math.sqrt(spec.dx ** -2 + spec.dy ** -2 + spec.dz ** -2)
    return root / denom


# ---------------------------------------------------------------------
# storage functions (matrix-free)
# ---------------------------------------------------------------------

def storage_scalar(sim: ScalarSim) -> float:
    """E = (dt/2) x^T R x for the scalar system, evaluated field-wise."""
    s = sim.state
    quads = [
        0.5 * float(np.sum(sim.edge_weight[0] * s.gx ** 2)),
        0.5 * float(np.sum(sim.edge_weight[1] * s.gy ** 2)),
        0.5 * float(np.sum(sim.edge_weight[2] * s.gz ** 2)),
        0.5 * float(np.sum(sim.node_weight * s.p ** 2)),
        0.5 * sim.dt * float(np.sum(s.p * sim.flux(None))),
    ]
    return math.fsum(quads)


def storage_vector(sim: VectorSim) -> float:
    """E = (dt/2) x^T R x for the vector system, evaluated field-wise."""
    s = sim.state
    cx, cy, cz = sim.curl_a()
    quads = [
        0.5 * float(np.sum(sim.edge_weight[0] * s.ax ** 2)),
        0.5 * float(np.sum(sim.edge_weight[1] * s.ay ** 2)),
        0.5 * float(np.sum(sim.edge_weight[2] * s.az ** 2)),
        0.5 * float(np.sum(sim.sedge_weight[0] * s.bx ** 2)),
        0.5 * float(np.sum(sim.sedge_weight[1] * s.by ** 2)),
        0.5 * float(np.sum(sim.sedge_weight[2] * s.bz ** 2)),
        0.5 * float(np.sum(sim.node_weight * s.kappa ** 2)),
        0.5 * sim.dt * float(np.sum(sim.sedge_weight[0] * s.bx * cx)),
        0.5 * sim.dt * float(np.sum(sim.sedge_weight[1] * s.by * cy)),
        0.5 * sim.dt * float(np.sum(sim.sedge_weight[2] * s.bz * cz)),
        -0.5 * sim.dt * float(np.sum(s.kappa * sim.flux_a(None))),
    ]
    return math.fsum(quads)


def storage(sim) -> float:
    return storage_scalar(sim) if sim.kind == "scalar" else storage_vector(sim)


# ---------------------------------------------------------------------
# supply rates
# ---------------------------------------------------------------------

def _site_columns(sites):
    if isinstance(sites, SiteArrays):
        return sites.sign.astype(float), sites.area
    sign = np.array([s.sign for s in sites], dtype=float)
    area = np.array([s.area for s in sites])
    return sign, area


def supply_scalar(sites, eps_site, u_n, y_minus, y_plus, dt) -> float:
    """dt * sum(sign * area * eps * u * (y- + y+)/2) over hanging sites."""
    sign, area = _site_columns(sites)
    u_n = np.asarray(u_n, dtype=float)
    if u_n.shape != sign.shape:
        raise DissipationError(f"input length {u_n.shape} != {sign.shape}")
    y_avg = 0.5 * (np.asarray(y_minus, dtype=float) + np.asarray(y_plus, dtype=float))
    if y_avg.shape != sign.shape:
        raise DissipationError("output length mismatch")
    return dt * float(np.sum(sign * area * np.asarray(eps_site) * u_n * y_avg))


def supply_vector(perp_sites, btan_sites, eps_perp, mu_inv_btan,
                  u_perp_n, u_btan_nhalf,
                  y_tan_n, y_tan_np1, y_kappa_minus, y_kappa_plus,
                  dt) -> float:
    """Boundary energy inflow of the vector system over one step.

    The normal-component pairing carries -sign(n.u): the continuous
    counterpart integrates (... + eps*kappa*dA/dt) . (-n), opposite to
    the scalar convention.  The tangential pairing uses the b_tan site
    sign, which already encodes the -n orientation.
    """
    sign_p, area_p = _site_columns(perp_sites)
    sign_t, area_t = _site_columns(btan_sites)
    u_perp_n = np.asarray(u_perp_n, dtype=float)
    u_btan_nhalf = np.asarray(u_btan_nhalf, dtype=float)
    if u_perp_n.shape != sign_p.shape or u_btan_nhalf.shape != sign_t.shape:
        raise DissipationError("input length mismatch")
    yk = 0.5 * (np.asarray(y_kappa_minus, dtype=float) + np.asarray(y_kappa_plus, dtype=float))
    yt = 0.5 * (np.asarray(y_tan_n, dtype=float) + np.asarray(y_tan_np1, dtype=float))
    if yk.shape != sign_p.shape or yt.shape != sign_t.shape:
        raise DissipationError("output length mismatch")
    s_perp = float(np.sum(-sign_p * area_p * np.asarray(eps_perp) * u_perp_n * yk))
    s_tan = float(np.sum(sign_t * area_t * np.asarray(mu_inv_btan) * u_btan_nhalf * yt))
    return dt * math.fsum([s_perp, s_tan])


# ---------------------------------------------------------------------
# sparse assembly and the dense oracle
# ---------------------------------------------------------------------

@dataclass
class SystemMatrices:
    """Sparse state-space matrices of one system at one dt.

    Scalar state ordering: (gx, gy, gz | p); inputs/outputs follow the
    scalar_grad_perp site ordering.  Vector state ordering:
    (ax, ay, az | bx, by, bz | kappa); inputs and outputs are the
    a_dot_perp sites followed by the b_tan sites.
    """

    R: sp.csr_matrix
    F: sp.csr_matrix
    B_in: sp.csr_matrix
    L_out: sp.csr_matrix
    S: sp.csr_matrix
    which: str
    dt: float
    n_state: int
    n_input: int
    _lu: tuple | None = field(default=None, repr=False)

    def lu(self):
        """LU factors of the symmetrically equilibrated (R + F).

        The raw blocks carry eps-, 1/mu- and mu*eps^2-scale diagonals
        spanning dozens of orders of magnitude; factoring D (R+F) D
        with D = diag(R)^(-1/2) keeps the solve accurate on every
        block.  The congruence is undone when solving, so the stepped
        system is unchanged.
        """
        if self._lu is None:
            scale = 1.0 / np.sqrt(self.R.diagonal())
            d = sp.diags(scale)
            factors = scipy.linalg.lu_factor((d @ (self.R + self.F) @ d).toarray())
            self._lu = (factors, scale)
        return self._lu


def _scalar_r21(grid: GridIndex, materials: MaterialMaps):
    """Rows, cols, vals of (1/2) D S'' eps as node x edge triplets."""
    node_ids = np.arange(grid.n_nodes).reshape(grid.node_shape)
    rows, cols, vals = [], [], []
    offset = 0
    for axis in range(3):
        shape = grid.edge_shapes[axis]
        n_e = grid.n_edges[axis]
        edge_ids = offset + np.arange(n_e).reshape(shape)
        w = 0.5 * grid.edge_dual_areas(axis) * materials.eps_edge[axis]
        lo = [slice(None)] * 3
        hi = [slice(None)] * 3
        lo[axis] = slice(0, shape[axis])
        hi[axis] = slice(1, shape[axis] + 1)
        rows.append(node_ids[tuple(lo)].ravel())
        cols.append(edge_ids.ravel())
        vals.append(w.ravel())
        rows.append(node_ids[tuple(hi)].ravel())
        cols.append(edge_ids.ravel())
        vals.append(-w.ravel())
        offset += n_e
    return (np.concatenate(rows), np.concatenate(cols), np.concatenate(vals))


def _vector_r21_b(grid: GridIndex, materials: MaterialMaps):
    """Triplets of (1/2) L''(1/mu) C L' as secondary-edge x edge rows."""
    edge_offsets = np.cumsum([0, *grid.n_edges])
    edge_ids = [edge_offsets[a] + np.arange(grid.n_edges[a]).reshape(grid.edge_shapes[a])
                for a in range(3)]
    rows, cols, vals = [], [], []
    offset = 0
    for axis in range(3):
        shape = grid.face_shapes[axis]
        sid = offset + np.arange(grid.n_faces[axis]).reshape(shape)
        half = 0.5 * materials.mu_inv_sedge[axis] * grid.sedge_lengths(axis)
        # cyclic circulation: curl_a = d_{a+1}(A_{a+2}) - d_{a+2}(A_{a+1})
        for sgn, e_axis, d_axis in ((+1, (axis + 2) % 3, (axis + 1) % 3),
                                    (-1, (axis + 1) % 3, (axis + 2) % 3)):
            lo = [slice(None)] * 3
            hi = [slice(None)] * 3
            lo[d_axis] = slice(0, shape[d_axis])
            hi[d_axis] = slice(1, shape[d_axis] + 1)
            w = sgn * half * grid.spec.steps[e_axis]
            rows.append(sid.ravel())
            cols.append(edge_ids[e_axis][tuple(hi)].ravel())
            vals.append(w.ravel())
            rows.append(sid.ravel())
            cols.append(edge_ids[e_axis][tuple(lo)].ravel())
            vals.append(-w.ravel())
        offset += grid.n_faces[axis]
    return (np.concatenate(rows), np.concatenate(cols), np.concatenate(vals))


def assemble_system(grid: GridIndex, materials: MaterialMaps, dt: float,
                    which: str) -> SystemMatrices:
    """Explicit sparse R, F, B, L, S for audits and the dense oracle."""
    materials.validate(grid)
    n_edges = sum(grid.n_edges)
    if which == "scalar":
        n_state = n_edges + grid.n_nodes
    elif which == "vector":
        n_state = n_edges + sum(grid.n_faces) + grid.n_nodes
    else:
        raise DissipationError(f"unknown system {which!r}")
    if n_state > _ASSEMBLY_DIM_LIMIT:
        raise DissipationError(
            f"state dimension {n_state} exceeds assembly limit {_ASSEMBLY_DIM_LIMIT}")

    r11 = np.concatenate([
        (materials.eps_edge[a] * grid.edge_dual_areas(a) * grid.spec.steps[a]).ravel() / dt
        for a in range(3)])
    r22_node = (materials.chi_node * grid.node_volumes()).ravel() / dt

    if which == "scalar":
        rows, cols, vals = _scalar_r21(grid, materials)
        r21 = sp.coo_matrix((vals, (rows, cols)),
                            shape=(grid.n_nodes, n_edges)).tocsr()
        r22 = sp.diags(r22_node)
        sites = grid.hanging_arrays(SCALAR_GRAD_PERP)
        n_in = len(sites.sign)
        l_rows = n_edges + sites.host
        s_diag = sites.sign * sites.area * materials.eps_hanging[SCALAR_GRAD_PERP]
    else:
        rows_b, cols_b, vals_b = _vector_r21_b(grid, materials)
        rows_k, cols_k, vals_k = _scalar_r21(grid, materials)
        n_sec = sum(grid.n_faces)
        rows = np.concatenate([rows_b, rows_k + n_sec])
        cols = np.concatenate([cols_b, cols_k])
        vals = np.concatenate([vals_b, -vals_k])
        r21 = sp.coo_matrix((vals, (rows, cols)),
                            shape=(n_sec + grid.n_nodes, n_edges)).tocsr()
        r22_sec = np.concatenate([
            (materials.mu_inv_sedge[a] * grid.face_areas(a) * grid.sedge_lengths(a)).ravel() / dt
            for a in range(3)])
        r22 = sp.diags(np.concatenate([r22_sec, r22_node]))
        perp = grid.hanging_arrays(A_DOT_PERP)
        btan = grid.hanging_arrays(B_TAN)
        n_in = len(perp.sign) + len(btan.sign)
        l_rows = np.concatenate([
            n_edges + n_sec + perp.host,
            _btan_host_rows(grid, btan),
        ])
        s_diag = np.concatenate([
            -perp.sign * perp.area * materials.eps_hanging[A_DOT_PERP],
            btan.sign * btan.area * materials.mu_inv_hanging,
        ])

    r11_m = sp.diags(r11)
    R = sp.bmat([[r11_m, r21.T], [r21, r22]], format="csr")
    F = sp.bmat([[sp.csr_matrix((n_edges, n_edges)), r21.T],
                 [-r21, r22 * 0]], format="csr")
    L = sp.coo_matrix((np.ones(n_in), (l_rows, np.arange(n_in))),
                      shape=(n_state, n_in)).tocsr()
    S = sp.diags(s_diag, format="csr")
    B = (L @ S).tocsr()
    return SystemMatrices(R=R, F=F, B_in=B, L_out=L, S=S, which=which,
                          dt=float(dt), n_state=n_state, n_input=n_in)


def _btan_host_rows(grid: GridIndex, btan: SiteArrays) -> np.ndarray:
    """Global state rows of the b_tan host edges (block-1 offsets)."""
    edge_offsets = np.cumsum([0, *grid.n_edges])
    sites = grid.hanging(B_TAN)
    host_axis = np.empty(len(sites), dtype=np.intp)
    for idx, s in enumerate(sites):
        e_axis = 3 - ("xyz".index(s.face[0])) - s.axis
        host_axis[idx] = e_axis
    return edge_offsets[host_axis] + btan.host


def dense_oracle_step(sys: SystemMatrices, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """One implicit step (R + F) x+ = (R - F) x- + B u by dense solve."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    rhs = (sys.R - sys.F) @ x + sys.B_in @ u
    factors, scale = sys.lu()
    return scale * scipy.linalg.lu_solve(factors, scale * rhs)


# ---------------------------------------------------------------------
# positive definiteness and the balance audit
# ---------------------------------------------------------------------

@dataclass(frozen=True)
class PdResult:
    pd: bool
    min_eigenvalue: float   # of the diagonally equilibrated R


def check_positive_definite(sys: SystemMatrices,
                            method: str = "dense-eigen") -> PdResult:
    """Decide positive definiteness of R.

    R mixes edge and node blocks whose diagonals differ by many orders
    of magnitude (eps vs mu*eps^2 weights), so the test is run on the
    congruence-equivalent D R D with D = diag(R)^(-1/2), which has unit
    diagonal.  Verdict: smallest eigenvalue > -1e-12 * ||DRD||.
    """
    R = sys.R
    asym = abs(R - R.T)
    scale = abs(R).max() or 1.0
    if asym.max() > 1e-12 * scale:
        raise DissipationError("R is not symmetric")
    d = R.diagonal()
    if np.any(d <= 0.0):
        return PdResult(False, float("-inf"))
    inv_sqrt = sp.diags(1.0 / np.sqrt(d))
    scaled = (inv_sqrt @ R @ inv_sqrt).toarray()
    scaled = 0.5 * (scaled + scaled.T)

    if method == "dense-eigen":
        eigs = scipy.linalg.eigh(scaled, eigvals_only=True)
        lam_min = float(eigs[0])
        norm = float(max(abs(eigs[0]), abs(eigs[-1])))
        return PdResult(lam_min > -1e-12 * norm, lam_min)
    if method == "factorization":
        try:
            factor = scipy.linalg.cho_factor(scaled)
        except scipy.linalg.LinAlgError:
            eigs = scipy.linalg.eigh(scaled, eigvals_only=True)
            norm = float(max(abs(eigs[0]), abs(eigs[-1])))
            return PdResult(float(eigs[0]) > -1e-12 * norm, float(eigs[0]))
        # inverse power iteration for the smallest eigenvalue
        rng = np.random.default_rng(0)
        v = rng.standard_normal(scaled.shape[0])
        v /= np.linalg.norm(v)
        lam = 1.0
        for _ in range(50):
            v = scipy.linalg.cho_solve(factor, v)
            nv = np.linalg.norm(v)
            lam = 1.0 / nv
            v /= nv
        return PdResult(True, float(lam))
    raise DissipationError(f"unknown method {method!r}")


@dataclass
class BalanceReport:
    """Per-step energies of an audited run."""

    e_before: np.ndarray
    e_after: np.ndarray
    supply: np.ndarray
    residual: np.ndarray

    @property
    def max_abs_residual(self) -> float:
        return float(np.max(np.abs(self.residual))) if len(self.residual) else 0.0

    @property
    def max_abs_storage(self) -> float:
        if not len(self.e_after):
            return 0.0
        return float(max(np.max(np.abs(self.e_before)), np.max(np.abs(self.e_after))))


def audit_balance(sim, drive, steps: int) -> BalanceReport:
    """Run `steps` steps, recording storage, supply and the balance
    residual E+ - E- - s of every step.

    drive is None (zero inputs) or a callable of the step index
    returning the scalar input vector, or the (u_perp, u_btan) pair for
    the vector system.
    """
    scalar = sim.kind == "scalar"
    grid = sim.grid
    if scalar:
        sites = grid.hanging_arrays(SCALAR_GRAD_PERP)
        eps_site = sim.materials.eps_hanging[SCALAR_GRAD_PERP]
    else:
        perp = grid.hanging_arrays(A_DOT_PERP)
        btan = grid.hanging_arrays(B_TAN)
        eps_perp = sim.materials.eps_hanging[A_DOT_PERP]
        mu_inv_btan = sim.materials.mu_inv_hanging

    e_before = np.empty(steps)
    e_after = np.empty(steps)
    supplies = np.empty(steps)
    residuals = np.empty(steps)

    e0 = storage(sim)
    for n in range(steps):
        inputs = drive(sim.state.n) if drive is not None else None
        if scalar:
            y_minus = sim.outputs()
            y_plus = sim.step(inputs)
            if inputs is None:
                s = 0.0
            else:
                s = supply_scalar(sites, eps_site, inputs, y_minus, y_plus, sim.dt)
        else:
            y_tan_n, y_kappa_minus = sim.outputs()
            u_perp, u_btan = inputs if inputs is not None else (None, None)
            y_tan_np1, y_kappa_plus = sim.step(u_perp, u_btan)
            if inputs is None:
                s = 0.0
            else:
                s = supply_vector(perp, btan, eps_perp, mu_inv_btan,
                                  u_perp, u_btan, y_tan_n, y_tan_np1,
                                  y_kappa_minus, y_kappa_plus, sim.dt)
        e1 = storage(sim)
        e_before[n] = e0
        e_after[n] = e1
        supplies[n] = s
        if math.isfinite(e0) and math.isfinite(e1) and math.isfinite(s):
            residuals[n] = math.fsum([e1, -e0, -s])
        else:
            residuals[n] = float("nan")
        e0 = e1

    return BalanceReport(e_before=e_before, e_after=e_after,
                         supply=supplies, residual=residuals)
