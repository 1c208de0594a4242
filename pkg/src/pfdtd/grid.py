"""Staggered primary/secondary grid geometry.

The region [0, nx*dx] x [0, ny*dy] x [0, nz*dz] is divided into primary
cells.  Samples live on the primary grid entities:

    nodes           (i, j, k)            i = 0..nx, j = 0..ny, k = 0..nz
    x-edges         (i+1/2, j, k)        i = 0..nx-1
    x-faces         (i, j+1/2, k+1/2)    j = 0..ny-1, k = 0..nz-1

(y/z families are cyclic permutations).  Primary faces double as the
edges of the secondary grid, which is staggered by half a cell.  Each
primary entity owns a share of the region (its dual weight):

    node          -> secondary cell volume V''
    primary edge  -> secondary face area S'' pierced by the edge
    primary face  -> its own area S'
    secondary edge-> in-region length l''

Secondary cells strictly inside the region are dx*dy*dz; cells touching
the boundary are halved once per incident face (down to 1/8 for corner
nodes).  The same halving applies to S'' of boundary edges and to l'' of
secondary edges cut by the boundary.

Boundary closure is provided by hanging variables: extra samples on the
boundary so that no update references anything outside the region.
Three families exist:

    scalar_grad_perp   normal gradient of the scalar potential, at
                       boundary nodes (one site per incident face)
    a_dot_perp         normal dA/dt, same locations as scalar_grad_perp
    b_tan              tangential magnetic flux density, on primary
                       edges lying in a boundary face (one site per
                       incident face)

Sites are enumerated face-major (x-, x+, y-, y+, z-, z+), then in
lexicographic (i, j, k) order; for b_tan the two host-edge axes of a
face are emitted in ascending axis order.  This ordering is the layout
contract for boundary input/output vectors throughout the package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

AXES = ("x", "y", "z")
FACES = ("x-", "x+", "y-", "y+", "z-", "z+")

SCALAR_GRAD_PERP = "scalar_grad_perp"
A_DOT_PERP = "a_dot_perp"
B_TAN = "b_tan"
FAMILIES = (SCALAR_GRAD_PERP, A_DOT_PERP, B_TAN)

_UNIT = np.eye(3)


class GridError(ValueError):
    """Invalid grid specification or entity index."""


@dataclass(frozen=True)
class GridSpec:
    """Cell counts and cell sizes of the primary grid."""

    nx: int
    ny: int
    nz: int
    dx: float
    dy: float
    dz: float

    def __post_init__(self):
        for name in ("nx", "ny", "nz"):
            n = getattr(self, name)
            if not isinstance(n, (int, np.integer)) or n < 1:
                raise GridError(f"{name} must be a positive integer, got {n!r}")
        for name in ("dx", "dy", "dz"):
            d = getattr(self, name)
            if not (d > 0.0) or not np.isfinite(d):
                raise GridError(f"{name} must be positive and finite, got {d!r}")

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.nz)

    @property
    def steps(self) -> tuple[float, float, float]:
        return (self.dx, self.dy, self.dz)

    @property
    def extent(self) -> tuple[float, float, float]:
        return (self.nx * self.dx, self.ny * self.dy, self.nz * self.dz)

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny * self.nz


@dataclass(frozen=True)
class HangingSite:
    """One boundary input sample.

    axis is the direction of the hanging quantity: the face normal axis
    for the perpendicular families, the B component axis for b_tan.
    sign is n.u for perpendicular sites and (u_B x u_E).(-n) for b_tan
    sites (u_E = host edge axis, n = outward normal).  area is the dual
    boundary area the site represents; the sites of one face (and of
    one b_tan sub-family) tile the face exactly.  host is the flat id
    of the conjugate output entity: a node for perpendicular families,
    a primary edge for b_tan.
    """

    family: str
    face: str
    host: int
    host_ijk: tuple[int, int, int]
    axis: int
    sign: int
    area: float
    position: tuple[float, float, float]


def _face_axis_side(face: str) -> tuple[int, int]:
    axis = AXES.index(face[0])
    side = 1 if face[1] == "+" else 0
    return axis, side


class GridIndex:
    """Entity counts, index maps and dual weights for one GridSpec.

    Immutable after construction; all methods are safe for concurrent
    reads.  Hanging-site enumerations are cached per family.
    """

    def __init__(self, spec: GridSpec):
        self.spec = spec
        nx, ny, nz = spec.shape

        self.node_shape = (nx + 1, ny + 1, nz + 1)
        # edge_shapes[a]: primary edges along axis a
        self.edge_shapes = (
            (nx, ny + 1, nz + 1),
            (nx + 1, ny, nz + 1),
            (nx + 1, ny + 1, nz),
        )
        # face_shapes[a]: primary faces with normal a (= secondary a-edges)
        self.face_shapes = (
            (nx + 1, ny, nz),
            (nx, ny + 1, nz),
            (nx, ny, nz + 1),
        )
        self.n_nodes = int(np.prod(self.node_shape))
        self.n_edges = tuple(int(np.prod(s)) for s in self.edge_shapes)
        self.n_faces = tuple(int(np.prod(s)) for s in self.face_shapes)

        # dual widths: the share of each node plane, halved at the walls
        self.w = tuple(self._dual_widths(n, d)
                       for n, d in zip(spec.shape, spec.steps))
        self._hanging_cache: dict[str, tuple[HangingSite, ...]] = {}
        self._site_arrays_cache: dict[str, SiteArrays] = {}

    @staticmethod
    def _dual_widths(n: int, d: float) -> np.ndarray:
        w = np.full(n + 1, d)
        w[0] = 0.5 * d
        w[-1] = 0.5 * d
        return w

    # ---- index maps -------------------------------------------------

    def node_id(self, i: int, j: int, k: int) -> int:
        self._check_ijk(self.node_shape, (i, j, k), "node")
        return int(np.ravel_multi_index((i, j, k), self.node_shape))

    def edge_id(self, axis: int, i: int, j: int, k: int) -> int:
        shape = self.edge_shapes[axis]
        self._check_ijk(shape, (i, j, k), f"{AXES[axis]}-edge")
        return int(np.ravel_multi_index((i, j, k), shape))

    def face_id(self, axis: int, i: int, j: int, k: int) -> int:
        shape = self.face_shapes[axis]
        self._check_ijk(shape, (i, j, k), f"{AXES[axis]}-face")
        return int(np.ravel_multi_index((i, j, k), shape))

    def node_ijk(self, flat: int) -> tuple[int, int, int]:
        return tuple(int(v) for v in np.unravel_index(flat, self.node_shape))

    def edge_ijk(self, axis: int, flat: int) -> tuple[int, int, int]:
        return tuple(int(v) for v in np.unravel_index(flat, self.edge_shapes[axis]))

    def face_ijk(self, axis: int, flat: int) -> tuple[int, int, int]:
        return tuple(int(v) for v in np.unravel_index(flat, self.face_shapes[axis]))

    @staticmethod
    def _check_ijk(shape, ijk, what):
        for v, n in zip(ijk, shape):
            if not 0 <= v < n:
                raise GridError(f"{what} index {ijk} out of range for shape {shape}")

    # ---- coordinates ------------------------------------------------

    def node_coords(self, axis: int) -> np.ndarray:
        """Node plane positions along one axis."""
        n = self.spec.shape[axis]
        return np.arange(n + 1) * self.spec.steps[axis]

    def center_coords(self, axis: int) -> np.ndarray:
        """Cell-center positions along one axis (edge/face midpoints)."""
        n = self.spec.shape[axis]
        return (np.arange(n) + 0.5) * self.spec.steps[axis]

    def edge_positions(self, axis: int):
        """Open-mesh (broadcastable) coordinates of axis-edge midpoints."""
        coords = [self.node_coords(a) for a in range(3)]
        coords[axis] = self.center_coords(axis)
        return np.ix_(*coords)

    def face_positions(self, axis: int):
        """Open-mesh coordinates of axis-face centers."""
        coords = [self.center_coords(a) for a in range(3)]
        coords[axis] = self.node_coords(axis)
        return np.ix_(*coords)

    def node_positions(self):
        return np.ix_(*(self.node_coords(a) for a in range(3)))

    # ---- dual weight arrays ------------------------------------------

    def node_volumes(self) -> np.ndarray:
        """Secondary cell volume V'' per node."""
        return self.w[0][:, None, None] * self.w[1][None, :, None] * self.w[2][None, None, :]

    def edge_dual_areas(self, axis: int) -> np.ndarray:
        """Secondary face area S'' pierced by each primary axis-edge."""
        t1, t2 = [a for a in range(3) if a != axis]
        out = np.ones(self.edge_shapes[axis])
        sl = [None, None, None]
        sl[t1] = slice(None)
        w1 = self.w[t1][tuple(sl)]
        sl = [None, None, None]
        sl[t2] = slice(None)
        w2 = self.w[t2][tuple(sl)]
        return out * w1 * w2

    def face_areas(self, axis: int) -> np.ndarray:
        """Primary face area S' (never halved)."""
        t1, t2 = [a for a in range(3) if a != axis]
        area = self.spec.steps[t1] * self.spec.steps[t2]
        return np.full(self.face_shapes[axis], area)

    def sedge_lengths(self, axis: int) -> np.ndarray:
        """In-region length l'' of each secondary axis-edge."""
        out = np.ones(self.face_shapes[axis])
        sl = [None, None, None]
        sl[axis] = slice(None)
        return out * self.w[axis][tuple(sl)]

    # ---- hanging sites ----------------------------------------------

    def hanging(self, family: str) -> tuple[HangingSite, ...]:
        if family not in FAMILIES:
            raise GridError(f"unknown hanging family {family!r}")
        if family not in self._hanging_cache:
            if family == B_TAN:
                sites = self._enumerate_b_tan()
            else:
                sites = self._enumerate_perp(family)
            self._hanging_cache[family] = tuple(sites)
        return self._hanging_cache[family]

    def _face_node_ranges(self, face: str):
        """(i, j, k) iteration ranges of the nodes of one face."""
        axis, side = _face_axis_side(face)
        ranges = [range(n + 1) for n in self.spec.shape]
        ranges[axis] = [self.spec.shape[axis] if side else 0]
        return ranges

    def _enumerate_perp(self, family: str) -> list[HangingSite]:
        sites = []
        steps = self.spec.steps
        for face in FACES:
            axis, side = _face_axis_side(face)
            sign = 1 if side else -1
            t1, t2 = [a for a in range(3) if a != axis]
            ri, rj, rk = self._face_node_ranges(face)
            for i in ri:
                for j in rj:
                    for k in rk:
                        ijk = (i, j, k)
                        area = self.w[t1][ijk[t1]] * self.w[t2][ijk[t2]]
                        sites.append(HangingSite(
                            family=family,
                            face=face,
                            host=self.node_id(i, j, k),
                            host_ijk=ijk,
                            axis=axis,
                            sign=sign,
                            area=float(area),
                            position=(i * steps[0], j * steps[1], k * steps[2]),
                        ))
        return sites

    def _enumerate_b_tan(self) -> list[HangingSite]:
        sites = []
        steps = self.spec.steps
        for face in FACES:
            n_axis, side = _face_axis_side(face)
            normal = _UNIT[n_axis] * (1 if side else -1)
            for e_axis in sorted(a for a in range(3) if a != n_axis):
                b_axis = 3 - n_axis - e_axis
                sign = int(round(np.cross(_UNIT[b_axis], _UNIT[e_axis]) @ (-normal)))
                shape = self.edge_shapes[e_axis]
                ranges = [range(n) for n in shape]
                ranges[n_axis] = [shape[n_axis] - 1 if side else 0]
                area_len = steps[e_axis]
                for i in ranges[0]:
                    for j in ranges[1]:
                        for k in ranges[2]:
                            ijk = (i, j, k)
                            pos = [i * steps[0], j * steps[1], k * steps[2]]
                            pos[e_axis] += 0.5 * steps[e_axis]
                            sites.append(HangingSite(
                                family=B_TAN,
                                face=face,
                                host=self.edge_id(e_axis, i, j, k),
                                host_ijk=ijk,
                                axis=b_axis,
                                sign=sign,
                                area=float(area_len * self.w[b_axis][ijk[b_axis]]),
                                position=tuple(pos),
                            ))
        return sites

    def hanging_arrays(self, family: str) -> "SiteArrays":
        """Column view of hanging(family), cached, for vectorized use."""
        if family not in self._site_arrays_cache:
            sites = self.hanging(family)
            face_slices = {}
            start = 0
            for face in FACES:
                count = sum(1 for s in sites if s.face == face)
                face_slices[face] = slice(start, start + count)
                start += count
            self._site_arrays_cache[family] = SiteArrays(
                family=family,
                host=np.array([s.host for s in sites], dtype=np.intp),
                axis=np.array([s.axis for s in sites], dtype=np.int8),
                sign=np.array([s.sign for s in sites], dtype=np.int8),
                area=np.array([s.area for s in sites]),
                position=np.array([s.position for s in sites]),
                face_slices=face_slices,
            )
        return self._site_arrays_cache[family]


@dataclass(frozen=True)
class SiteArrays:
    """Column view of a hanging-site enumeration, for vectorized use."""

    family: str
    host: np.ndarray        # flat host ids
    axis: np.ndarray        # int, per site
    sign: np.ndarray        # +-1, per site
    area: np.ndarray        # float, per site
    position: np.ndarray    # (n, 3)
    face_slices: dict       # face -> slice into the site ordering


# ---- module-level operations ----------------------------------------

def build_grid(spec: GridSpec) -> GridIndex:
    """Construct the entity index for a validated spec."""
    if not isinstance(spec, GridSpec):
        spec = GridSpec(*spec)
    return GridIndex(spec)


_WEIGHT_FAMILIES = (
    "node",
    "edge_x", "edge_y", "edge_z",
    "face_x", "face_y", "face_z",
    "sedge_x", "sedge_y", "sedge_z",
)


def dual_weight(grid: GridIndex, family: str, ijk) -> float:
    """Dual geometric weight of a single entity.

    node    -> V'' (m^3); edge_a -> S'' (m^2); face_a -> S' (m^2);
    sedge_a -> l'' (m).  Primary edge lengths are simply the cell size
    along the edge axis, available from grid.spec.
    """
    i, j, k = ijk
    if family == "node":
        grid._check_ijk(grid.node_shape, ijk, "node")
        return float(grid.w[0][i] * grid.w[1][j] * grid.w[2][k])
    if family.startswith("edge_"):
        axis = AXES.index(family[-1])
        grid._check_ijk(grid.edge_shapes[axis], ijk, family)
        t1, t2 = [a for a in range(3) if a != axis]
        return float(grid.w[t1][ijk[t1]] * grid.w[t2][ijk[t2]])
    if family.startswith("face_"):
        axis = AXES.index(family[-1])
        grid._check_ijk(grid.face_shapes[axis], ijk, family)
        t1, t2 = [a for a in range(3) if a != axis]
        return float(grid.spec.steps[t1] * grid.spec.steps[t2])
    if family.startswith("sedge_"):
        axis = AXES.index(family[-1])
        grid._check_ijk(grid.face_shapes[axis], ijk, family)
        return float(grid.w[axis][ijk[axis]])
    raise GridError(f"unknown weight family {family!r}; expected one of {_WEIGHT_FAMILIES}")


def enumerate_hanging(grid: GridIndex, family: str) -> tuple[HangingSite, ...]:
    """Ordered hanging sites of one family (see module docstring)."""
    return grid.hanging(family)
