"""Closed-form standing-wave solution in a cubic vacuum region.

The verification mode on [0, a]^3 is

    phi = C_phi sin(kx x) sin(ky y) sin(kz z) cos(w t + pi/3)
    A   = C_A  cos(kx x) sin(ky y) sin(kz z) sin(w t + pi/3) x_hat

with (kx, ky, kz) = (3, 1, 1) * pi/a by default, w fixed by the
dispersion relation w^2 = (eps0/chi0) |k|^2 and C_phi chosen so the
generalized Lorenz gauge holds, making kappa = d(phi)/dt pointwise.
Every derived quantity (gradients, B = curl A, kappa) is evaluated
exactly from the closed forms; stored energies integrate to

    E_phi = chi0 C_phi^2 w^2 a^3 / 16,   E_A = eps0 C_A^2 w^2 a^3 / 16,

constant in time.  phi and the tangential A vanish on the walls, so
the analytic boundary supply is zero; the discrete runs reproduce this
to discretization accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import CHI0, EPS0, MU0
from .grid import A_DOT_PERP, B_TAN, SCALAR_GRAD_PERP, FACES, GridIndex, _face_axis_side
from .scalar import ScalarState
from .vector import VectorState


class CavityError(ValueError):
    pass


@dataclass(frozen=True)
class CavityMode:
    a: float
    c_a: float
    kx: float
    ky: float
    kz: float
    omega: float
    c_phi: float
    phase: float
    eps0: float = EPS0
    mu0: float = MU0
    chi0: float = CHI0

    @property
    def k2(self) -> float:
        return self.kx ** 2 + self.ky ** 2 + self.kz ** 2

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega


def cavity_params(a: float, c_a: float, modes: tuple[int, int, int] = (3, 1, 1)) -> CavityMode:
    """Mode constants for side length a and amplitude c_a (T*m)."""
    if not (a > 0.0):
        raise CavityError(f"side length must be positive, got {a!r}")
    if c_a == 0.0:
        raise CavityError("amplitude must be nonzero")
    mx, my, mz = modes
    kx = mx * math.pi / a
    ky = my * math.pi / a
    kz = mz * math.pi / a
    omega = math.sqrt((EPS0 / CHI0) * (kx ** 2 + ky ** 2 + kz ** 2))
    c_phi = -c_a * EPS0 * kx / (CHI0 * omega)
    return CavityMode(a=a, c_a=c_a, kx=kx, ky=ky, kz=kz, omega=omega,
                      c_phi=c_phi, phase=math.pi / 3.0)


FIELDS = ("phi", "dphi_dt", "dphi_dx", "dphi_dy", "dphi_dz",
          "A_x", "dAx_dt", "B_y", "B_z", "kappa")


def eval_cavity(mode: CavityMode, fld: str, x, y, z, t):
    """Evaluate one analytic field component (broadcasts over arrays)."""
    kx, ky, kz, w = mode.kx, mode.ky, mode.kz, mode.omega
    cph, ca = mode.c_phi, mode.c_a
    wt = w * t + mode.phase
    sx, cx = np.sin(kx * x), np.cos(kx * x)
    sy, cy = np.sin(ky * y), np.cos(ky * y)
    sz, cz = np.sin(kz * z), np.cos(kz * z)
    if fld == "phi":
        return cph * sx * sy * sz * np.cos(wt)
    if fld == "dphi_dt":
        return -cph * w * sx * sy * sz * np.sin(wt)
    if fld == "dphi_dx":
        return cph * kx * cx * sy * sz * np.cos(wt)
    if fld == "dphi_dy":
        return cph * ky * sx * cy * sz * np.cos(wt)
    if fld == "dphi_dz":
        return cph * kz * sx * sy * cz * np.cos(wt)
    if fld == "A_x":
        return ca * cx * sy * sz * np.sin(wt)
    if fld == "dAx_dt":
        return ca * w * cx * sy * sz * np.cos(wt)
    if fld == "B_y":
        # (curl A)_y = d(A_x)/dz
        return ca * kz * cx * sy * cz * np.sin(wt)
    if fld == "B_z":
        # (curl A)_z = -d(A_x)/dy
        return -ca * ky * cx * cy * sz * np.sin(wt)
    if fld == "kappa":
        # -chi^{-1} div(eps A) = (eps0/chi0) C_A kx sin sin sin sin(wt)
        return (EPS0 / CHI0) * ca * kx * sx * sy * sz * np.sin(wt)
    raise CavityError(f"unknown field {fld!r}; expected one of {FIELDS}")


def exact_energies(mode: CavityMode) -> tuple[float, float]:
    """(E_phi, E_A): stored energies of the continuous mode."""
    w2a3 = mode.omega ** 2 * mode.a ** 3
    e_phi = mode.chi0 * mode.c_phi ** 2 * w2a3 / 16.0
    e_a = mode.eps0 * mode.c_a ** 2 * w2a3 / 16.0
    return e_phi, e_a


def _check_extent(grid: GridIndex, mode: CavityMode):
    for ext in grid.spec.extent:
        if abs(ext - mode.a) > 1e-12 * mode.a:
            raise CavityError(
                f"grid extent {grid.spec.extent} does not span the cube of side {mode.a}")


def cavity_initial_state(grid: GridIndex, mode: CavityMode, which: str, dt: float):
    """Sample the mode onto a solver state.

    Integer-time variables are sampled at t = 0, half-integer variables
    at t = -dt/2, matching the solvers' initial staggering.
    """
    _check_extent(grid, mode)
    t_half = -0.5 * dt
    if which == "scalar":
        state = ScalarState(
            gx=eval_cavity(mode, "dphi_dx", *grid.edge_positions(0), 0.0),
            gy=eval_cavity(mode, "dphi_dy", *grid.edge_positions(1), 0.0),
            gz=eval_cavity(mode, "dphi_dz", *grid.edge_positions(2), 0.0),
            p=eval_cavity(mode, "dphi_dt", *grid.node_positions(), t_half),
        )
        return state.validate(grid)
    if which == "vector":
        zeros = VectorState.zeros(grid)
        state = VectorState(
            ax=eval_cavity(mode, "dAx_dt", *grid.edge_positions(0), 0.0),
            ay=zeros.ay,
            az=zeros.az,
            bx=zeros.bx,
            by=eval_cavity(mode, "B_y", *grid.face_positions(1), t_half),
            bz=eval_cavity(mode, "B_z", *grid.face_positions(2), t_half),
            kappa=eval_cavity(mode, "kappa", *grid.node_positions(), t_half),
        )
        return state.validate(grid)
    raise CavityError(f"unknown system {which!r}")


_PERP_FIELD = {"scalar": ("dphi_dx", "dphi_dy", "dphi_dz"),
               "vector": ("dAx_dt", None, None)}
_B_FIELD = (None, "B_y", "B_z")   # analytic B has no x component


def _eval_sites(mode: CavityMode, arrays, fld_by_axis, t: float) -> np.ndarray:
    """Evaluate per-site field components chunk by chunk (same axis)."""
    out = np.zeros(len(arrays.sign))
    pos = arrays.position
    axes = arrays.axis
    bounds = [0, *(np.flatnonzero(np.diff(axes)) + 1), len(out)]
    for start, end in zip(bounds[:-1], bounds[1:]):
        fld = fld_by_axis[int(axes[start])]
        if fld is not None:
            chunk = slice(start, end)
            out[chunk] = eval_cavity(mode, fld, pos[chunk, 0], pos[chunk, 1],
                                     pos[chunk, 2], t)
    return out


def cavity_boundary_drive(grid: GridIndex, mode: CavityMode, which: str,
                          n: int, dt: float):
    """Exact hanging inputs for step n.

    Scalar: the normal gradient samples at t = n*dt.  Vector: the
    (u_perp, u_btan) pair with u_perp at t = n*dt and u_btan at
    t = (n+1/2)*dt.  Each site is evaluated at its own position with
    its own component; no interpolation is involved.
    """
    _check_extent(grid, mode)
    t_n = n * dt
    if which == "scalar":
        arrays = grid.hanging_arrays(SCALAR_GRAD_PERP)
        return _eval_sites(mode, arrays, _PERP_FIELD["scalar"], t_n)
    if which == "vector":
        perp = grid.hanging_arrays(A_DOT_PERP)
        u_perp = _eval_sites(mode, perp, _PERP_FIELD["vector"], t_n)
        btan = grid.hanging_arrays(B_TAN)
        u_btan = _eval_sites(mode, btan, _B_FIELD, (n + 0.5) * dt)
        return u_perp, u_btan
    raise CavityError(f"unknown system {which!r}")
