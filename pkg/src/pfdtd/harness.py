"""Experiment orchestration: config parsing, audited runs, CSV output.

A run is described by a TOML config (subset: tables, strings, numbers,
booleans):

    [grid]                      # required
    nx = 90                     # cells per axis
    ny = 30
    nz = 30
    dx = 1.111e-3               # cell sizes (m)
    dy = 3.333e-3
    dz = 3.333e-3

    [material]                  # optional, default vacuum
    eps_r = 1.0
    mu_r = 1.0
    # or instead: voxel = "cells.csv"  (per-cell eps_r, mu_r pairs,
    # row-major k-fastest; .csv two columns, otherwise raw float64)

    [run]                       # optional
    dt_factor = 0.999           # multiple of the CFL limit
    steps = 600
    system = "both"             # scalar | vector | both
    drive = "cavity"            # cavity | none
    out_dir = "out"
    emit_phi_reconstruction = false
    figures = true

    [cavity]                    # optional
    c_a = 1e-9                  # mode amplitude (T*m)

Each requested system produces <out>/scalar.csv or <out>/vector.csv
with one row per step (step 0 is the initial state):

    step,t,storage,supply_step,supply_cum,init_plus_supplied,residual,
    max_abs_state[,max_abs_potential]

storage in row n is evaluated on the state after n steps; residual is
that step's energy-balance defect E+ - E- - s.  Values are written
with 17 significant digits and parse back bit-exactly.  A summary.txt
collects the time step, the CFL limit, the positive-definiteness
verdict (grids up to 5x5x5, otherwise "skipped"), the closed-form mode
energies, the worst residual and the worst storage deviation.

Runs above the CFL limit are flagged and stop early once the state has
grown by 1000x and the storage has drifted from initial-plus-supplied
by 10% of the mode energy, or as soon as the state stops being finite;
the rows written so far are kept.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import tomli

from .cavity import cavity_boundary_drive, cavity_initial_state, cavity_params, eval_cavity, exact_energies
from .constants import EPS0, MU0
from .dissipation import (
    assemble_system,
    cfl_limit,
    check_positive_definite,
    storage,
    supply_scalar,
    supply_vector,
)
from .grid import A_DOT_PERP, B_TAN, SCALAR_GRAD_PERP, GridError, GridSpec, build_grid
from .materials import materials_from_cells, read_voxel_pairs, uniform_materials
from .scalar import ScalarState, init_scalar
from .vector import VectorState, init_vector

GROWTH_FACTOR = 1e3        # above-CFL instability: state growth threshold
DEVIATION_FRACTION = 0.1   # ... and storage vs init+supplied drift threshold
PD_GRID_LIMIT = 5          # largest per-axis cell count for the PD verdict


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class MaterialSpec:
    eps_r: float = 1.0
    mu_r: float = 1.0
    voxel: str | None = None


@dataclass(frozen=True)
class RunConfig:
    grid: GridSpec
    material: MaterialSpec = MaterialSpec()
    dt_factor: float = 0.999
    steps: int = 600
    system: str = "both"
    drive: str = "cavity"
    c_a: float = 1e-9
    out_dir: str = "out"
    emit_phi_reconstruction: bool = False
    figures: bool = True
    threads: int = 1

    @property
    def systems(self) -> tuple[str, ...]:
        return ("scalar", "vector") if self.system == "both" else (self.system,)


_SCHEMA = {
    "grid": {"nx": int, "ny": int, "nz": int, "dx": float, "dy": float, "dz": float},
    "material": {"eps_r": float, "mu_r": float, "voxel": str},
    "run": {"dt_factor": float, "steps": int, "system": str, "drive": str,
            "out_dir": str, "emit_phi_reconstruction": bool, "figures": bool,
            "threads": int},
    "cavity": {"c_a": float},
}


def _find_line(text: str, token: str) -> int | None:
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0]
        if stripped.strip().startswith(token) or f"[{token}]" in stripped:
            return lineno
    return None


def parse_config(text: str) -> RunConfig:
    """Parse and validate a TOML run configuration."""
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from exc

    for section, content in data.items():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]", _find_line(text, section))
        if not isinstance(content, dict):
            raise ConfigError(f"top-level key {section!r} is not a table",
                              _find_line(text, section))
        for key, value in content.items():
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]",
                                  _find_line(text, key))
            want = _SCHEMA[section][key]
            ok = isinstance(value, want) or (want is float and isinstance(value, int))
            if want is not bool and isinstance(value, bool):
                ok = False
            if not ok:
                raise ConfigError(
                    f"key {key!r} in [{section}] must be {want.__name__}, "
                    f"got {type(value).__name__}", _find_line(text, key))

    if "grid" not in data:
        raise ConfigError("missing required [grid] section", 1)
    g = data["grid"]
    missing = [k for k in _SCHEMA["grid"] if k not in g]
    if missing:
        raise ConfigError(f"[grid] is missing {missing}", _find_line(text, "grid"))
    try:
        grid = GridSpec(g["nx"], g["ny"], g["nz"],
                        float(g["dx"]), float(g["dy"]), float(g["dz"]))
    except GridError as exc:
        raise ConfigError(str(exc), _find_line(text, "grid")) from exc

    m = data.get("material", {})
    if "voxel" in m and ("eps_r" in m or "mu_r" in m):
        raise ConfigError("[material] voxel excludes eps_r/mu_r",
                          _find_line(text, "voxel"))
    material = MaterialSpec(eps_r=float(m.get("eps_r", 1.0)),
                            mu_r=float(m.get("mu_r", 1.0)),
                            voxel=m.get("voxel"))
    if material.voxel is None and not (material.eps_r > 0 and material.mu_r > 0):
        raise ConfigError("eps_r and mu_r must be positive",
                          _find_line(text, "eps_r"))

    r = data.get("run", {})
    cfg = RunConfig(
        grid=grid,
        material=material,
        dt_factor=float(r.get("dt_factor", 0.999)),
        steps=int(r.get("steps", 600)),
        system=r.get("system", "both"),
        drive=r.get("drive", "cavity"),
        c_a=float(data.get("cavity", {}).get("c_a", 1e-9)),
        out_dir=r.get("out_dir", "out"),
        emit_phi_reconstruction=bool(r.get("emit_phi_reconstruction", False)),
        figures=bool(r.get("figures", True)),
        threads=int(r.get("threads", 1)),
    )
    if cfg.steps < 1:
        raise ConfigError("steps must be >= 1", _find_line(text, "steps"))
    if not (cfg.dt_factor > 0.0):
        raise ConfigError("dt_factor must be positive", _find_line(text, "dt_factor"))
    if cfg.system not in ("scalar", "vector", "both"):
        raise ConfigError(f"system must be scalar|vector|both, got {cfg.system!r}",
                          _find_line(text, "system"))
    if cfg.drive not in ("cavity", "none"):
        raise ConfigError(f"drive must be cavity|none, got {cfg.drive!r}",
                          _find_line(text, "drive"))
    if cfg.c_a == 0.0:
        raise ConfigError("cavity c_a must be nonzero", _find_line(text, "c_a"))
    if cfg.threads < 1:
        raise ConfigError("threads must be >= 1", _find_line(text, "threads"))
    return cfg


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text())


# ---------------------------------------------------------------------
# time series rows
# ---------------------------------------------------------------------

@dataclass
class TimeSeriesRow:
    step: int
    t: float
    storage: float
    supply_step: float
    supply_cum: float
    init_plus_supplied: float
    residual: float
    max_abs_state: float
    max_abs_potential: float | None = None


CSV_COLUMNS = ("step", "t", "storage", "supply_step", "supply_cum",
               "init_plus_supplied", "residual", "max_abs_state")


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_timeseries_csv(rows, path) -> None:
    """Write rows (header + one line each) with round-trip precision."""
    rows = list(rows)
    if not rows:
        raise ValueError("no rows to write")
    with_potential = rows[0].max_abs_potential is not None
    header = ",".join(CSV_COLUMNS + (("max_abs_potential",) if with_potential else ()))
    lines = [header]
    for r in rows:
        vals = [str(r.step)] + [_fmt(v) for v in
                                (r.t, r.storage, r.supply_step, r.supply_cum,
                                 r.init_plus_supplied, r.residual, r.max_abs_state)]
        if with_potential:
            vals.append(_fmt(r.max_abs_potential))
        lines.append(",".join(vals))
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def read_timeseries_csv(path) -> list[TimeSeriesRow]:
    lines = Path(path).read_text().splitlines()
    cols = lines[0].split(",")
    rows = []
    for line in lines[1:]:
        vals = line.split(",")
        rows.append(TimeSeriesRow(
            step=int(vals[0]),
            **{c: float(v) for c, v in zip(cols[1:], vals[1:])}))
    return rows


class _NeumaierSum:
    """Compensated running sum, for cumulative energies."""

    def __init__(self):
        self.s = 0.0
        self.c = 0.0

    def add(self, x: float) -> float:
        t = self.s + x
        if abs(self.s) >= abs(x):
            self.c += (self.s - t) + x
        else:
            self.c += (x - t) + self.s
        self.s = t
        return self.value

    @property
    def value(self) -> float:
        return self.s + self.c


# ---------------------------------------------------------------------
# experiment driver
# ---------------------------------------------------------------------

@dataclass
class SystemResult:
    which: str
    rows: list[TimeSeriesRow]
    dt: float
    cfl_dt: float
    pd_verdict: str
    exact_energy: float | None
    max_abs_residual: float
    max_storage_deviation: float | None
    aborted_at: int | None = None       # first non-finite step
    growth_trip: int | None = None      # state passed GROWTH_FACTOR x initial
    deviation_trip: int | None = None   # balance drift passed threshold
    stopped_at: int | None = None       # early stop step (above-CFL runs)


@dataclass
class RunSummary:
    config: RunConfig
    out_dir: str
    above_cfl: bool
    results: dict[str, SystemResult] = field(default_factory=dict)
    log: list[str] = field(default_factory=list)

    @property
    def aborted(self) -> bool:
        return any(r.aborted_at is not None for r in self.results.values())


def _max_abs_state(sim) -> float:
    if sim.kind == "scalar":
        return float(np.max(np.abs(sim.state.p)))
    s = sim.state
    return float(max(np.max(np.abs(s.ax)), np.max(np.abs(s.ay)), np.max(np.abs(s.az))))


def _run_system(which: str, grid, materials, dt, cfl_dt, config: RunConfig,
                mode, log) -> SystemResult:
    scalar = which == "scalar"
    if mode is not None:
        state0 = cavity_initial_state(grid, mode, which, dt)
        e_exact = exact_energies(mode)[0 if scalar else 1]
    else:
        state0 = ScalarState.zeros(grid) if scalar else VectorState.zeros(grid)
        e_exact = None
    sim = (init_scalar if scalar else init_vector)(grid, materials, dt, state0)

    if scalar:
        sites = grid.hanging_arrays(SCALAR_GRAD_PERP)
        eps_site = materials.eps_hanging[SCALAR_GRAD_PERP]
    else:
        perp = grid.hanging_arrays(A_DOT_PERP)
        btan = grid.hanging_arrays(B_TAN)
        eps_perp = materials.eps_hanging[A_DOT_PERP]
        mu_inv_btan = materials.mu_inv_hanging

    # optional potential reconstruction (midpoint rule)
    potential = None
    if config.emit_phi_reconstruction:
        if scalar:
            potential = (eval_cavity(mode, "phi", *grid.node_positions(), 0.0)
                         if mode is not None else np.zeros(grid.node_shape))
        else:
            if mode is not None:
                potential = [eval_cavity(mode, "A_x", *grid.edge_positions(0), -0.5 * dt),
                             np.zeros(grid.edge_shapes[1]), np.zeros(grid.edge_shapes[2])]
            else:
                potential = [np.zeros(grid.edge_shapes[a]) for a in range(3)]

    def max_abs_potential():
        if potential is None:
            return None
        if scalar:
            return float(np.max(np.abs(potential)))
        return float(max(np.max(np.abs(p)) for p in potential))

    e0 = storage(sim)
    max0 = _max_abs_state(sim)
    rows = [TimeSeriesRow(step=0, t=0.0, storage=e0, supply_step=0.0,
                          supply_cum=0.0, init_plus_supplied=e0, residual=0.0,
                          max_abs_state=max0,
                          max_abs_potential=max_abs_potential())]
    e_init = e0
    cum_supply = _NeumaierSum()
    above_cfl = dt > cfl_dt
    max_resid = 0.0
    max_dev = abs(e0 - e_exact) if e_exact else None
    aborted_at = growth_trip = deviation_trip = stopped_at = None

    for n in range(1, config.steps + 1):
        if mode is not None:
            inputs = cavity_boundary_drive(grid, mode, which, n - 1, dt)
        else:
            inputs = None
        if scalar:
            y_minus = sim.outputs()
            y_plus = sim.step(inputs)
            s = (supply_scalar(sites, eps_site, inputs, y_minus, y_plus, dt)
                 if inputs is not None else 0.0)
        else:
            y_tan_n, y_kappa_minus = sim.outputs()
            u_perp, u_btan = inputs if inputs is not None else (None, None)
            y_tan_np1, y_kappa_plus = sim.step(u_perp, u_btan)
            s = (supply_vector(perp, btan, eps_perp, mu_inv_btan, u_perp, u_btan,
                               y_tan_n, y_tan_np1, y_kappa_minus, y_kappa_plus, dt)
                 if inputs is not None else 0.0)
        e1 = storage(sim)
        resid = math.fsum([e1, -e0, -s])
        ips = math.fsum([e_init, cum_supply.add(s)])
        if potential is not None:
            if scalar:
                potential = potential + dt * sim.state.p
            else:
                st = sim.state
                potential = [potential[0] + dt * st.ax,
                             potential[1] + dt * st.ay,
                             potential[2] + dt * st.az]
        max_abs = _max_abs_state(sim)
        rows.append(TimeSeriesRow(step=n, t=n * dt, storage=e1, supply_step=s,
                                  supply_cum=cum_supply.value,
                                  init_plus_supplied=ips, residual=resid,
                                  max_abs_state=max_abs,
                                  max_abs_potential=max_abs_potential()))
        if not (np.isfinite(max_abs) and np.isfinite(e1)):
            aborted_at = n
            log.append(f"{which}: non-finite state at step {n}, run stopped")
            break
        e0 = e1
        max_resid = max(max_resid, abs(resid))
        if e_exact:
            max_dev = max(max_dev, abs(e1 - e_exact))
        if growth_trip is None and max_abs > GROWTH_FACTOR * max0 > 0.0:
            growth_trip = n
        if (deviation_trip is None and e_exact
                and abs(e1 - ips) > DEVIATION_FRACTION * e_exact):
            deviation_trip = n
        if above_cfl and growth_trip is not None and deviation_trip is not None:
            stopped_at = n
            log.append(f"{which}: instability thresholds tripped by step {n} "
                       f"(growth at {growth_trip}, deviation at {deviation_trip})")
            break

    if max(grid.spec.shape) <= PD_GRID_LIMIT:
        res = check_positive_definite(assemble_system(grid, materials, dt, which))
        pd_verdict = "positive definite" if res.pd else "not positive definite"
    else:
        pd_verdict = "skipped"

    return SystemResult(
        which=which, rows=rows, dt=dt, cfl_dt=cfl_dt, pd_verdict=pd_verdict,
        exact_energy=e_exact, max_abs_residual=max_resid,
        max_storage_deviation=(max_dev / e_exact if e_exact else None),
        aborted_at=aborted_at, growth_trip=growth_trip,
        deviation_trip=deviation_trip, stopped_at=stopped_at)


def run_experiment(config: RunConfig, out_dir=None) -> RunSummary:
    """Run the configured systems, writing CSVs, figures and a summary."""
    out = Path(out_dir if out_dir is not None else config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = build_grid(config.grid)

    inhomogeneous = config.material.voxel is not None
    if inhomogeneous:
        eps_r, mu_r = read_voxel_pairs(config.material.voxel)
        if eps_r.shape[0] != config.grid.n_cells:
            raise ConfigError(
                f"voxel file has {eps_r.shape[0]} cells, grid needs {config.grid.n_cells}")
        materials = materials_from_cells(grid, eps_r * EPS0, mu_r * MU0)
        # conservative: smallest per-cell sqrt(mu*eps); confirm with PD
        cfl_dt = cfl_limit(config.grid, eps_r * EPS0, mu_r * MU0)
    else:
        materials = uniform_materials(grid, config.material.eps_r, config.material.mu_r)
        cfl_dt = cfl_limit(config.grid, config.material.eps_r * EPS0,
                           config.material.mu_r * MU0)
    dt = config.dt_factor * cfl_dt

    summary = RunSummary(config=config, out_dir=str(out), above_cfl=dt > cfl_dt)
    summary.log.append(f"dt = {dt:.17g} s ({config.dt_factor} x CFL {cfl_dt:.17g} s)")
    if inhomogeneous:
        summary.log.append("CFL from the smallest per-cell sqrt(mu*eps) "
                           "(conservative; authoritative gate is the PD check)")
    if summary.above_cfl:
        summary.log.append("WARNING: time step is above the CFL limit; "
                           "the run is expected to be unstable")

    mode = None
    if config.drive == "cavity":
        ext = config.grid.extent
        if abs(ext[0] - ext[1]) > 1e-12 * ext[0] or abs(ext[0] - ext[2]) > 1e-12 * ext[0]:
            raise ConfigError(f"cavity drive needs a cubic region, extent {ext}")
        mode = cavity_params(ext[0], config.c_a)

    for which in config.systems:
        result = _run_system(which, grid, materials, dt, cfl_dt, config,
                             mode, summary.log)
        summary.results[which] = result
        write_timeseries_csv(result.rows, out / f"{which}.csv")
        if config.figures:
            from .figures import render_run_figure
            render_run_figure(result, out / f"{which}.png")

    (out / "summary.txt").write_text(format_summary(summary), newline="\n")
    return summary


def format_summary(summary: RunSummary) -> str:
    cfg = summary.config
    lines = [
        "potentials-FDTD run summary",
        f"grid: {cfg.grid.nx} x {cfg.grid.ny} x {cfg.grid.nz} cells, "
        f"steps {cfg.grid.dx:.6g} x {cfg.grid.dy:.6g} x {cfg.grid.dz:.6g} m",
        f"drive: {cfg.drive}   dt_factor: {cfg.dt_factor}   steps: {cfg.steps}",
        f"threads: {cfg.threads}",
    ]
    lines += summary.log
    for which, r in summary.results.items():
        lines.append("")
        lines.append(f"[{which}]")
        lines.append(f"  dt: {_fmt(r.dt)} s")
        lines.append(f"  cfl_dt: {_fmt(r.cfl_dt)} s")
        lines.append(f"  positive-definiteness: {r.pd_verdict}")
        if r.exact_energy is not None:
            lines.append(f"  exact mode energy: {_fmt(r.exact_energy)} J")
            lines.append(f"  max storage deviation from exact: "
                         f"{r.max_storage_deviation:.6e} (relative)")
        lines.append(f"  max |balance residual|: {_fmt(r.max_abs_residual)} J")
        if r.growth_trip is not None:
            lines.append(f"  state growth >{GROWTH_FACTOR:g}x initial at step {r.growth_trip}")
        if r.deviation_trip is not None:
            lines.append(f"  storage drift >{DEVIATION_FRACTION:.0%} of exact energy "
                         f"at step {r.deviation_trip}")
        if r.stopped_at is not None:
            lines.append(f"  stopped early at step {r.stopped_at} (above-CFL thresholds)")
        if r.aborted_at is not None:
            lines.append(f"  ABORTED: non-finite state at step {r.aborted_at}")
    return "\n".join(lines) + "\n"
