"""Command-line front end.

    pfdtd run      --config run.toml [--out DIR] [--threads N] [--no-figures]
    pfdtd cfl      --config run.toml
    pfdtd assemble --config run.toml --system scalar|vector --out FILE
    pfdtd cavity   [--dt-factor F] [--steps N] [--out DIR] [--system S]

Exit codes: 0 success, 2 configuration error, 3 numeric error (a run
hit a non-finite state; the rows computed so far are still written).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .constants import EPS0, MU0
from .dissipation import assemble_system, cfl_limit
from .grid import GridSpec, build_grid
from .harness import ConfigError, MaterialSpec, RunConfig, load_config, run_experiment
from .materials import MaterialError, materials_from_cells, read_voxel_pairs, uniform_materials


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pfdtd", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a configured experiment")
    run.add_argument("--config", required=True)
    run.add_argument("--out", default=None, help="output directory (overrides config)")
    run.add_argument("--threads", type=int, default=None)
    run.add_argument("--no-figures", action="store_true")

    cfl = sub.add_parser("cfl", help="print the CFL time-step limit")
    cfl.add_argument("--config", required=True)

    asm = sub.add_parser("assemble", help="dump sparse system matrices (triplets)")
    asm.add_argument("--config", required=True)
    asm.add_argument("--system", required=True, choices=("scalar", "vector"))
    asm.add_argument("--out", required=True)

    cav = sub.add_parser("cavity", help="cavity energy-conservation experiment "
                                        "(90x30x30 preset)")
    cav.add_argument("--dt-factor", type=float, default=0.999)
    cav.add_argument("--steps", type=int, default=600)
    cav.add_argument("--out", default="cavity-out")
    cav.add_argument("--system", default="both", choices=("scalar", "vector", "both"))
    cav.add_argument("--threads", type=int, default=None)
    cav.add_argument("--no-figures", action="store_true")
    return parser


def _materials_for(config):
    grid = build_grid(config.grid)
    if config.material.voxel is not None:
        eps_r, mu_r = read_voxel_pairs(config.material.voxel)
        return grid, eps_r * EPS0, mu_r * MU0, True
    return grid, config.material.eps_r * EPS0, config.material.mu_r * MU0, False


def _cmd_run(config, out, summaries_to_stdout=True) -> int:
    summary = run_experiment(config, out_dir=out)
    if summaries_to_stdout:
        for line in summary.log:
            print(line)
        print(f"outputs written to {summary.out_dir}")
    if summary.aborted:
        for which, r in summary.results.items():
            if r.aborted_at is not None:
                print(f"numeric error: {which} state non-finite at step "
                      f"{r.aborted_at}", file=sys.stderr)
        return 3
    return 0


def _cmd_cfl(config) -> int:
    _, eps, mu, inhomogeneous = _materials_for(config)
    dt = cfl_limit(config.grid, eps, mu)
    print(f"CFL time-step limit: {dt:.17g} s")
    if inhomogeneous:
        print("(smallest per-cell sqrt(mu*eps); conservative, confirm "
              "with the positive-definiteness check)")
    return 0


def _dump_triplets(fh, name, matrix):
    coo = matrix.tocoo()
    fh.write(f"# matrix {name} {coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
    for r, c, v in zip(coo.row, coo.col, coo.data):
        fh.write(f"{r} {c} {v:.17g}\n")


def _cmd_assemble(config, system, out_path) -> int:
    if max(config.grid.shape) > 5:
        raise ConfigError("assemble is limited to grids up to 5x5x5 cells")
    grid = build_grid(config.grid)
    if config.material.voxel is not None:
        eps_r, mu_r = read_voxel_pairs(config.material.voxel)
        materials = materials_from_cells(grid, eps_r * EPS0, mu_r * MU0)
        eps, mu = eps_r * EPS0, mu_r * MU0
    else:
        materials = uniform_materials(grid, config.material.eps_r, config.material.mu_r)
        eps, mu = config.material.eps_r * EPS0, config.material.mu_r * MU0
    dt = config.dt_factor * cfl_limit(config.grid, eps, mu)
    sys_m = assemble_system(grid, materials, dt, system)
    with open(out_path, "w", newline="\n") as fh:
        fh.write(f"# system {system} dt {dt:.17g} state_dim {sys_m.n_state} "
                 f"inputs {sys_m.n_input}\n")
        for name, m in (("R", sys_m.R), ("F", sys_m.F), ("B", sys_m.B_in),
                        ("L", sys_m.L_out), ("S", sys_m.S)):
            _dump_triplets(fh, name, m)
    print(f"matrices written to {out_path}")
    return 0


def _cavity_config(args) -> RunConfig:
    a = 0.1
    return RunConfig(
        grid=GridSpec(90, 30, 30, a / 90, a / 30, a / 30),
        material=MaterialSpec(),
        dt_factor=args.dt_factor,
        steps=args.steps,
        system=args.system,
        drive="cavity",
        c_a=1e-9,
        out_dir=args.out,
        emit_phi_reconstruction=True,
        figures=not args.no_figures,
        threads=args.threads or 1,
    )


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            config = load_config(args.config)
            if args.threads is not None:
                config = replace(config, threads=args.threads)
            if args.no_figures:
                config = replace(config, figures=False)
            return _cmd_run(config, args.out)
        if args.command == "cfl":
            return _cmd_cfl(load_config(args.config))
        if args.command == "assemble":
            return _cmd_assemble(load_config(args.config), args.system, args.out)
        if args.command == "cavity":
            return _cmd_run(_cavity_config(args), args.out)
    except (ConfigError, MaterialError, FileNotFoundError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
