"""Command-line entry points: particle runs, mean-field runs, diagnostics.

Exit codes: 0 success, 2 configuration/format error, 3 numerical abort
(non-finite particle state), 4 CFL abort in the mean-field solver.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import (
    desired_velocity_fraction,
    lane_metrics,
    mass_audit,
    segregation_index,
)
from .meanfield import (
    CFLViolation,
    MeanFieldSim,
    PhaseGrid,
    init_uniform,
    marginals,
)
from .particles import NumericalBlowup, ParticleSim, step as particle_step
from .scenarios import (
    CHANNEL,
    ConfigError,
    ScenarioConfig,
    load_config,
    sample_initial_particles,
    serialize_config,
    validate_config,
)
from .snapio import (
    DiagnosticsWriter,
    read_grid_snapshot,
    read_particle_snapshot,
    write_grid_snapshot,
    write_manifest,
    write_marginal_csv,
    write_particle_snapshot,
)

PARTICLE_OUTPUT_EVERY = 100
MEANFIELD_OUTPUT_EVERY = 20


def _load(args) -> ScenarioConfig:
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "out", None):
        overrides["output_dir"] = args.out
    if getattr(args, "allow_wide_lambda", False):
        overrides["allow_wide_lambda"] = True
    return load_config(args.config, overrides=overrides)


def _manifest_base(cfg: ScenarioConfig, start: float) -> dict:
    entries = {"version": __version__, "seed": cfg.seed, "start_time": start}
    for line in serialize_config(cfg).strip().splitlines():
        key, value = line.split(" = ", 1)
        entries[f"config.{key}"] = value
    return entries


def cmd_particle(args) -> int:
    cfg = _load(args)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    agents = sample_initial_particles(cfg)
    sim = ParticleSim(
        agents=agents,
        params=cfg.model_params(),
        domain=cfg.domain(),
        dt=cfg.dt_particle,
        neighbor_strategy=cfg.neighbor_strategy,
    )
    n_steps = int(round(cfg.t_end / cfg.dt_particle))
    every = cfg.output_every or PARTICLE_OUTPUT_EVERY
    long_layout = cfg.snapshot_layout == "long"

    start = time.time()
    entries = _manifest_base(cfg, start)
    files: list[str] = []

    def snap_path(step_index: int) -> Path:
        if long_layout:
            return out / "particles.csv"
        return out / f"particles_{step_index:08d}.csv"

    def snapshot(s: ParticleSim):
        path = snap_path(s.step_index)
        write_particle_snapshot(path, s.t, s.agents, append=long_layout)
        name = str(path)
        if name not in files:
            files.append(name)

    diag_path = out / "diagnostics.csv"
    try:
        with DiagnosticsWriter(diag_path) as diag:

            def observe(s: ParticleSim):
                report = lane_metrics(s.agents)
                diag.record(s.t, "lane_count", report.lane_count)
                diag.record(s.t, "purity", report.purity)
                diag.record(s.t, "mean_x2_red", report.mean_x2_red)
                diag.record(s.t, "mean_x2_blue", report.mean_x2_blue)
                diag.record(
                    s.t, "dvf", desired_velocity_fraction(s.agents, sim.params, 0.05)
                )

            snapshot(sim)
            observe(sim)
            for _ in range(n_steps):
                sim = particle_step(sim)
                if sim.step_index % every == 0 or sim.step_index == n_steps:
                    snapshot(sim)
                    observe(sim)
    except NumericalBlowup as exc:
        entries["abort"] = "numerical"
        entries["abort_step"] = exc.step_index
        entries["snapshot"] = files + [str(diag_path)]
        write_manifest(out / "manifest.txt", entries)
        print(f"numerical abort: {exc}", file=sys.stderr)
        return 3

    report = lane_metrics(sim.agents)
    entries["end_time"] = time.time()
    entries["final_t"] = sim.t
    entries["final_lane_count"] = report.lane_count
    entries["final_purity"] = report.purity
    entries["final_dvf"] = desired_velocity_fraction(sim.agents, sim.params, 0.05)
    entries["snapshot"] = files + [str(diag_path)]
    write_manifest(out / "manifest.txt", entries)
    return 0


def _meanfield_setup(cfg: ScenarioConfig):
    if cfg.N_r + cfg.N_b <= 0:
        raise ConfigError("mean-field run needs N_r + N_b > 0 to fix group masses")
    grid = PhaseGrid(
        cfg.nx, cfg.ny, cfg.nv1, cfg.nv2,
        cfg.x1_min, cfg.x1_max, cfg.x2_min, cfg.x2_max,
        cfg.v1_min, cfg.v1_max, cfg.v2_min, cfg.v2_max,
    )
    x_box = (cfg.x1_min, cfg.x1_max, cfg.x2_min, cfg.x2_max)
    total = cfg.N_r + cfg.N_b
    f_r = init_uniform(grid, x_box, cfg.v_sample_red, cfg.N_r / total, "red")
    f_b = init_uniform(grid, x_box, cfg.v_sample_blue, cfg.N_b / total, "blue")
    sim = MeanFieldSim(
        f_r=f_r,
        f_b=f_b,
        params=cfg.model_params(),
        bc=(cfg.bc_x1, cfg.bc_x2),
        dt=cfg.dt_meanfield,
        stencil_radius=cfg.stencil_radius,
    )
    return grid, sim


def cmd_meanfield(args) -> int:
    cfg = _load(args)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        grid, sim = _meanfield_setup(cfg)
    except ValueError as exc:  # covers symmetric-box validation in transport
        raise ConfigError(str(exc)) from exc
    n_steps = int(round(cfg.t_end / cfg.dt_meanfield))
    every = cfg.output_every or MEANFIELD_OUTPUT_EVERY

    start = time.time()
    entries = _manifest_base(cfg, start)
    files: list[str] = []

    def snapshot(s: MeanFieldSim):
        for f in (s.f_r, s.f_b):
            gpath = out / f"f_{f.group}_{s.step_index:08d}.bin"
            write_grid_snapshot(gpath, f)
            files.append(str(gpath))
            rho, phi, _ = marginals(f)
            rpath = out / f"rho_{f.group}_{s.step_index:08d}.csv"
            write_marginal_csv(rpath, rho)
            files.append(str(rpath))
            ppath = out / f"phi_{f.group}_{s.step_index:08d}.csv"
            write_marginal_csv(ppath, phi)
            files.append(str(ppath))

    diag_path = out / "diagnostics.csv"
    try:
        with DiagnosticsWriter(diag_path) as diag:

            def observe(s: MeanFieldSim):
                diag.record(s.t, "mass_red", mass_audit(s.f_r))
                diag.record(s.t, "mass_blue", mass_audit(s.f_b))
                rho_r, _, _ = marginals(s.f_r)
                rho_b, _, _ = marginals(s.f_b)
                diag.record(
                    s.t, "segregation_x2", segregation_index(rho_r, rho_b, grid)
                )

            snapshot(sim)
            observe(sim)
            for _ in range(n_steps):
                sim.step()
                if sim.step_index % every == 0 or sim.step_index == n_steps:
                    snapshot(sim)
                    observe(sim)
    except CFLViolation as exc:
        suggested = 0.9 * cfg.dt_meanfield / exc.max_cfl
        entries["abort"] = "cfl"
        entries["abort_step"] = sim.step_index
        entries["suggested_dt"] = suggested
        entries["snapshot"] = files + [str(diag_path)]
        write_manifest(out / "manifest.txt", entries)
        print(
            f"CFL abort at cell {exc.cell}: number {exc.max_cfl:.3g}; "
            f"try dt_meanfield = {suggested:.3g}",
            file=sys.stderr,
        )
        return 4

    entries["end_time"] = time.time()
    entries["final_t"] = sim.t
    entries["final_mass_red"] = mass_audit(sim.f_r)
    entries["final_mass_blue"] = mass_audit(sim.f_b)
    entries["snapshot"] = files + [str(diag_path)]
    write_manifest(out / "manifest.txt", entries)
    return 0


def cmd_diagnose(args) -> int:
    cfg = CHANNEL
    if args.config:
        cfg = load_config(args.config)
    if args.metric == "lanes":
        times, _, agents = read_particle_snapshot(args.infile)
        last = times == times.max()
        agents = type(agents)(agents.x[last], agents.v[last], agents.group[last])
        report = lane_metrics(agents, bin_width=args.bin_width)
        print(f"lane_count={report.lane_count}")
        print(f"purity={report.purity:.6f}")
        print(f"mean_x2_red={report.mean_x2_red:.6f}")
        print(f"mean_x2_blue={report.mean_x2_blue:.6f}")
    elif args.metric == "dvf":
        times, _, agents = read_particle_snapshot(args.infile)
        last = times == times.max()
        agents = type(agents)(agents.x[last], agents.v[last], agents.group[last])
        value = desired_velocity_fraction(agents, cfg.model_params(), args.eps)
        print(f"dvf={value:.6f}")
    elif args.metric == "mass":
        f = read_grid_snapshot(args.infile)
        print(f"mass={mass_audit(f):.12f}")
    elif args.metric == "segregation":
        if not args.infile2:
            raise ConfigError("segregation needs --in (red grid) and --in2 (blue grid)")
        f_r = read_grid_snapshot(args.infile, "red")
        f_b = read_grid_snapshot(args.infile2, "blue")
        rho_r, _, _ = marginals(f_r)
        rho_b, _, _ = marginals(f_b)
        value = segregation_index(rho_r, rho_b, f_r.grid, axis=args.axis)
        print(f"segregation_{args.axis}={value:.9g}")
    else:
        raise ConfigError(f"unknown diagnose metric {args.metric!r}")
    return 0


def cmd_obstacle_demo(args) -> int:
    cfg = replace(
        CHANNEL,
        scenario="custom",
        x1_min=-20.0,
        x1_max=20.0,
        x2_min=-10.0,
        x2_max=10.0,
        N_r=10,
        N_b=10,
        t_end=args.t_end,
        output_dir=args.out or "out-obstacle",
        snapshot_layout="long",
        obstacles=((0.0, 0.0, 2.0, 16, 0.2),),
        seed=args.seed if args.seed is not None else CHANNEL.seed,
    )
    cfg = validate_config(cfg)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    agents = sample_initial_particles(cfg)
    sim = ParticleSim(
        agents=agents,
        params=cfg.model_params(),
        domain=cfg.domain(),
        dt=cfg.dt_particle,
    )
    n_steps = int(round(cfg.t_end / cfg.dt_particle))
    path = out / "particles.csv"
    write_particle_snapshot(path, sim.t, sim.agents, append=False)
    try:
        for k in range(n_steps):
            sim = particle_step(sim)
            if sim.step_index % (cfg.output_every or PARTICLE_OUTPUT_EVERY) == 0:
                write_particle_snapshot(path, sim.t, sim.agents, append=True)
    except NumericalBlowup as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return 3
    write_manifest(
        out / "manifest.txt",
        {**_manifest_base(cfg, time.time()), "snapshot": [str(path)]},
    )
    print(f"obstacle demo written to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="anisocrowd",
        description="Anisotropic collision-avoidance crowd simulation",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    for name, fn in (("particle", cmd_particle), ("meanfield", cmd_meanfield)):
        p = sub.add_parser(name, help=f"run the {name} solver")
        p.add_argument("--config", required=True, help="config file path")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--seed", type=int, help="seed override")
        p.add_argument(
            "--allow-wide-lambda",
            action="store_true",
            help="admit lambda in [-1, 1] instead of [-0.25, 0.25]",
        )
        p.set_defaults(func=fn)

    p = sub.add_parser("diagnose", help="compute a metric from saved snapshots")
    p.add_argument("metric", choices=["lanes", "dvf", "segregation", "mass"])
    p.add_argument("--in", dest="infile", required=True, help="input snapshot")
    p.add_argument("--in2", dest="infile2", help="second grid (blue) for segregation")
    p.add_argument("--eps", type=float, default=0.05, help="dvf tolerance")
    p.add_argument("--bin-width", type=float, default=1.5, help="lane bin width")
    p.add_argument("--axis", choices=["x1", "x2"], default="x2")
    p.add_argument("--config", help="config for desired velocities (dvf)")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("obstacle-demo", help="agents routed around a circular obstacle")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--t-end", type=float, default=100.0)
    p.set_defaults(func=cmd_obstacle_demo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
