#!/usr/bin/env python3
"""Figure rendering for saved simulation snapshots.

Standalone post-processing: reads the particle CSV and binary grid formats
written by the simulation CLI and renders the four figure kinds

  quiver          agent positions with velocity arrows (particle CSV)
  densitydiff     spatial density difference rho_red - rho_blue (grid pair)
  profile         x2 profiles of both groups' spatial densities (grid pair)
  velocitydensity phi_red + phi_blue over velocity space (grid pair)

Inputs are never modified (checksummed before and after every render) and
outputs are deterministic: fixed figure geometry, no timestamps embedded.

Usage:
  python render.py --kind densitydiff --in outdir --out figdir
"""

from __future__ import annotations

import argparse
import hashlib
import struct
import sys
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

GRID_MAGIC = b"ANISOF01"
PARTICLE_HEADER = "t,id,group,x1,x2,v1,v2"
QUIVER_MAX_ARROWS = 500

KINDS = ("quiver", "densitydiff", "profile", "velocitydensity")


@dataclass
class PlotJob:
    kind: str
    inputs: tuple[Path, ...]
    output: Path
    options: dict = field(default_factory=dict)


class FormatError(ValueError):
    pass


def read_grid(path: Path):
    """Binary grid snapshot -> (counts, bounds, values[nx,ny,nv1,nv2])."""
    raw = path.read_bytes()
    if raw[:8] != GRID_MAGIC:
        raise FormatError(f"{path}: bad magic {raw[:8]!r}")
    nx, ny, nv1, nv2 = struct.unpack("<4I", raw[8:24])
    bounds = struct.unpack("<8d", raw[24:88])
    values = np.frombuffer(raw[88:], dtype="<f8")
    if values.size != nx * ny * nv1 * nv2:
        raise FormatError(f"{path}: truncated payload")
    return (nx, ny, nv1, nv2), bounds, values.reshape(nx, ny, nv1, nv2)


def read_particles(path: Path):
    """Particle CSV -> dict of arrays for the latest time in the file."""
    times, groups, xs, vs = [], [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != PARTICLE_HEADER:
            raise FormatError(f"{path}: unexpected header {header!r}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 7:
                raise FormatError(f"{path}: malformed row {line!r}")
            times.append(float(parts[0]))
            groups.append(parts[2])
            xs.append((float(parts[3]), float(parts[4])))
            vs.append((float(parts[5]), float(parts[6])))
    if not times:
        raise FormatError(f"{path}: empty snapshot")
    t = np.array(times)
    last = t == t.max()
    return {
        "t": float(t.max()),
        "group": np.array(groups)[last],
        "x": np.array(xs)[last],
        "v": np.array(vs)[last],
    }


def spatial_marginals(values, counts, bounds):
    nx, ny, nv1, nv2 = counts
    dv1 = (bounds[5] - bounds[4]) / nv1
    dv2 = (bounds[7] - bounds[6]) / nv2
    rho = values.sum(axis=(2, 3)) * dv1 * dv2
    dx1 = (bounds[1] - bounds[0]) / nx
    dx2 = (bounds[3] - bounds[2]) / ny
    phi = values.sum(axis=(0, 1)) * dx1 * dx2
    rho2 = rho.sum(axis=0) * dx1
    return rho, phi, rho2


def sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _new_figure():
    return plt.subplots(figsize=(8.0, 4.0), dpi=110)


def _save(fig, output: Path):
    output.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(output, metadata={"Software": None})
    plt.close(fig)


def render_quiver(job: PlotJob):
    data = read_particles(job.inputs[0])
    x, v, g = data["x"], data["v"], data["group"]
    if len(x) > QUIVER_MAX_ARROWS:
        stride = int(np.ceil(len(x) / QUIVER_MAX_ARROWS))
        x, v, g = x[::stride], v[::stride], g[::stride]
    fig, ax = _new_figure()
    colors = {"r": "#c62828", "b": "#1565c0", "o": "#424242"}
    for letter in ("r", "b", "o"):
        sel = g == letter
        if not np.any(sel):
            continue
        ax.quiver(
            x[sel, 0], x[sel, 1], v[sel, 0], v[sel, 1],
            color=colors[letter], angles="xy", scale_units="xy",
            scale=0.08, width=0.003,
        )
        ax.plot(x[sel, 0], x[sel, 1], ".", color=colors[letter], markersize=3)
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_title(f"agents at t = {data['t']:g}")
    ax.set_aspect("equal")
    _save(fig, job.output)


def _load_pair(job: PlotJob):
    counts_r, bounds_r, vals_r = read_grid(job.inputs[0])
    counts_b, bounds_b, vals_b = read_grid(job.inputs[1])
    if counts_r != counts_b or bounds_r != bounds_b:
        raise FormatError("red and blue grids disagree in shape or bounds")
    return counts_r, bounds_r, vals_r, vals_b


def render_densitydiff(job: PlotJob):
    counts, bounds, vals_r, vals_b = _load_pair(job)
    rho_r, _, _ = spatial_marginals(vals_r, counts, bounds)
    rho_b, _, _ = spatial_marginals(vals_b, counts, bounds)
    diff = rho_r - rho_b
    lim = float(np.abs(diff).max()) or 1.0
    fig, ax = _new_figure()
    im = ax.imshow(
        diff.T, origin="lower", cmap="RdBu_r", vmin=-lim, vmax=lim,
        extent=(bounds[0], bounds[1], bounds[2], bounds[3]), aspect="auto",
    )
    fig.colorbar(im, ax=ax, label="rho_red - rho_blue")
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    _save(fig, job.output)


def render_profile(job: PlotJob):
    counts, bounds, vals_r, vals_b = _load_pair(job)
    _, _, rho2_r = spatial_marginals(vals_r, counts, bounds)
    _, _, rho2_b = spatial_marginals(vals_b, counts, bounds)
    ny = counts[1]
    x2 = bounds[2] + (np.arange(ny) + 0.5) * (bounds[3] - bounds[2]) / ny
    fig, ax = _new_figure()
    ax.plot(x2, rho2_r, color="#c62828", label="red")
    ax.plot(x2, rho2_b, color="#1565c0", label="blue")
    ax.set_xlabel("x2")
    ax.set_ylabel("density")
    ax.legend()
    _save(fig, job.output)


def render_velocitydensity(job: PlotJob):
    counts, bounds, vals_r, vals_b = _load_pair(job)
    _, phi_r, _ = spatial_marginals(vals_r, counts, bounds)
    _, phi_b, _ = spatial_marginals(vals_b, counts, bounds)
    phi = phi_r + phi_b
    fig, ax = _new_figure()
    im = ax.imshow(
        phi.T, origin="lower", cmap="viridis",
        extent=(bounds[4], bounds[5], bounds[6], bounds[7]), aspect="auto",
    )
    fig.colorbar(im, ax=ax, label="phi_red + phi_blue")
    ax.set_xlabel("v1")
    ax.set_ylabel("v2")
    _save(fig, job.output)


RENDERERS = {
    "quiver": render_quiver,
    "densitydiff": render_densitydiff,
    "profile": render_profile,
    "velocitydensity": render_velocitydensity,
}


def render(job: PlotJob):
    """Render one job; inputs are checksummed before and after."""
    before = [sha256(p) for p in job.inputs]
    RENDERERS[job.kind](job)
    after = [sha256(p) for p in job.inputs]
    if before != after:
        raise RuntimeError(f"input files changed while rendering {job.output}")


def discover_jobs(kind: str, indir: Path, outdir: Path) -> list[PlotJob]:
    jobs = []
    if kind == "quiver":
        for snap in sorted(indir.glob("particles*.csv")):
            jobs.append(
                PlotJob(kind, (snap,), outdir / f"quiver_{snap.stem}.png")
            )
        return jobs
    for red in sorted(indir.glob("f_red_*.bin")):
        blue = red.with_name(red.name.replace("f_red_", "f_blue_"))
        if not blue.exists():
            continue
        tag = red.stem.replace("f_red_", "")
        jobs.append(PlotJob(kind, (red, blue), outdir / f"{kind}_{tag}.png"))
    return jobs


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--in", dest="indir", required=True, help="snapshot directory or file")
    parser.add_argument("--out", dest="outdir", required=True, help="image output directory")
    args = parser.parse_args(argv)

    indir = Path(args.indir)
    outdir = Path(args.outdir)
    if indir.is_file():
        if args.kind == "quiver":
            jobs = [PlotJob("quiver", (indir,), outdir / f"quiver_{indir.stem}.png")]
        else:
            print("grid-based kinds need --in DIRECTORY with f_red_/f_blue_ pairs", file=sys.stderr)
            return 2
    else:
        jobs = discover_jobs(args.kind, indir, outdir)
    if not jobs:
        print(f"no inputs for kind {args.kind!r} under {indir}", file=sys.stderr)
        return 2
    try:
        for job in jobs:
            render(job)
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"rendered {len(jobs)} image(s) into {outdir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
