"""Snapshot and manifest I/O.

Particle snapshots are CSV with header ``t,id,group,x1,x2,v1,v2`` (group
letters r/b/o), either one file per snapshot or one long appended file.
Grid snapshots are binary: magic ``ANISOF01``, four little-endian u32 cell
counts (nx, ny, nv1, nv2), eight little-endian f64 box bounds (x1, x2, v1,
v2 ranges as min/max pairs), then the f64 cell values in row-major order
with x1 slowest and v2 fastest. Marginals are emitted as CSV matrices with
rows running down the x2 (or v2) axis.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .meanfield.grid import PhaseDensity, PhaseGrid
from .particles import GROUP_LETTER, LETTER_GROUP, Agents

MAGIC = b"ANISOF01"

_HEADER = "t,id,group,x1,x2,v1,v2"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_particle_snapshot(path, t: float, agents: Agents, append: bool = False) -> None:
    mode = "a" if append else "w"
    path = Path(path)
    write_header = not (append and path.exists() and path.stat().st_size > 0)
    with open(path, mode, encoding="utf-8", newline="\n") as fh:
        if write_header:
            fh.write(_HEADER + "\n")
        ts = _fmt(t)
        for i in range(agents.n):
            fh.write(
                f"{ts},{i},{GROUP_LETTER[int(agents.group[i])]},"
                f"{_fmt(agents.x[i, 0])},{_fmt(agents.x[i, 1])},"
                f"{_fmt(agents.v[i, 0])},{_fmt(agents.v[i, 1])}\n"
            )


def read_particle_snapshot(path) -> tuple[np.ndarray, np.ndarray, Agents]:
    """Read one snapshot CSV; returns (times, ids, agents).

    Long-format files contain several times; callers slice by time.
    """
    times, ids, groups, xs, vs = [], [], [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != _HEADER:
            raise ValueError(f"unexpected snapshot header {header!r} in {path}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 7:
                raise ValueError(f"{path}:{lineno}: expected 7 fields")
            times.append(float(parts[0]))
            ids.append(int(parts[1]))
            if parts[2] not in LETTER_GROUP:
                raise ValueError(f"{path}:{lineno}: unknown group {parts[2]!r}")
            groups.append(LETTER_GROUP[parts[2]])
            xs.append((float(parts[3]), float(parts[4])))
            vs.append((float(parts[5]), float(parts[6])))
    if not times:
        raise ValueError(f"empty snapshot file {path}")
    agents = Agents(np.array(xs), np.array(vs), np.array(groups, dtype=np.int8))
    return np.array(times), np.array(ids), agents


def write_grid_snapshot(path, f: PhaseDensity) -> None:
    g = f.grid
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<4I", g.nx, g.ny, g.nv1, g.nv2))
        fh.write(struct.pack("<8d", *g.bounds()))
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def read_grid_snapshot(path, group: str = "red") -> PhaseDensity:
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
        nx, ny, nv1, nv2 = struct.unpack("<4I", fh.read(16))
        bounds = struct.unpack("<8d", fh.read(64))
        count = nx * ny * nv1 * nv2
        data = np.frombuffer(fh.read(count * 8), dtype="<f8")
        if data.size != count:
            raise ValueError(f"{path}: truncated payload")
    grid = PhaseGrid(nx, ny, nv1, nv2, *bounds)
    return PhaseDensity(grid, data.reshape(nx, ny, nv1, nv2).copy(), group)


def write_marginal_csv(path, arr: np.ndarray) -> None:
    """Matrix CSV with the second axis as descending rows.

    For a spatial marginal rho(x1, x2) the rows run down the x2 axis
    (top first) and columns along x1; velocity marginals analogously.
    """
    rows = arr.T[::-1]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_marginal_csv(path) -> np.ndarray:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append([float(p) for p in line.split(",")])
    return np.array(rows)[::-1].T


class DiagnosticsWriter:
    """CSV time series: t,metric,value."""

    def __init__(self, path):
        self.path = Path(path)
        self._fh = open(self.path, "w", encoding="utf-8", newline="\n")
        self._fh.write("t,metric,value\n")

    def record(self, t: float, metric: str, value: float) -> None:
        self._fh.write(f"{_fmt(t)},{metric},{_fmt(value)}\n")

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def write_manifest(path, entries: dict) -> None:
    """Flat key = value manifest; list values become one line per item."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key, value in entries.items():
            if isinstance(value, (list, tuple)):
                for item in value:
                    fh.write(f"{key} = {item}\n")
            else:
                fh.write(f"{key} = {value}\n")


def read_manifest(path) -> dict:
    entries: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or "=" not in line:
                continue
            key, value = line.split("=", 1)
            key = key.strip()
            value = value.strip()
            if key in entries:
                prev = entries[key]
                entries[key] = prev + [value] if isinstance(prev, list) else [prev, value]
            else:
                entries[key] = value
    return entries
