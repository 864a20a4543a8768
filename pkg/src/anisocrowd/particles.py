"""Microscopic N-agent simulator.

Time stepping follows a leap-frog scheme with a split velocity update: a
half position drift, an implicit relaxation toward the group's desired
velocity, an explicit kick from the rotated pair interactions evaluated on
the frozen post-drift snapshot, and a second half drift. Periodic seams are
handled with ghost copies of near-edge agents during the force pass and a
coordinate wrap afterwards; walls reflect position and normal velocity.

Obstacles are ordinary interaction sources with frozen positions and
outward-pointing artificial velocities; they are never advanced.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .forces import ModelParams, interaction_accelerations

log = logging.getLogger(__name__)

GROUP_RED = 0
GROUP_BLUE = 1
GROUP_OBSTACLE = 2

GROUP_LETTER = {GROUP_RED: "r", GROUP_BLUE: "b", GROUP_OBSTACLE: "o"}
LETTER_GROUP = {v: k for k, v in GROUP_LETTER.items()}

PERIODIC = "periodic"
REFLECTIVE = "reflective"

# Above this pairwise-matrix size the stepper switches from the dense
# all-pairs kernel to the cell-grid neighbor search.
_BRUTEFORCE_LIMIT = 2_000_000


class NumericalBlowup(RuntimeError):
    """Raised when a step produces non-finite positions or velocities."""

    def __init__(self, step_index: int):
        super().__init__(f"non-finite agent state after step {step_index}")
        self.step_index = step_index


@dataclass
class Agents:
    """Struct-of-arrays agent container: positions, velocities, group tags."""

    x: np.ndarray  # (N, 2) float64
    v: np.ndarray  # (N, 2) float64
    group: np.ndarray  # (N,) int8, GROUP_* codes

    def __post_init__(self):
        self.x = np.ascontiguousarray(self.x, dtype=np.float64)
        self.v = np.ascontiguousarray(self.v, dtype=np.float64)
        self.group = np.ascontiguousarray(self.group, dtype=np.int8)
        n = len(self.group)
        if self.x.shape != (n, 2) or self.v.shape != (n, 2):
            raise ValueError("x and v must have shape (N, 2) matching group length")

    @property
    def n(self) -> int:
        return len(self.group)

    @property
    def pedestrian(self) -> np.ndarray:
        return self.group != GROUP_OBSTACLE

    def count(self, code: int) -> int:
        return int(np.sum(self.group == code))

    def copy(self) -> "Agents":
        return Agents(self.x.copy(), self.v.copy(), self.group.copy())


def concat_agents(*parts: Agents) -> Agents:
    return Agents(
        np.concatenate([p.x for p in parts]),
        np.concatenate([p.v for p in parts]),
        np.concatenate([p.group for p in parts]),
    )


@dataclass(frozen=True)
class DomainSpec:
    """Axis-aligned rectangle with a boundary kind per axis.

    Periodic edges always come in opposite pairs, so the kind is stored per
    axis: ``bc_x1`` covers the left/right pair, ``bc_x2`` bottom/top.
    """

    x1_min: float = -45.0
    x1_max: float = 45.0
    x2_min: float = -15.0
    x2_max: float = 15.0
    bc_x1: str = PERIODIC
    bc_x2: str = REFLECTIVE

    def __post_init__(self):
        if not (self.x1_min < self.x1_max and self.x2_min < self.x2_max):
            raise ValueError("domain bounds must satisfy min < max on both axes")
        for bc in (self.bc_x1, self.bc_x2):
            if bc not in (PERIODIC, REFLECTIVE):
                raise ValueError(f"unknown boundary kind {bc!r}")

    @property
    def period(self) -> tuple[float, float]:
        return (self.x1_max - self.x1_min, self.x2_max - self.x2_min)

    def contains(self, x: np.ndarray) -> np.ndarray:
        return (
            (x[..., 0] >= self.x1_min)
            & (x[..., 0] <= self.x1_max)
            & (x[..., 1] >= self.x2_min)
            & (x[..., 1] <= self.x2_max)
        )


def apply_periodic(x, domain: DomainSpec) -> np.ndarray:
    """Wrap coordinates on periodic axes into [min, max); walls untouched."""
    x = np.array(x, dtype=np.float64, copy=True)
    bounds = ((domain.x1_min, domain.x1_max), (domain.x2_min, domain.x2_max))
    kinds = (domain.bc_x1, domain.bc_x2)
    for ax, ((lo, hi), kind) in enumerate(zip(bounds, kinds)):
        if kind != PERIODIC:
            continue
        period = hi - lo
        c = x[..., ax]
        wrapped = lo + np.mod(c - lo, period)
        # np.mod may round up to the period itself for tiny negatives.
        wrapped = np.where(wrapped >= hi, wrapped - period, wrapped)
        x[..., ax] = np.where((c >= lo) & (c < hi), c, wrapped)
    return x


def apply_reflective(x, v, domain: DomainSpec) -> tuple[np.ndarray, np.ndarray]:
    """Mirror positions across violated walls and flip the normal velocity.

    Each axis is treated independently (a corner overshoot mirrors both
    components). Two mirror passes are attempted; a position still outside
    after that is clamped to the wall with the velocity flipped, which is
    logged since it indicates a pathologically large step.
    """
    x = np.array(x, dtype=np.float64, copy=True)
    v = np.array(v, dtype=np.float64, copy=True)
    bounds = ((domain.x1_min, domain.x1_max), (domain.x2_min, domain.x2_max))
    kinds = (domain.bc_x1, domain.bc_x2)
    for ax, ((lo, hi), kind) in enumerate(zip(bounds, kinds)):
        if kind != REFLECTIVE:
            continue
        c = x[..., ax]
        w = v[..., ax]
        for _ in range(2):
            below = c < lo
            above = c > hi
            if not (np.any(below) or np.any(above)):
                break
            c = np.where(below, 2.0 * lo - c, c)
            c = np.where(above, 2.0 * hi - c, c)
            flip = below | above
            w = np.where(flip, -w, w)
        still_out = (c < lo) | (c > hi)
        if np.any(still_out):
            log.warning(
                "reflective clamp on axis %d for %d agent(s); step too large",
                ax,
                int(np.sum(still_out)),
            )
            c = np.clip(c, lo, hi)
            w = np.where(still_out, -w, w)
        x[..., ax] = c
        v[..., ax] = w
    return x, v


def ghost_copies(agents: Agents, domain: DomainSpec, r_cut: float) -> Agents:
    """Original agents plus shifted duplicates near periodic seams.

    Any agent within ``r_cut`` of a periodic edge is duplicated shifted by
    the period so force sums see across the seam; with two periodic axes a
    corner agent acquires up to three ghosts. Ghosts keep their source's
    velocity and group tag and must never enter the 1/N normalization.
    """
    x, v, g = agents.x, agents.v, agents.group
    p1, p2 = domain.period
    ax_shifts = []
    if domain.bc_x1 == PERIODIC:
        ax_shifts.append((0, domain.x1_min, domain.x1_max, p1))
    if domain.bc_x2 == PERIODIC:
        ax_shifts.append((1, domain.x2_min, domain.x2_max, p2))

    ghosts_x, ghosts_v, ghosts_g = [], [], []

    def add(mask: np.ndarray, shift: np.ndarray):
        if np.any(mask):
            ghosts_x.append(x[mask] + shift)
            ghosts_v.append(v[mask])
            ghosts_g.append(g[mask])

    per_axis = []
    for ax, lo, hi, period in ax_shifts:
        near_lo = x[:, ax] < lo + r_cut
        near_hi = x[:, ax] > hi - r_cut
        sh_lo = np.zeros(2)
        sh_lo[ax] = period
        sh_hi = np.zeros(2)
        sh_hi[ax] = -period
        add(near_lo, sh_lo)
        add(near_hi, sh_hi)
        per_axis.append((near_lo, sh_lo, near_hi, sh_hi))
    if len(per_axis) == 2:
        (lo1, s_lo1, hi1, s_hi1), (lo2, s_lo2, hi2, s_hi2) = per_axis
        for m1, s1 in ((lo1, s_lo1), (hi1, s_hi1)):
            for m2, s2 in ((lo2, s_lo2), (hi2, s_hi2)):
                add(m1 & m2, s1 + s2)
    if not ghosts_x:
        return agents
    return Agents(
        np.concatenate([x] + ghosts_x),
        np.concatenate([v] + ghosts_v),
        np.concatenate([g] + ghosts_g),
    )


def make_circle_obstacle(
    center, radius: float, n_points: int, speed_scale: float
) -> Agents:
    """Ring of obstacle agents with outward artificial velocities."""
    if n_points < 3:
        raise ValueError("a circle obstacle needs at least 3 points")
    if radius <= 0:
        raise ValueError("obstacle radius must be positive")
    theta = 2.0 * np.pi * np.arange(n_points) / n_points
    ring = np.column_stack([np.cos(theta), np.sin(theta)])
    x = np.asarray(center, dtype=np.float64) + radius * ring
    v = speed_scale * ring
    return Agents(x, v, np.full(n_points, GROUP_OBSTACLE, dtype=np.int8))


def grid_candidate_pairs(
    xt: np.ndarray, xs: np.ndarray, r_cut: float
) -> tuple[np.ndarray, np.ndarray]:
    """Uniform-grid spatial hash: candidate (target, source) index pairs.

    Cell size equals r_cut, so every pair within the cutoff appears among a
    target cell's 3x3 neighborhood. Candidates are emitted in (target,
    bucket-order) order, which is deterministic for fixed inputs.
    """
    lo = np.minimum(xt.min(axis=0), xs.min(axis=0)) - 1e-9
    cell_t = np.floor((xt - lo) / r_cut).astype(np.int64)
    cell_s = np.floor((xs - lo) / r_cut).astype(np.int64)
    n1 = int(max(cell_t[:, 0].max(), cell_s[:, 0].max())) + 1
    n2 = int(max(cell_t[:, 1].max(), cell_s[:, 1].max())) + 1
    sid = cell_s[:, 0] * n2 + cell_s[:, 1]
    order = np.argsort(sid, kind="stable")
    sid_sorted = sid[order]
    ncells = n1 * n2
    counts = np.bincount(sid_sorted, minlength=ncells)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])

    ti_parts, sj_parts = [], []
    t_idx = np.arange(len(xt))
    for d1 in (-1, 0, 1):
        c1 = cell_t[:, 0] + d1
        ok1 = (c1 >= 0) & (c1 < n1)
        for d2 in (-1, 0, 1):
            c2 = cell_t[:, 1] + d2
            ok = ok1 & (c2 >= 0) & (c2 < n2)
            if not np.any(ok):
                continue
            nid = c1[ok] * n2 + c2[ok]
            cnt = counts[nid]
            tot = int(cnt.sum())
            if tot == 0:
                continue
            base = np.repeat(starts[nid], cnt)
            offs = np.arange(tot) - np.repeat(np.cumsum(cnt) - cnt, cnt)
            sj_parts.append(order[base + offs])
            ti_parts.append(np.repeat(t_idx[ok], cnt))
    if not ti_parts:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    return np.concatenate(ti_parts), np.concatenate(sj_parts)


@dataclass
class ParticleSim:
    """State of a microscopic run: agents, model, domain, clock."""

    agents: Agents
    params: ModelParams
    domain: DomainSpec
    dt: float
    t: float = 0.0
    step_index: int = 0
    neighbor_strategy: str = "auto"  # auto | bruteforce | cellgrid
    apply_rotation: bool = True

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.neighbor_strategy not in ("auto", "bruteforce", "cellgrid"):
            raise ValueError(f"unknown neighbor strategy {self.neighbor_strategy!r}")

    @property
    def n_norm(self) -> int:
        """Normalization count: all real agents, obstacles included."""
        return self.agents.n


def step(sim: ParticleSim) -> ParticleSim:
    """Advance one leap-frog step and return the new simulator state.

    The interaction pass sees the frozen snapshot taken after the position
    half-drift and implicit relaxation (obstacles contribute their fixed
    positions and artificial velocities), augmented with ghost copies.
    """
    a = sim.agents
    tau = sim.dt
    ped = a.pedestrian
    u = np.where(
        (a.group == GROUP_RED)[:, None],
        np.asarray(sim.params.u_red, dtype=np.float64),
        np.asarray(sim.params.u_blue, dtype=np.float64),
    )

    x_half = a.x.copy()
    x_half[ped] += (0.5 * tau) * a.v[ped]
    v_rel = a.v.copy()
    v_rel[ped] = (a.v[ped] + tau * u[ped]) / (1.0 + tau)

    snapshot = Agents(x_half, v_rel, a.group)
    sources = ghost_copies(snapshot, sim.domain, sim.params.r_cut)

    strategy = sim.neighbor_strategy
    if strategy == "auto":
        dense = a.n * sources.n
        strategy = "bruteforce" if dense <= _BRUTEFORCE_LIMIT else "cellgrid"
    pairs = None
    if strategy == "cellgrid":
        pairs = grid_candidate_pairs(x_half, sources.x, sim.params.r_cut)
    acc = interaction_accelerations(
        x_half,
        v_rel,
        sources.x,
        sources.v,
        sim.params,
        sim.n_norm,
        apply_rotation=sim.apply_rotation,
        pairs=pairs,
    )

    # Overflow here means blow-up; the finiteness check below owns it.
    with np.errstate(over="ignore", invalid="ignore"):
        v_new = v_rel.copy()
        v_new[ped] += tau * acc[ped]
        x_new = x_half.copy()
        x_new[ped] += (0.5 * tau) * v_new[ped]

        x_new[ped] = apply_periodic(x_new[ped], sim.domain)
        x_new[ped], v_new[ped] = apply_reflective(x_new[ped], v_new[ped], sim.domain)

    if not (np.all(np.isfinite(x_new)) and np.all(np.isfinite(v_new))):
        raise NumericalBlowup(sim.step_index)

    return replace(
        sim,
        agents=Agents(x_new, v_new, a.group),
        t=sim.t + tau,
        step_index=sim.step_index + 1,
    )


def run(sim: ParticleSim, n_steps: int, observer=None) -> ParticleSim:
    """Advance ``n_steps`` steps, invoking ``observer(sim)`` after each."""
    for _ in range(n_steps):
        sim = step(sim)
        if observer is not None:
            observer(sim)
    return sim
