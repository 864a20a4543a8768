"""Quantitative observables: lane metrics, velocity attainment, segregation.

These back both the regression tests and the figure scripts. Lane
detection works on an x2 histogram per group: a lane is a maximal run of
contiguous bins where one group outnumbers the other by the dominance
factor and clears an occupancy floor. The dominance factor 3 and the 2%
floor are calibrated constants of this implementation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .particles import GROUP_BLUE, GROUP_RED, Agents
from .meanfield.grid import PhaseDensity, total_mass

LANE_DOMINANCE = 3.0
LANE_FLOOR_FRACTION = 0.02
DEFAULT_BIN_WIDTH = 1.5  # one repulsion range


@dataclass(frozen=True)
class LaneReport:
    lane_count: int
    lane_boundaries: tuple[float, ...]
    purity: float
    mean_x2_red: float
    mean_x2_blue: float


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Maximal runs of True as (start, stop) index pairs."""
    runs = []
    start = None
    for i, flag in enumerate(mask):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            runs.append((start, i))
            start = None
    if start is not None:
        runs.append((start, len(mask)))
    return runs


def lane_metrics(agents: Agents, bin_width: float = DEFAULT_BIN_WIDTH) -> LaneReport:
    """Histogram-based lane detection along the x2 axis."""
    ped = agents.pedestrian
    if not np.any(ped):
        raise ValueError("lane metrics need at least one non-obstacle agent")
    x2 = agents.x[ped, 1]
    red = agents.group[ped] == GROUP_RED
    blue = agents.group[ped] == GROUP_BLUE

    lo = float(x2.min())
    hi = float(x2.max())
    nbins = max(1, int(np.ceil((hi - lo) / bin_width)))
    edges = lo + bin_width * np.arange(nbins + 1)
    edges[-1] = max(edges[-1], hi + 1e-12)
    count_r, _ = np.histogram(x2[red], bins=edges)
    count_b, _ = np.histogram(x2[blue], bins=edges)

    n_red = int(red.sum())
    n_blue = int(blue.sum())
    floor_r = max(1.0, LANE_FLOOR_FRACTION * n_red)
    floor_b = max(1.0, LANE_FLOOR_FRACTION * n_blue)
    red_dom = (count_r >= LANE_DOMINANCE * count_b) & (count_r >= floor_r)
    blue_dom = (count_b >= LANE_DOMINANCE * count_r) & (count_b >= floor_b)

    boundaries: list[float] = []
    lane_count = 0
    for mask in (red_dom, blue_dom):
        for start, stop in _runs(mask):
            lane_count += 1
            boundaries.extend((float(edges[start]), float(edges[stop])))

    bins = np.clip(np.searchsorted(edges, x2, side="right") - 1, 0, nbins - 1)
    own = np.where(red, count_r[bins], count_b[bins])
    other = np.where(red, count_b[bins], count_r[bins])
    purity = float(np.mean(own > other))

    mean_red = float(x2[red].mean()) if n_red else float("nan")
    mean_blue = float(x2[blue].mean()) if n_blue else float("nan")
    return LaneReport(
        lane_count=lane_count,
        lane_boundaries=tuple(sorted(boundaries)),
        purity=purity,
        mean_x2_red=mean_red,
        mean_x2_blue=mean_blue,
    )


def desired_velocity_fraction(agents: Agents, params, eps: float) -> float:
    """Fraction of pedestrians within eps of their group's desired velocity."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    ped = agents.pedestrian
    u = np.where(
        (agents.group == GROUP_RED)[:, None],
        np.asarray(params.u_red, dtype=np.float64),
        np.asarray(params.u_blue, dtype=np.float64),
    )
    d = (agents.v - u)[ped]
    dev = np.hypot(d[:, 0], d[:, 1])
    return float(np.mean(dev <= eps))


def segregation_index(rho_r: np.ndarray, rho_b: np.ndarray, grid, axis: str = "x2") -> float:
    """First moment of the density difference along the chosen axis.

    Positive for axis="x2" means the blue group sits above the red one
    (and the sign flips when the two inputs are swapped).
    """
    if rho_r.shape != rho_b.shape:
        raise ValueError("density arrays must have the same shape")
    diff = rho_b - rho_r
    da = grid.dx1 * grid.dx2
    if axis == "x2":
        centers = grid.x2_centers()
        return float((diff.sum(axis=0) * centers).sum() * da)
    if axis == "x1":
        centers = grid.x1_centers()
        return float((diff.sum(axis=1) * centers).sum() * da)
    raise ValueError("axis must be 'x1' or 'x2'")


def mass_audit(f: PhaseDensity) -> float:
    """Total mass via cell-volume quadrature."""
    return total_mass(f)
