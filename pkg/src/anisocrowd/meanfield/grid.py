"""Phase-space grid, cell-averaged densities, and their marginals.

Densities live on a 4D tensor-product grid over position x velocity with
axis order (x1, x2, v1, v2), x1 slowest and v2 fastest, matching the
on-disk layout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PhaseGrid:
    nx: int
    ny: int
    nv1: int
    nv2: int
    x1_min: float = -45.0
    x1_max: float = 45.0
    x2_min: float = -15.0
    x2_max: float = 15.0
    v1_min: float = -0.6
    v1_max: float = 0.6
    v2_min: float = -0.6
    v2_max: float = 0.6

    def __post_init__(self):
        if min(self.nx, self.ny, self.nv1, self.nv2) < 1:
            raise ValueError("all cell counts must be positive")
        spans = (
            self.x1_max - self.x1_min,
            self.x2_max - self.x2_min,
            self.v1_max - self.v1_min,
            self.v2_max - self.v2_min,
        )
        if min(spans) <= 0:
            raise ValueError("all box spans must be positive")

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return (self.nx, self.ny, self.nv1, self.nv2)

    @property
    def dx1(self) -> float:
        return (self.x1_max - self.x1_min) / self.nx

    @property
    def dx2(self) -> float:
        return (self.x2_max - self.x2_min) / self.ny

    @property
    def dv1(self) -> float:
        return (self.v1_max - self.v1_min) / self.nv1

    @property
    def dv2(self) -> float:
        return (self.v2_max - self.v2_min) / self.nv2

    @property
    def cell_volume(self) -> float:
        return self.dx1 * self.dx2 * self.dv1 * self.dv2

    def x1_centers(self) -> np.ndarray:
        return self.x1_min + (np.arange(self.nx) + 0.5) * self.dx1

    def x2_centers(self) -> np.ndarray:
        return self.x2_min + (np.arange(self.ny) + 0.5) * self.dx2

    def v1_centers(self) -> np.ndarray:
        return self.v1_min + (np.arange(self.nv1) + 0.5) * self.dv1

    def v2_centers(self) -> np.ndarray:
        return self.v2_min + (np.arange(self.nv2) + 0.5) * self.dv2

    def velocity_centers(self) -> np.ndarray:
        """All velocity cell centers, shape (nv1*nv2, 2), v2 fastest."""
        V1, V2 = np.meshgrid(self.v1_centers(), self.v2_centers(), indexing="ij")
        return np.column_stack([V1.ravel(), V2.ravel()])

    def bounds(self) -> tuple[float, ...]:
        return (
            self.x1_min, self.x1_max, self.x2_min, self.x2_max,
            self.v1_min, self.v1_max, self.v2_min, self.v2_max,
        )


@dataclass
class PhaseDensity:
    """One group's cell-averaged phase-space density."""

    grid: PhaseGrid
    values: np.ndarray  # (nx, ny, nv1, nv2), must stay >= -1e-12
    group: str = "red"  # "red" or "blue"

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"values shape {self.values.shape} != grid shape {self.grid.shape}"
            )
        if self.group not in ("red", "blue"):
            raise ValueError("group must be 'red' or 'blue'")

    def copy(self) -> "PhaseDensity":
        return PhaseDensity(self.grid, self.values.copy(), self.group)


def total_mass(f: PhaseDensity) -> float:
    return float(f.values.sum() * f.grid.cell_volume)


def init_uniform(
    grid: PhaseGrid,
    x_support: tuple[float, float, float, float],
    v_support: tuple[float, float, float, float],
    mass: float,
    group: str = "red",
) -> PhaseDensity:
    """Uniform density on cells whose centers lie in the given boxes.

    The value is chosen from the discrete support so the total mass equals
    ``mass`` exactly (up to roundoff), independent of how the support box
    edges fall relative to cell centers.
    """
    x1a, x1b, x2a, x2b = x_support
    v1a, v1b, v2a, v2b = v_support
    in_x1 = (grid.x1_centers() >= x1a) & (grid.x1_centers() <= x1b)
    in_x2 = (grid.x2_centers() >= x2a) & (grid.x2_centers() <= x2b)
    in_v1 = (grid.v1_centers() >= v1a) & (grid.v1_centers() <= v1b)
    in_v2 = (grid.v2_centers() >= v2a) & (grid.v2_centers() <= v2b)
    mask = (
        in_x1[:, None, None, None]
        & in_x2[None, :, None, None]
        & in_v1[None, None, :, None]
        & in_v2[None, None, None, :]
    )
    count = int(mask.sum())
    values = np.zeros(grid.shape)
    if mass != 0.0:
        if count == 0:
            raise ValueError("support boxes contain no cell centers")
        values[mask] = mass / (count * grid.cell_volume)
    return PhaseDensity(grid, values, group)


def marginals(f: PhaseDensity) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Spatial density rho(x1,x2), velocity density phi(v1,v2), and the
    x2 profile obtained by also averaging over x1."""
    g = f.grid
    rho = f.values.sum(axis=(2, 3)) * (g.dv1 * g.dv2)
    phi = f.values.sum(axis=(0, 1)) * (g.dx1 * g.dx2)
    rho2 = rho.sum(axis=0) * g.dx1
    return rho, phi, rho2


def mean_velocity(f: PhaseDensity) -> np.ndarray:
    """Mass-weighted mean of the velocity variable (diagnostic)."""
    g = f.grid
    _, phi, _ = marginals(f)
    m = phi.sum() * g.dv1 * g.dv2
    if m <= 0:
        return np.zeros(2)
    m1 = float((phi.sum(axis=1) * g.v1_centers()).sum() * g.dv1 * g.dv2)
    m2 = float((phi.sum(axis=0) * g.v2_centers()).sum() * g.dv1 * g.dv2)
    return np.array([m1, m2]) / m


def characteristic_table(grid: PhaseGrid, tau: float) -> np.ndarray:
    """Departure-point offsets per velocity cell for one transport step.

    The advecting velocity is constant during the spatial sub-step, so the
    characteristics are straight lines and the offsets are exactly -v*tau
    (a second-order Runge-Kutta trace of dx/dt = v reproduces this
    bitwise on a velocity-independent field).
    """
    v1 = grid.v1_centers()
    v2 = grid.v2_centers()
    table = np.empty((grid.nv1, grid.nv2, 2))
    table[..., 0] = -v1[:, None] * tau
    table[..., 1] = -v2[None, :] * tau
    return table
