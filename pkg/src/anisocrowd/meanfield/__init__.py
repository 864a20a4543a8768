"""Mesoscopic solver for the coupled two-group kinetic system.

The splitting per step is: velocity drift for half a step, full spatial
transport, velocity drift for the second half, with the drift field frozen
at the step-start densities.
"""

from .grid import (
    PhaseDensity,
    PhaseGrid,
    characteristic_table,
    init_uniform,
    marginals,
    total_mass,
)
from .field import FieldWorkspace, interaction_field
from .transport import semi_lagrangian_transport
from .fv import CFLViolation, fv_velocity_halfstep
from .strang import MeanFieldSim, strang_step

__all__ = [
    "PhaseGrid",
    "PhaseDensity",
    "init_uniform",
    "marginals",
    "total_mass",
    "characteristic_table",
    "FieldWorkspace",
    "interaction_field",
    "semi_lagrangian_transport",
    "fv_velocity_halfstep",
    "CFLViolation",
    "MeanFieldSim",
    "strang_step",
]
