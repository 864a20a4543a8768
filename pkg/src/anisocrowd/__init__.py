"""Two-level crowd simulation with rotation-based collision avoidance.

The microscopic level integrates an N-agent second-order system in which
each pairwise repulsion is rotated by a fraction of the angle between the
two agents' velocities; the mesoscopic level solves the corresponding
coupled kinetic equations for the two groups on a 4D phase-space grid.
"""

__version__ = "0.1.0"

from .vecmath import Rotation2, interaction_angle, rotate, vec2
from .forces import (
    ModelParams,
    MorseParams,
    desired_acceleration,
    interaction_acceleration,
    morse_potential,
    pair_force,
)
from .particles import (
    Agents,
    DomainSpec,
    ParticleSim,
    apply_periodic,
    apply_reflective,
    ghost_copies,
    make_circle_obstacle,
    step,
)
from .scenarios import (
    CHANNEL,
    CROSSING,
    ScenarioConfig,
    load_config,
    sample_initial_particles,
)
from .diagnostics import (
    LaneReport,
    desired_velocity_fraction,
    lane_metrics,
    mass_audit,
    segregation_index,
)
from . import meanfield

__all__ = [
    "__version__",
    "vec2",
    "interaction_angle",
    "rotate",
    "Rotation2",
    "MorseParams",
    "ModelParams",
    "morse_potential",
    "pair_force",
    "desired_acceleration",
    "interaction_acceleration",
    "Agents",
    "DomainSpec",
    "ParticleSim",
    "step",
    "apply_periodic",
    "apply_reflective",
    "ghost_copies",
    "make_circle_obstacle",
    "ScenarioConfig",
    "CHANNEL",
    "CROSSING",
    "load_config",
    "sample_initial_particles",
    "LaneReport",
    "lane_metrics",
    "desired_velocity_fraction",
    "segregation_index",
    "mass_audit",
    "meanfield",
]
