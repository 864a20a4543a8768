"""Scenario presets, config file parsing, and seeded initial sampling.

Config files are plain text, one ``key = value`` pair per line with ``#``
comments. Unknown keys are rejected; missing keys fall back to the chosen
scenario preset. The two presets pin the channel and crossing experiments:
counterflow in a periodic channel with reflecting walls, and two crossing
streams on a fully periodic square.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace

import numpy as np

from .forces import ModelParams, MorseParams
from .particles import (
    GROUP_BLUE,
    GROUP_RED,
    PERIODIC,
    REFLECTIVE,
    Agents,
    DomainSpec,
    concat_agents,
    make_circle_obstacle,
)
from .vecmath import validate_lambda


class ConfigError(ValueError):
    """Invalid configuration file or parameter combination (exit code 2)."""


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str = "channel"
    lam: float = 0.25
    A: float = 0.0
    R: float = 500.0
    a: float = 1.5
    r: float = 1.5
    dt_particle: float = 0.01
    dt_meanfield: float = 0.05
    t_end: float = 250.0
    N_r: int = 150
    N_b: int = 150
    seed: int = 1
    x1_min: float = -45.0
    x1_max: float = 45.0
    x2_min: float = -15.0
    x2_max: float = 15.0
    bc_x1: str = PERIODIC
    bc_x2: str = REFLECTIVE
    u_red: tuple[float, float] = (0.2, 0.0)
    u_blue: tuple[float, float] = (-0.2, 0.0)
    v_sample_red: tuple[float, float, float, float] = (0.1, 0.3, -0.2, 0.2)
    v_sample_blue: tuple[float, float, float, float] = (-0.3, -0.1, -0.2, 0.2)
    nx: int = 100
    ny: int = 40
    nv1: int = 20
    nv2: int = 20
    v1_min: float = -0.6
    v1_max: float = 0.6
    v2_min: float = -0.6
    v2_max: float = 0.6
    r_cut: float = 2.0
    stencil_radius: int = 2
    output_every: int = 0  # 0 selects the per-command default cadence
    output_dir: str = "out"
    snapshot_layout: str = "per_snapshot"  # or "long"
    neighbor_strategy: str = "auto"
    allow_wide_lambda: bool = False
    obstacles: tuple[tuple[float, float, float, int, float], ...] = ()

    def model_params(self) -> ModelParams:
        return ModelParams(
            morse=MorseParams(A=self.A, R=self.R, a=self.a, r=self.r),
            lam=self.lam,
            r_cut=self.r_cut,
            u_red=self.u_red,
            u_blue=self.u_blue,
            wide_lambda=self.allow_wide_lambda,
        )

    def domain(self) -> DomainSpec:
        return DomainSpec(
            x1_min=self.x1_min,
            x1_max=self.x1_max,
            x2_min=self.x2_min,
            x2_max=self.x2_max,
            bc_x1=self.bc_x1,
            bc_x2=self.bc_x2,
        )


CHANNEL = ScenarioConfig()

CROSSING = ScenarioConfig(
    scenario="crossing",
    x1_min=-40.0,
    x1_max=40.0,
    x2_min=-40.0,
    x2_max=40.0,
    bc_x1=PERIODIC,
    bc_x2=PERIODIC,
    u_red=(0.2, 0.0),
    u_blue=(0.0, 0.2),
    v_sample_red=(-0.1, 0.1, -0.1, 0.1),
    v_sample_blue=(-0.1, 0.1, -0.1, 0.1),
    nx=40,
    ny=40,
)

PRESETS = {"channel": CHANNEL, "crossing": CROSSING, "custom": CHANNEL}

_TUPLE_LENGTHS = {"u_red": 2, "u_blue": 2, "v_sample_red": 4, "v_sample_blue": 4}
_INT_FIELDS = {"N_r", "N_b", "seed", "nx", "ny", "nv1", "nv2", "stencil_radius", "output_every"}
_STR_FIELDS = {"scenario", "bc_x1", "bc_x2", "output_dir", "snapshot_layout", "neighbor_strategy"}
_BOOL_FIELDS = {"allow_wide_lambda"}

# Config keys as written in files; "lambda" is a Python keyword, hence the
# internal field name "lam".
_KEY_TO_FIELD = {f.name: f.name for f in fields(ScenarioConfig) if f.name not in ("lam", "obstacles")}
_KEY_TO_FIELD["lambda"] = "lam"
_FIELD_TO_KEY = {v: k for k, v in _KEY_TO_FIELD.items()}


def _parse_value(key: str, field_name: str, raw: str, lineno: int):
    try:
        if field_name in _STR_FIELDS:
            return raw.strip()
        if field_name in _BOOL_FIELDS:
            low = raw.strip().lower()
            if low in ("true", "1", "yes"):
                return True
            if low in ("false", "0", "no"):
                return False
            raise ValueError("expected a boolean")
        if field_name in _INT_FIELDS:
            return int(raw)
        if field_name in _TUPLE_LENGTHS:
            parts = tuple(float(p) for p in raw.split())
            if len(parts) != _TUPLE_LENGTHS[field_name]:
                raise ValueError(f"expected {_TUPLE_LENGTHS[field_name]} numbers")
            return parts
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from exc


def _parse_obstacle(raw: str, lineno: int):
    parts = raw.split()
    if len(parts) != 5:
        raise ConfigError(
            f"line {lineno}: obstacle needs 5 values: cx cy radius n_points speed_scale"
        )
    try:
        cx, cy, radius = float(parts[0]), float(parts[1]), float(parts[2])
        n_points = int(parts[3])
        speed_scale = float(parts[4])
    except ValueError as exc:
        raise ConfigError(f"line {lineno}: bad obstacle entry: {exc}") from exc
    return (cx, cy, radius, n_points, speed_scale)


def validate_config(cfg: ScenarioConfig) -> ScenarioConfig:
    """Check ranges and cross-field constraints; returns cfg unchanged."""
    numeric = [
        "lam", "A", "R", "a", "r", "dt_particle", "dt_meanfield", "t_end",
        "x1_min", "x1_max", "x2_min", "x2_max", "v1_min", "v1_max",
        "v2_min", "v2_max", "r_cut",
    ]
    for name in numeric:
        if not np.isfinite(getattr(cfg, name)):
            raise ConfigError(f"{_FIELD_TO_KEY[name]} must be finite")
    try:
        validate_lambda(cfg.lam, allow_wide=cfg.allow_wide_lambda)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.scenario not in PRESETS:
        raise ConfigError(f"scenario must be one of {sorted(PRESETS)}")
    if cfg.dt_particle <= 0 or cfg.dt_meanfield <= 0:
        raise ConfigError("time steps must be positive")
    if cfg.t_end < 0:
        raise ConfigError("t_end must be non-negative")
    if cfg.N_r < 0 or cfg.N_b < 0:
        raise ConfigError("agent counts must be non-negative")
    if cfg.A < 0 or cfg.R < 0 or cfg.a <= 0 or cfg.r <= 0:
        raise ConfigError("Morse parameters need A,R >= 0 and a,r > 0")
    if cfg.r_cut <= 0:
        raise ConfigError("r_cut must be positive")
    if not (cfg.x1_min < cfg.x1_max and cfg.x2_min < cfg.x2_max):
        raise ConfigError("spatial box must have min < max on both axes")
    if not (cfg.v1_min < cfg.v1_max and cfg.v2_min < cfg.v2_max):
        raise ConfigError("velocity box must have min < max on both axes")
    if min(cfg.nx, cfg.ny, cfg.nv1, cfg.nv2) < 1:
        raise ConfigError("grid sizes must be at least 1")
    if cfg.stencil_radius < 1:
        raise ConfigError("stencil_radius must be at least 1")
    if cfg.output_every < 0:
        raise ConfigError("output_every must be non-negative")
    for bc in (cfg.bc_x1, cfg.bc_x2):
        if bc not in (PERIODIC, REFLECTIVE):
            raise ConfigError(f"boundary kind must be periodic or reflective, got {bc!r}")
    if cfg.snapshot_layout not in ("per_snapshot", "long"):
        raise ConfigError("snapshot_layout must be per_snapshot or long")
    if cfg.neighbor_strategy not in ("auto", "bruteforce", "cellgrid"):
        raise ConfigError("neighbor_strategy must be auto, bruteforce or cellgrid")
    for obs in cfg.obstacles:
        cx, cy, radius, n_points, speed_scale = obs
        if radius <= 0 or n_points < 3 or not np.isfinite(speed_scale):
            raise ConfigError(f"invalid obstacle entry {obs}")
    return cfg


def load_config(path: str, overrides: dict | None = None) -> ScenarioConfig:
    """Parse and validate a config file; unknown keys are errors.

    ``overrides`` (field name to value) wins over file contents; the CLI
    uses it for --seed, --out and --allow-wide-lambda.
    """
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    raw_pairs: list[tuple[int, str, str]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ConfigError(f"line {lineno}: expected 'key = value', got {text!r}")
            key, raw = text.split("=", 1)
            raw_pairs.append((lineno, key.strip(), raw.strip()))

    scenario = "channel"
    for _, key, raw in raw_pairs:
        if key == "scenario":
            scenario = raw.strip()
    if scenario not in PRESETS:
        raise ConfigError(f"scenario must be one of {sorted(PRESETS)}, got {scenario!r}")

    cfg = replace(PRESETS[scenario], scenario=scenario)
    file_overrides = {}
    obstacles = list(cfg.obstacles)
    obstacles_overridden = False
    for lineno, key, raw in raw_pairs:
        if key == "scenario":
            continue
        if key == "obstacle":
            if not obstacles_overridden:
                obstacles = []
                obstacles_overridden = True
            obstacles.append(_parse_obstacle(raw, lineno))
            continue
        if key not in _KEY_TO_FIELD:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        field_name = _KEY_TO_FIELD[key]
        file_overrides[field_name] = _parse_value(key, field_name, raw, lineno)
    cfg = replace(cfg, obstacles=tuple(obstacles), **file_overrides)
    cfg = apply_env_overrides(cfg)
    if overrides:
        cfg = replace(cfg, **overrides)
    return validate_config(cfg)


def apply_env_overrides(cfg: ScenarioConfig) -> ScenarioConfig:
    out_dir = os.environ.get("ANISO_OUT")
    if out_dir:
        cfg = replace(cfg, output_dir=out_dir)
    return cfg


def serialize_config(cfg: ScenarioConfig) -> str:
    """Render a config back into the key = value format (round-trips)."""
    lines = []
    for f in fields(ScenarioConfig):
        if f.name == "obstacles":
            continue
        key = _FIELD_TO_KEY[f.name]
        val = getattr(cfg, f.name)
        if isinstance(val, tuple):
            rendered = " ".join(repr(float(p)) for p in val)
        elif isinstance(val, bool):
            rendered = "true" if val else "false"
        elif isinstance(val, float):
            rendered = repr(val)
        else:
            rendered = str(val)
        lines.append(f"{key} = {rendered}")
    for cx, cy, radius, n_points, speed_scale in cfg.obstacles:
        lines.append(
            f"obstacle = {cx!r} {cy!r} {radius!r} {n_points} {speed_scale!r}"
        )
    return "\n".join(lines) + "\n"


def obstacle_agents(cfg: ScenarioConfig) -> Agents | None:
    """Instantiate all configured obstacle rings (None when there are none)."""
    rings = [
        make_circle_obstacle((cx, cy), radius, n_points, speed_scale)
        for cx, cy, radius, n_points, speed_scale in cfg.obstacles
    ]
    if not rings:
        return None
    return concat_agents(*rings)


def sample_initial_particles(cfg: ScenarioConfig) -> Agents:
    """Seeded uniform initial conditions plus configured obstacle rings.

    The random stream layout is fixed so seeds are portable: a PCG64
    generator seeded with cfg.seed draws, in this order, red positions
    (N_r x 2, agent-major), blue positions, red velocities from the red
    sample box, blue velocities from the blue box. Obstacles are appended
    after the sampled pedestrians and consume no random draws.
    """
    if cfg.N_r + cfg.N_b < 1:
        raise ConfigError("need at least one pedestrian (N_r + N_b >= 1)")
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    x_lo = (cfg.x1_min, cfg.x2_min)
    x_hi = (cfg.x1_max, cfg.x2_max)
    x_red = rng.uniform(x_lo, x_hi, size=(cfg.N_r, 2))
    x_blue = rng.uniform(x_lo, x_hi, size=(cfg.N_b, 2))
    rb = cfg.v_sample_red
    bb = cfg.v_sample_blue
    v_red = rng.uniform((rb[0], rb[2]), (rb[1], rb[3]), size=(cfg.N_r, 2))
    v_blue = rng.uniform((bb[0], bb[2]), (bb[1], bb[3]), size=(cfg.N_b, 2))
    agents = Agents(
        np.concatenate([x_red, x_blue]),
        np.concatenate([v_red, v_blue]),
        np.concatenate(
            [
                np.full(cfg.N_r, GROUP_RED, dtype=np.int8),
                np.full(cfg.N_b, GROUP_BLUE, dtype=np.int8),
            ]
        ),
    )
    obs = obstacle_agents(cfg)
    if obs is not None:
        agents = concat_agents(agents, obs)
    return agents
