"""Morse pair potential and assembly of the rotated interaction acceleration.

The potential is P(d) = R exp(-d/r) - A exp(-d/a); the pair force is its
gradient with respect to the first agent's position,

    K(x_i, x_j) = P'(d) (x_i - x_j) / d,   d = |x_i - x_j|,

and the acceleration contribution on agent i is the rotated, range-limited
mean over partners:

    -(1/N) sum_{j != i, d <= r_cut} rotate(K(x_i, x_j), angle(v_i, v_j)).

With the repulsion-only parameters used throughout (A = 0) this pushes
agents apart; the rotation tilts the push sideways so that opposing agents
sidestep instead of stalling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .vecmath import EPS_SPEED, interaction_angle, rotate, validate_lambda

# Pairs closer than this are treated as coincident and exert no force
# (the unit vector (x_i - x_j)/d is undefined at d = 0).
EPS_DIST = 1e-9


@dataclass(frozen=True)
class MorseParams:
    """Strengths (A attraction, R repulsion) and ranges (a, r) of P."""

    A: float = 0.0
    R: float = 500.0
    a: float = 1.5
    r: float = 1.5

    def __post_init__(self):
        for name in ("A", "R", "a", "r"):
            val = getattr(self, name)
            if not np.isfinite(val):
                raise ValueError(f"Morse parameter {name} must be finite")
        if self.A < 0 or self.R < 0:
            raise ValueError("Morse strengths A, R must be non-negative")
        if self.a <= 0 or self.r <= 0:
            raise ValueError("Morse ranges a, r must be positive")


@dataclass(frozen=True)
class ModelParams:
    """Everything the force assembly needs besides the agent states.

    The default interaction cutoff is 2.0 m: long enough to keep the
    truncated Morse tail irrelevant for the pattern experiments, short
    enough that counterflow and crossing streams organize on the reported
    timescales (a 3.0 m cutoff provably delays the crossing waves).
    """

    morse: MorseParams = field(default_factory=MorseParams)
    lam: float = 0.25
    r_cut: float = 2.0
    u_red: tuple[float, float] = (0.2, 0.0)
    u_blue: tuple[float, float] = (-0.2, 0.0)
    wide_lambda: bool = False

    def __post_init__(self):
        validate_lambda(self.lam, allow_wide=self.wide_lambda)
        if not (np.isfinite(self.r_cut) and self.r_cut > 0):
            raise ValueError("r_cut must be positive and finite")
        for u in (self.u_red, self.u_blue):
            if not np.all(np.isfinite(u)):
                raise ValueError("desired velocities must be finite")

    def desired(self, group_code: int) -> np.ndarray:
        return np.asarray(self.u_red if group_code == 0 else self.u_blue, dtype=np.float64)


def morse_potential(d, p: MorseParams):
    """P(d) = R exp(-d/r) - A exp(-d/a); accepts scalars or arrays."""
    d = np.asarray(d, dtype=np.float64)
    return p.R * np.exp(-d / p.r) - p.A * np.exp(-d / p.a)


def morse_deriv(d, p: MorseParams):
    """P'(d) = -(R/r) exp(-d/r) + (A/a) exp(-d/a)."""
    d = np.asarray(d, dtype=np.float64)
    return -(p.R / p.r) * np.exp(-d / p.r) + (p.A / p.a) * np.exp(-d / p.a)


def pair_force(xi, xj, p: MorseParams) -> np.ndarray:
    """Force K(x_i, x_j) on agent i exerted through the pair potential.

    Returns (0, 0) for coincident points (d <= EPS_DIST); antisymmetric
    under swapping the two positions.
    """
    dx1 = float(xi[0]) - float(xj[0])
    dx2 = float(xi[1]) - float(xj[1])
    d = np.hypot(dx1, dx2)
    if d <= EPS_DIST:
        return np.zeros(2)
    s = float(morse_deriv(d, p)) / d
    return np.array([s * dx1, s * dx2])


def desired_acceleration(v, u) -> np.ndarray:
    """Relaxation drive u - v toward the group's desired velocity."""
    return np.asarray(u, dtype=np.float64) - np.asarray(v, dtype=np.float64)


def interaction_acceleration(
    i: int,
    x: np.ndarray,
    v: np.ndarray,
    params: ModelParams,
    n_norm: int,
) -> np.ndarray:
    """Rotated interaction sum for agent ``i`` against a frozen snapshot.

    ``x``/``v`` hold the positions/velocities of every interaction source
    (the real agents, possibly followed by ghost copies); ``n_norm`` is the
    real agent count used for the 1/N normalization, which never counts
    ghosts. Partners beyond ``params.r_cut`` do not contribute.

    Reference implementation: accumulates partner by partner in index
    order. The simulator uses the vectorized kernels below, which agree
    with this one to roundoff.
    """
    if n_norm < 1:
        raise ValueError("n_norm must be at least 1")
    xi = x[i]
    vi = v[i]
    acc = np.zeros(2)
    for j in range(len(x)):
        if j == i:
            continue
        d = np.hypot(x[j, 0] - xi[0], x[j, 1] - xi[1])
        if d > params.r_cut or d <= EPS_DIST:
            continue
        f = pair_force(xi, x[j], params.morse)
        alpha = interaction_angle(vi, v[j], params.lam)
        acc += rotate(f, alpha)
    return -acc / n_norm


def _pair_contributions(xt, vt, xs, vs, ti, sj, params: ModelParams, apply_rotation: bool):
    """Per-pair rotated force vectors for candidate pairs (ti[k], sj[k])."""
    dx1 = xt[ti, 0] - xs[sj, 0]
    dx2 = xt[ti, 1] - xs[sj, 1]
    d = np.hypot(dx1, dx2)
    # Overflow to inf is tolerated here; the stepper aborts on it.
    with np.errstate(over="ignore", invalid="ignore"):
        s = morse_deriv(d, params.morse) / d
        f1 = s * dx1
        f2 = s * dx2
        if apply_rotation:
            alpha = _pair_angles(vt[ti], vs[sj], params.lam)
            c = np.cos(alpha)
            sn = np.sin(alpha)
            return f1 * c - f2 * sn, f1 * sn + f2 * c
    return f1, f2


def _pair_angles(V, W, lam: float) -> np.ndarray:
    """interaction_angle evaluated elementwise on matched rows of V and W."""
    nv = np.hypot(V[:, 0], V[:, 1])
    nw = np.hypot(W[:, 0], W[:, 1])
    dot = V[:, 0] * W[:, 0] + V[:, 1] * W[:, 1]
    denom = nv * nw
    moving = (nv > EPS_SPEED) & (nw > EPS_SPEED)
    c = np.divide(dot, denom, out=np.ones_like(dot), where=moving)
    np.clip(c, -1.0, 1.0, out=c)
    alpha = lam * np.arccos(c)
    alpha[~moving] = 0.0
    return alpha


def interaction_accelerations(
    xt: np.ndarray,
    vt: np.ndarray,
    xs: np.ndarray,
    vs: np.ndarray,
    params: ModelParams,
    n_norm: int,
    apply_rotation: bool = True,
    pairs: tuple[np.ndarray, np.ndarray] | None = None,
) -> np.ndarray:
    """Vectorized interaction sum for every target agent at once.

    Targets (xt, vt) are assumed to be the leading rows of the source
    arrays (xs, vs), which may carry extra ghost rows; self pairs are
    excluded by index. ``pairs`` optionally supplies precomputed candidate
    pairs from a neighbor search; otherwise all target/source pairs are
    screened against r_cut directly.

    ``apply_rotation=False`` selects the isotropic reference path with the
    rotation code removed entirely (used by the lambda = 0 equivalence
    check).
    """
    nt = len(xt)
    if pairs is None:
        dx1 = xt[:, 0:1] - xs[None, :, 0]
        dx2 = xt[:, 1:2] - xs[None, :, 1]
        d2 = dx1 * dx1 + dx2 * dx2
        mask = (d2 <= params.r_cut * params.r_cut) & (d2 > EPS_DIST * EPS_DIST)
        idx = np.arange(nt)
        mask[idx, idx] = False
        ti, sj = np.nonzero(mask)
    else:
        ti, sj = pairs
        dx1 = xt[ti, 0] - xs[sj, 0]
        dx2 = xt[ti, 1] - xs[sj, 1]
        d2 = dx1 * dx1 + dx2 * dx2
        keep = (d2 <= params.r_cut * params.r_cut) & (d2 > EPS_DIST * EPS_DIST) & (ti != sj)
        ti = ti[keep]
        sj = sj[keep]
    f1, f2 = _pair_contributions(xt, vt, xs, vs, ti, sj, params, apply_rotation)
    acc = np.empty((nt, 2))
    acc[:, 0] = np.bincount(ti, weights=f1, minlength=nt)
    acc[:, 1] = np.bincount(ti, weights=f2, minlength=nt)
    acc *= -1.0 / n_norm
    return acc
