"""2D vector algebra: the velocity-dependent interaction angle and force rotation.

Every solver in this package funnels its pairwise forces through
:func:`interaction_angle` / :func:`rotate`. The angle between two agents'
velocities, scaled by the anisotropy strength ``lam``, decides how far the
force vector is turned; ``lam = 0`` recovers the plain isotropic model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Speeds below this threshold count as "standing still": no rotation.
EPS_SPEED = 1e-12

# Modelling range for the anisotropy strength. The wide range is only
# admitted behind an explicit override (config key allow_wide_lambda).
LAMBDA_RANGE = (-0.25, 0.25)
LAMBDA_RANGE_WIDE = (-1.0, 1.0)


def vec2(c1: float, c2: float) -> np.ndarray:
    """Finite float64 2-vector; rejects NaN/Inf components."""
    v = np.array([c1, c2], dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise ValueError(f"vector components must be finite, got ({c1}, {c2})")
    return v


def validate_lambda(lam: float, allow_wide: bool = False) -> float:
    """Check the anisotropy strength against its admissible interval."""
    lo, hi = LAMBDA_RANGE_WIDE if allow_wide else LAMBDA_RANGE
    lam = float(lam)
    if not math.isfinite(lam) or lam < lo or lam > hi:
        raise ValueError(
            f"lambda must lie in [{lo}, {hi}] "
            f"(got {lam}; pass allow_wide_lambda for [-1, 1])"
        )
    return lam


def interaction_angle(v, w, lam: float) -> float:
    """Rotation angle for a pair with velocities ``v`` and ``w``.

    Returns ``lam * arccos(v.w / (|v| |w|))``, i.e. ``lam * pi`` for a
    head-on pair and 0 for parallel movers. Zero whenever either speed is
    below EPS_SPEED. The arccos argument is clamped to [-1, 1] because the
    floating-point dot product may overshoot by an ulp.
    """
    v1, v2 = float(v[0]), float(v[1])
    w1, w2 = float(w[0]), float(w[1])
    nv = math.hypot(v1, v2)
    nw = math.hypot(w1, w2)
    if nv <= EPS_SPEED or nw <= EPS_SPEED:
        return 0.0
    c = (v1 * w1 + v2 * w2) / (nv * nw)
    c = min(1.0, max(-1.0, c))
    return lam * math.acos(c)


def angle_matrix(V: np.ndarray, W: np.ndarray, lam: float) -> np.ndarray:
    """All-pairs interaction angles, shape (len(V), len(W)).

    Vectorized counterpart of :func:`interaction_angle`; rows index V.
    """
    V = np.asarray(V, dtype=np.float64)
    W = np.asarray(W, dtype=np.float64)
    nv = np.hypot(V[:, 0], V[:, 1])
    nw = np.hypot(W[:, 0], W[:, 1])
    dot = V @ W.T
    denom = np.outer(nv, nw)
    moving = (nv[:, None] > EPS_SPEED) & (nw[None, :] > EPS_SPEED)
    c = np.divide(dot, denom, out=np.ones_like(dot), where=moving)
    np.clip(c, -1.0, 1.0, out=c)
    alpha = lam * np.arccos(c)
    alpha[~moving] = 0.0
    return alpha


def rotate(f, alpha):
    """Rotate force vector(s) ``f`` by angle(s) ``alpha`` (counterclockwise).

    ``f`` has shape (..., 2); ``alpha`` broadcasts against the leading axes.
    Norm-preserving by construction.
    """
    f = np.asarray(f, dtype=np.float64)
    alpha = np.asarray(alpha, dtype=np.float64)
    c = np.cos(alpha)
    s = np.sin(alpha)
    out = np.empty(np.broadcast(f[..., 0], c).shape + (2,), dtype=np.float64)
    out[..., 0] = f[..., 0] * c - f[..., 1] * s
    out[..., 1] = f[..., 0] * s + f[..., 1] * c
    return out


@dataclass(frozen=True)
class Rotation2:
    """A plane rotation with cached cosine/sine.

    Orthogonal with determinant one; mainly a convenience for tests and for
    callers that reuse one angle many times.
    """

    angle: float
    cos: float = field(init=False)
    sin: float = field(init=False)

    def __post_init__(self):
        if not math.isfinite(self.angle):
            raise ValueError("rotation angle must be finite")
        object.__setattr__(self, "cos", math.cos(self.angle))
        object.__setattr__(self, "sin", math.sin(self.angle))

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.cos, -self.sin], [self.sin, self.cos]])

    def apply(self, f) -> np.ndarray:
        return rotate(np.asarray(f, dtype=np.float64), self.angle)
