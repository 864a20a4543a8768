"""Velocity-space drift field for the kinetic solver.

For group i the field is

    S_i(x, v) = sum_xbar sum_vbar rotate(K(x, xbar), angle(v, vbar))
                  * f(xbar, vbar) * cellvolume  -  (u_i - v),

with the spatial sum restricted to a (2R+1) x (2R+1) cell stencil around x
(R = stencil_radius) and the velocity sum running over every cell. Stencil
reads wrap across periodic seams and vanish beyond reflective walls (no
mass outside). The two source groups are accumulated separately and
combined at the end to avoid cancellation between opposing streams.

The sum factorizes: the rotation angle couples only velocities, and on a
uniform grid the force kernel K depends on the cell offset alone. Each
evaluation therefore reduces to a small spatial stencil convolution of the
density (folding the exact antisymmetry K(-o) = -K(o) into offset pairs)
followed by one matrix product per force component over velocity cells,
which is what makes long runs affordable.
"""

from __future__ import annotations

import numpy as np

from ..forces import EPS_DIST, ModelParams, morse_deriv
from ..particles import PERIODIC, REFLECTIVE
from ..vecmath import angle_matrix


def _pad_index_map(n: int, radius: int, bc: str) -> tuple[np.ndarray, np.ndarray | None]:
    """Source index and validity mask per padded index over [-radius, n + radius).

    Periodic axes wrap (mask None). Beyond a reflective wall there is no
    mass, so those stencil reads are masked to zero; a wall cell therefore
    feels a net force toward the wall, which is what lets structure form
    at the walls of an initially uniform channel.
    """
    idx = np.arange(-radius, n + radius)
    if bc == PERIODIC:
        return np.mod(idx, n), None
    if bc == REFLECTIVE:
        inside = (idx >= 0) & (idx < n)
        return np.clip(idx, 0, n - 1), inside.astype(np.float64)
    raise ValueError(f"unknown boundary kind {bc!r}")


class FieldWorkspace:
    """Precomputed tables for repeated interaction-field evaluations.

    Holds the half-stencil force kernel (the opposite offset contributes
    with flipped sign), the padded gather maps for the configured boundary
    kinds, and the stacked cos/sin contraction matrices built from the
    pairwise velocity angles.
    """

    def __init__(self, grid, params: ModelParams, bc: tuple[str, str], stencil_radius: int = 2):
        self.grid = grid
        self.params = params
        self.bc = bc
        self.stencil_radius = int(stencil_radius)
        if self.stencil_radius < 1:
            raise ValueError("stencil_radius must be at least 1")

        vc = grid.velocity_centers()  # (nv, 2)
        alpha = angle_matrix(vc, vc, params.lam)
        cos_a = np.cos(alpha)
        sin_a = np.sin(alpha)
        # (B1 | B2) @ m1 -> S1 and @ m2 -> S2, contracting the source
        # velocity index: S1 = cos*B1 - sin*B2, S2 = sin*B1 + cos*B2.
        self.m1 = np.ascontiguousarray(np.vstack([cos_a.T, -sin_a.T]))
        self.m2 = np.ascontiguousarray(np.vstack([sin_a.T, cos_a.T]))
        self.vc = vc

        r = self.stencil_radius
        half = []
        for o1 in range(-r, r + 1):
            for o2 in range(-r, r + 1):
                if (o1, o2) <= (0, 0):
                    continue  # the opposite offset carries the pair
                delta1 = o1 * grid.dx1
                delta2 = o2 * grid.dx2
                d = float(np.hypot(delta1, delta2))
                if d <= EPS_DIST:
                    continue
                s = float(morse_deriv(d, params.morse)) / d
                half.append((o1, o2, s * (-delta1), s * (-delta2)))
        self.half_offsets = half
        self.imap1, self.mask1 = _pad_index_map(grid.nx, r, bc[0])
        self.imap2, self.mask2 = _pad_index_map(grid.ny, r, bc[1])

    def convolved(self, values: np.ndarray) -> np.ndarray:
        """Stencil-and-rotation quadrature against one group's density.

        Returns an (nsp, nv, 2) array: the sum of rotate(K, angle) * f
        over the stencil and all source velocity cells, without the cell
        volume factor.
        """
        g = self.grid
        r = self.stencil_radius
        nv = g.nv1 * g.nv2
        nsp = g.nx * g.ny
        f3 = values.reshape(g.nx, g.ny, nv)
        fp = f3[self.imap1][:, self.imap2]
        if self.mask1 is not None:
            fp *= self.mask1[:, None, None]
        if self.mask2 is not None:
            fp *= self.mask2[None, :, None]
        diffs = np.empty((len(self.half_offsets), g.nx, g.ny, nv))
        for idx, (o1, o2, _, _) in enumerate(self.half_offsets):
            vp = fp[r + o1 : r + o1 + g.nx, r + o2 : r + o2 + g.ny]
            vm = fp[r - o1 : r - o1 + g.nx, r - o2 : r - o2 + g.ny]
            np.subtract(vp, vm, out=diffs[idx])
        kern = np.array([[k1, k2] for _, _, k1, k2 in self.half_offsets])
        b = np.tensordot(kern, diffs.reshape(len(self.half_offsets), -1), axes=([0], [0]))
        stacked = np.concatenate(
            [b[0].reshape(nsp, nv), b[1].reshape(nsp, nv)], axis=1
        )
        out = np.empty((nsp, nv, 2))
        out[:, :, 0] = stacked @ self.m1
        out[:, :, 1] = stacked @ self.m2
        return out

    def _with_relaxation(self, conv: np.ndarray, group: str) -> np.ndarray:
        g = self.grid
        u = self.params.desired(0 if group == "red" else 1)
        out = conv.copy()
        out[:, :, 0] -= u[0] - self.vc[None, :, 0]
        out[:, :, 1] -= u[1] - self.vc[None, :, 1]
        return out.reshape(g.nx, g.ny, g.nv1, g.nv2, 2)

    def fields(self, f_r, f_b) -> tuple[np.ndarray, np.ndarray]:
        """S_red and S_blue in one pass; the quadrature is shared."""
        conv = self.convolved(f_r.values) + self.convolved(f_b.values)
        conv *= self.grid.cell_volume
        return self._with_relaxation(conv, "red"), self._with_relaxation(conv, "blue")

    def field(self, f_r, f_b, group: str) -> np.ndarray:
        """S_i for the requested group, shape (nx, ny, nv1, nv2, 2)."""
        conv = self.convolved(f_r.values) + self.convolved(f_b.values)
        conv *= self.grid.cell_volume
        return self._with_relaxation(conv, group)


def interaction_field(
    f_r,
    f_b,
    group: str,
    params: ModelParams,
    bc: tuple[str, str] = (PERIODIC, REFLECTIVE),
    stencil_radius: int = 2,
    workspace: FieldWorkspace | None = None,
) -> np.ndarray:
    """Drift field S_i(f) for one group (see module docstring).

    With both densities zero this reduces to -(u_i - v). Callers that step
    repeatedly should build a :class:`FieldWorkspace` once and reuse it.
    """
    if workspace is None:
        workspace = FieldWorkspace(f_r.grid, params, bc, stencil_radius)
    return workspace.field(f_r, f_b, group)
