import numpy as np
import pytest

from anisocrowd.meanfield.grid import (
    PhaseDensity,
    PhaseGrid,
    characteristic_table,
    init_uniform,
    marginals,
    mean_velocity,
    total_mass,
)

CHANNEL_GRID = PhaseGrid(50, 20, 10, 10, -45, 45, -15, 15, -0.6, 0.6, -0.6, 0.6)


def test_channel_uniform_value():
    # mass 0.5 over |box_x| = 2700 and |box_v| = 0.08
    f = init_uniform(CHANNEL_GRID, (-45, 45, -15, 15), (0.1, 0.3, -0.2, 0.2), 0.5)
    occupied = f.values[f.values > 0]
    assert occupied.min() == pytest.approx(occupied.max(), rel=1e-12)
    assert occupied[0] == pytest.approx(0.5 / 216.0, rel=0.35)
    assert total_mass(f) == pytest.approx(0.5, abs=1e-12)


def test_zero_mass_field():
    f = init_uniform(CHANNEL_GRID, (-45, 45, -15, 15), (0.1, 0.3, -0.2, 0.2), 0.0)
    assert np.all(f.values == 0.0)


def test_two_group_masses_sum_to_one():
    f_r = init_uniform(CHANNEL_GRID, (-45, 45, -15, 15), (0.1, 0.3, -0.2, 0.2), 0.5, "red")
    f_b = init_uniform(CHANNEL_GRID, (-45, 45, -15, 15), (-0.3, -0.1, -0.2, 0.2), 0.5, "blue")
    assert total_mass(f_r) + total_mass(f_b) == pytest.approx(1.0, abs=1e-12)


def test_empty_support_rejected():
    with pytest.raises(ValueError):
        init_uniform(CHANNEL_GRID, (-45, 45, -15, 15), (0.7, 0.8, 0.0, 0.0), 0.5)


def test_marginals_uniform_and_masses():
    f = init_uniform(CHANNEL_GRID, (-45, 45, -15, 15), (0.1, 0.3, -0.2, 0.2), 0.5)
    g = f.grid
    rho, phi, rho2 = marginals(f)
    assert rho.shape == (g.nx, g.ny)
    assert np.allclose(rho, rho[0, 0])  # uniform support covers all space
    assert rho.sum() * g.dx1 * g.dx2 == pytest.approx(0.5, abs=1e-12)
    assert phi.sum() * g.dv1 * g.dv2 == pytest.approx(0.5, abs=1e-12)
    assert rho2.sum() * g.dx2 == pytest.approx(0.5, abs=1e-12)


def test_marginals_single_cell():
    g = PhaseGrid(4, 3, 2, 2, 0, 4, 0, 3, -1, 1, -1, 1)
    vals = np.zeros(g.shape)
    vals[1, 2, 0, 1] = 7.0
    f = PhaseDensity(g, vals)
    rho, phi, rho2 = marginals(f)
    assert rho[1, 2] == pytest.approx(7.0 * g.dv1 * g.dv2)
    assert np.count_nonzero(rho) == 1
    assert phi[0, 1] == pytest.approx(7.0 * g.dx1 * g.dx2)
    assert np.count_nonzero(phi) == 1
    assert rho2[2] == pytest.approx(7.0 * g.dv1 * g.dv2 * g.dx1)


def test_characteristic_offsets_are_minus_v_tau():
    tau = 0.05
    table = characteristic_table(CHANNEL_GRID, tau)
    v1 = CHANNEL_GRID.v1_centers()
    v2 = CHANNEL_GRID.v2_centers()
    for i in range(CHANNEL_GRID.nv1):
        for j in range(CHANNEL_GRID.nv2):
            assert table[i, j, 0] == -v1[i] * tau
            assert table[i, j, 1] == -v2[j] * tau


def test_characteristics_match_rk2_trace():
    # Second-order Runge-Kutta on the constant advection field is exact,
    # so a midpoint trace of dx/dt = -v reproduces the table bitwise.
    tau = 0.05
    table = characteristic_table(CHANNEL_GRID, tau)
    v1 = CHANNEL_GRID.v1_centers()
    v2 = CHANNEL_GRID.v2_centers()
    for i in (0, 3, 9):
        for j in (0, 5):
            v = np.array([v1[i], v2[j]])
            rhs = lambda x: -v  # the sheet velocity does not vary in space
            x0 = np.zeros(2)
            x_mid = x0 + 0.5 * tau * rhs(x0)
            depart = x0 + tau * rhs(x_mid)
            offset = depart - x0
            assert offset[0] == table[i, j, 0] and offset[1] == table[i, j, 1]


def test_mean_velocity_of_symmetric_box():
    f = init_uniform(CHANNEL_GRID, (-45, 45, -15, 15), (-0.2, 0.2, -0.2, 0.2), 0.5)
    assert mean_velocity(f) == pytest.approx([0.0, 0.0], abs=1e-12)
