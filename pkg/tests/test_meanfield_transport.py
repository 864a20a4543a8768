import numpy as np
import pytest

from anisocrowd.meanfield.grid import PhaseDensity, PhaseGrid, characteristic_table, total_mass
from anisocrowd.meanfield.transport import semi_lagrangian_transport


def density(grid, seed=0, smooth=False):
    rng = np.random.default_rng(seed)
    vals = rng.uniform(0.0, 1.0, size=grid.shape)
    if smooth:
        x = grid.x1_centers()
        y = grid.x2_centers()
        bump = np.exp(-0.05 * (x[:, None] - x.mean()) ** 2) * np.exp(
            -0.05 * (y[None, :] - y.mean()) ** 2
        )
        vals = bump[:, :, None, None] * np.ones(grid.shape)
    return PhaseDensity(grid, vals)


def test_zero_velocity_sheet_bitwise_unchanged():
    g = PhaseGrid(6, 5, 3, 3, 0, 6, 0, 5, -1, 1, -1, 1)  # middle sheets at v = 0
    f = density(g, seed=1)
    table = characteristic_table(g, 0.3)
    out = semi_lagrangian_transport(f, table, 0.3, ("periodic", "periodic"))
    assert np.array_equal(out.values[:, :, 1, 1], f.values[:, :, 1, 1])


def test_constant_field_unchanged():
    g = PhaseGrid(8, 6, 2, 2, 0, 8, 0, 6, -1, 1, -1, 1)
    f = PhaseDensity(g, np.full(g.shape, 0.7))
    table = characteristic_table(g, 0.37)
    out = semi_lagrangian_transport(f, table, 0.37, ("periodic", "periodic"))
    assert np.abs(out.values - 0.7).max() <= 1e-12


def test_exact_one_cell_shift_periodic():
    # dx1 = 1, v1 = 1 exactly, tau = 1: departure points are grid points.
    g = PhaseGrid(8, 4, 1, 1, 0, 8, 0, 4, 0.5, 1.5, -1, 1)
    f = density(g, seed=2)
    table = characteristic_table(g, 1.0)
    assert table[0, 0, 0] == -1.0 and table[0, 0, 1] == 0.0
    out = semi_lagrangian_transport(f, table, 1.0, ("periodic", "periodic"))
    expect = np.roll(f.values, 1, axis=0)
    assert np.abs(out.values - expect).max() <= 1e-12


def test_mass_conserved_periodic():
    g = PhaseGrid(16, 12, 4, 4, 0, 16, 0, 12, -1, 1, -1, 1)
    f = density(g, seed=3)
    m0 = total_mass(f)
    table = characteristic_table(g, 0.61)
    out = f
    for _ in range(20):
        out = semi_lagrangian_transport(out, table, 0.61, ("periodic", "periodic"))
    assert total_mass(out) == pytest.approx(m0, rel=1e-12)


def test_mass_conserved_reflective_channel():
    g = PhaseGrid(10, 12, 4, 4, -45, 45, -15, 15, -0.6, 0.6, -0.6, 0.6)
    f = density(g, seed=4)
    m0 = total_mass(f)
    table = characteristic_table(g, 0.8)
    out = f
    for _ in range(50):
        out = semi_lagrangian_transport(out, table, 0.8, ("periodic", "reflective"))
    assert total_mass(out) == pytest.approx(m0, rel=1e-12)
    assert out.values.min() >= -1e-12


def test_no_new_extrema_per_sheet():
    g = PhaseGrid(14, 10, 3, 4, 0, 14, 0, 10, -1, 1, -1, 1)
    f = density(g, seed=5)
    table = characteristic_table(g, 0.45)
    out = semi_lagrangian_transport(f, table, 0.45, ("periodic", "periodic"))
    assert out.values.max() <= f.values.max() + 1e-12
    assert out.values.min() >= f.values.min() - 1e-12


def test_positivity_preserved():
    g = PhaseGrid(12, 10, 4, 4, 0, 12, 0, 10, -1, 1, -1, 1)
    rng = np.random.default_rng(6)
    vals = np.where(rng.uniform(size=g.shape) > 0.7, rng.uniform(size=g.shape), 0.0)
    f = PhaseDensity(g, vals)
    table = characteristic_table(g, 0.53)
    out = f
    for _ in range(30):
        out = semi_lagrangian_transport(out, table, 0.53, ("periodic", "periodic"))
    assert out.values.min() >= -1e-12


def test_reflective_wall_specular_bounce():
    # A packet on the upward-moving sheet adjacent to the top wall must
    # reappear on the downward-moving sheet, conserving the pair's mass.
    g = PhaseGrid(4, 10, 1, 2, 0, 4, 0, 10, -1, 1, -1, 1)
    vals = np.zeros(g.shape)
    vals[:, -1, 0, 1] = 1.0  # top row, v2 = +0.5 sheet
    f = PhaseDensity(g, vals)
    tau = 4.0  # shift = v2 * tau / dx2 = 2 cells
    table = characteristic_table(g, tau)
    out = semi_lagrangian_transport(f, table, tau, ("periodic", "reflective"))
    m0 = total_mass(f)
    assert total_mass(out) == pytest.approx(m0, rel=1e-12)
    up = out.values[:, :, 0, 1]
    down = out.values[:, :, 0, 0]
    assert down.sum() > 0.0  # part of the packet bounced
    assert np.abs(out.values.sum() - f.values.sum()) <= 1e-12 * f.values.sum()
    # the bounced mass sits mirrored at the top rows
    assert down[:, -2:].sum() == pytest.approx(down.sum(), rel=1e-12)


def test_mirror_symmetry_of_reflective_transport():
    # Mirrored data on mirrored sheets stays mirrored.
    g = PhaseGrid(6, 8, 2, 4, 0, 6, 0, 8, -1, 1, -1, 1)
    rng = np.random.default_rng(7)
    vals = rng.uniform(size=g.shape)
    mirrored = vals[:, ::-1, :, ::-1].copy()
    tau = 0.9
    table = characteristic_table(g, tau)
    out1 = semi_lagrangian_transport(
        PhaseDensity(g, vals), table, tau, ("periodic", "reflective")
    )
    out2 = semi_lagrangian_transport(
        PhaseDensity(g, mirrored), table, tau, ("periodic", "reflective")
    )
    assert np.abs(out1.values - out2.values[:, ::-1, :, ::-1]).max() <= 1e-12


def test_compiled_remap_matches_numpy_reference():
    from anisocrowd.meanfield.transport import (
        _pad_periodic,
        _remap_ext,
        _remap_ext_reference,
    )

    rng = np.random.default_rng(9)
    for sigma in (0.3, -0.45, 1.7, -2.2, 0.001, 0.999):
        f = rng.uniform(size=(12, 5, 3))
        pw = int(np.floor(abs(sigma))) + 2
        ext = _pad_periodic(f, pw)
        fast = _remap_ext(ext, sigma, 12, pw)
        ref = _remap_ext_reference(ext, sigma, 12, pw)
        assert np.abs(fast - ref).max() <= 1e-15


def test_displacement_beyond_domain_aborts():
    g = PhaseGrid(5, 4, 1, 1, 0, 5, 0, 4, 9.5, 10.5, -1, 1)
    f = density(g, seed=8)
    table = characteristic_table(g, 1.0)  # sigma = 10 > nx
    with pytest.raises(ValueError):
        semi_lagrangian_transport(f, table, 1.0, ("periodic", "periodic"))
