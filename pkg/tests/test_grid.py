import math
from types import SimpleNamespace

import numpy as np
import pytest

from qbounce.airy import airy_ai, airy_zero
from qbounce.errors import CapacityError, ConfigurationError, DomainError
from qbounce.grid import (
    DEFAULT_SAFETY,
    X_MAX,
    Grid,
    WaveField,
    extend_for_freefall,
    first_phase_grid,
    freefall_extent,
    next_pow2,
    nyquist_spacing,
)
from qbounce.physics import CONSTANTS, classical_moments_at


@pytest.fixture(scope="module")
def units(nominal):
    return nominal.units


def test_next_pow2():
    assert [next_pow2(n) for n in (0, 1, 2, 3, 4, 5, 1023, 1024, 1025)] == [1, 1, 2, 4, 4, 8, 1024, 1024, 2048]


@pytest.mark.parametrize("n", [0, 1, 3, 12, 1000])
def test_grid_requires_power_of_two(n):
    with pytest.raises(DomainError):
        Grid(0.0, 1.0, n)


def test_grid_geometry():
    g = Grid(-1.0, 0.25, 8)
    np.testing.assert_allclose(g.z, [-1, -0.75, -0.5, -0.25, 0, 0.25, 0.5, 0.75])
    assert g.z_max == 0.75
    assert g.z_end == 1.0
    assert g.length == 2.0
    assert g.index_of(0.0) == 4
    assert g.index_of(0.1) == 5
    with pytest.raises(DomainError):
        Grid(0.0, 0.0, 8)


def test_field_shape_checked():
    with pytest.raises(ConfigurationError):
        WaveField(Grid(0.0, 1.0, 8), np.zeros(7, complex))


def test_nyquist_at_nominal_truncation(units):
    bound = nyquist_spacing(units, 12000, 1.0)
    assert bound == pytest.approx(math.pi * units.l_g / math.sqrt(airy_zero(12000)), rel=1e-15)
    assert bound == pytest.approx(4.806e-7, rel=1e-3)
    dz = nyquist_spacing(units, 12000)
    assert dz == pytest.approx(DEFAULT_SAFETY * bound, rel=1e-15)
    # a user spacing of 98 nm sits at about a fifth of the bound
    assert 0.19 < 9.8e-8 / bound < 0.21


def test_nyquist_validation(units):
    with pytest.raises(DomainError):
        nyquist_spacing(units, 0)
    with pytest.raises(DomainError):
        nyquist_spacing(units, 10, safety=1.5)


def test_first_phase_grid_nominal(units):
    dz = nyquist_spacing(units, 12000)
    g = first_phase_grid(units, 12000, dz)
    assert g.n_z == 2**18
    z_top = (airy_zero(12000) + X_MAX) * units.l_g
    assert g.z_min == pytest.approx(-z_top, rel=1e-15)
    assert g.z_end >= z_top
    assert g.z_min == pytest.approx(-8.708e-3, rel=1e-3)
    assert g.index_of(0.0) < g.n_z // 2 + 2


def test_top_of_grid_is_deep_in_the_tail(units):
    # every state has decayed below 1e-10 of its peak scale at the top
    assert abs(airy_ai(X_MAX)) < 1e-9 * airy_ai(0.0)


def test_first_phase_grid_rejects_coarse_spacing(units):
    bound = nyquist_spacing(units, 12000, 1.0)
    with pytest.raises(ConfigurationError):
        first_phase_grid(units, 12000, 0.6 * bound)
    first_phase_grid(units, 12000, 0.5 * bound)


def test_first_phase_grid_capacity(units):
    dz = nyquist_spacing(units, 12000)
    with pytest.raises(CapacityError):
        first_phase_grid(units, 12000, dz, max_points=2**17)
    assert issubclass(CapacityError, MemoryError)


def test_freefall_extension_nominal(nominal, units):
    dz = nyquist_spacing(units, 12000)
    g = first_phase_grid(units, 12000, dz)
    ext = extend_for_freefall(g, nominal)
    assert ext.delta_z == g.delta_z
    assert ext.z_end == pytest.approx(g.z_end, abs=1e-15)
    assert ext.n_z & (ext.n_z - 1) == 0
    z_cl, sigma, fringe = freefall_extent(
        classical_moments_at(nominal, nominal.t_mirror), nominal.T, nominal.g, CONSTANTS.hbar, nominal.m
    )
    assert ext.z_min <= z_cl - 20 * sigma
    assert ext.z_min < -0.4
    assert ext.n_z == 2**23


def test_freefall_extension_noop_without_fall(units):
    # d < D is enforced on the parameters, so a zero fall is a stand-in object
    p = SimpleNamespace(T=0.0)
    g = first_phase_grid(units, 2000, nyquist_spacing(units, 2000))
    assert extend_for_freefall(g, p) is g


def test_freefall_extension_capacity(nominal, units):
    g = first_phase_grid(units, 12000, nyquist_spacing(units, 12000))
    with pytest.raises(CapacityError):
        extend_for_freefall(g, nominal, max_points=2**20)


def test_freefall_extent_ballistic():
    # free Gaussian: sigma(T)^2 = s^2 + (hbar T / 2 m s)^2
    m, s, T = 1.0e-27, 1e-6, 0.1
    hbar = CONSTANTS.hbar
    sv = hbar / (2 * m * s)
    z_cl, sigma, fringe = freefall_extent((0.0, 1.0, s * s, 0.0, sv * sv), T, 9.81, hbar, m)
    assert z_cl == pytest.approx(T - 0.5 * 9.81 * T * T)
    assert sigma == pytest.approx(math.hypot(s, sv * T))
    assert fringe == pytest.approx(2 * math.pi * hbar * T / (m * sigma))


def test_field_moments_gaussian():
    m, hbar = 1.6735e-27, CONSTANTS.hbar
    s, z0, v0 = 1e-6, 2e-5, 0.05
    n = 4096
    g = Grid(z0 - n // 2 * s / 40, s / 40, n)
    z = g.z
    psi = (2 * np.pi * s * s) ** -0.25 * np.exp(-((z - z0) ** 2) / (4 * s * s) + 1j * m * v0 * (z - z0) / hbar)
    mz, mv, vz, cov, vv = WaveField(g, psi).moments(hbar, m)
    assert mz == pytest.approx(z0, rel=1e-12)
    assert mv == pytest.approx(v0, rel=1e-10)
    assert vz == pytest.approx(s * s, rel=1e-10)
    assert abs(cov) < 1e-10 * s * hbar / (2 * m * s)
    assert vv == pytest.approx((hbar / (2 * m * s)) ** 2, rel=1e-10)
