import math

import mpmath as mp
import numpy as np
import pytest
import scipy.constants as const
from scipy import fft, integrate

from qbounce.airy import airy_ai, airy_zeros
from qbounce.bounce import snapshot_on_mirror
from qbounce.errors import AiryRangeError, ConfigurationError, ConvergenceError, DomainError
from qbounce.grid import Grid
from qbounce.physics import (
    CONSTANTS,
    NEUTRON_MASS,
    PhysicalConstants,
    WavePacketParams,
    bounce_trajectory,
    classical_moments_at,
    coefficients_cn,
    eigenfunction,
    gqs_units,
    initial_wavepacket,
    mean_energy,
    truncation_order,
)

HBAR = CONSTANTS.hbar


def test_gravity_length_scale(nominal):
    u = gqs_units(nominal.m, nominal.g)
    assert 5.5e-6 < u.l_g < 6.5e-6
    assert u.l_g == pytest.approx(5.8712e-6, rel=1e-4)


@pytest.mark.parametrize("m,g", [(1.6735e-27, 9.81), (NEUTRON_MASS, 9.80665), (1e-25, 3.7)])
def test_unit_identities(m, g):
    u = gqs_units(m, g)
    assert u.e_g == m * g * u.l_g
    assert u.t_g == HBAR / u.e_g
    assert u.l_g ** 3 == pytest.approx(HBAR**2 / (2 * g * m * m), rel=1e-14)


def test_neutron_ground_state_energy():
    u = gqs_units(NEUTRON_MASS, 9.81)
    e1 = u.e_g * airy_zeros(1)[0]
    mp.mp.dps = 30
    hb, m, g = mp.mpf(const.hbar), mp.mpf(const.m_n), mp.mpf("9.81")
    l = mp.cbrt(hb**2 / (2 * g * m * m))
    ref = m * g * l * (-mp.airyaizero(1))
    assert e1 == pytest.approx(float(ref), rel=1e-13)
    assert e1 / const.e * 1e12 == pytest.approx(1.4, abs=0.05)


@pytest.mark.parametrize("m,g", [(0.0, 9.81), (-1.0, 9.81), (1e-27, 0.0), (1e-27, -2.0)])
def test_units_reject_non_positive(m, g):
    with pytest.raises(DomainError):
        gqs_units(m, g)


def test_constants_positive():
    with pytest.raises(DomainError):
        PhysicalConstants(hbar=-1.0)
    assert CONSTANTS.hydrogen_mass == pytest.approx(1.6735575e-27, rel=1e-7)


@pytest.mark.parametrize(
    "kw",
    [dict(m=0.0), dict(g=-1.0), dict(sigma_z=0.0), dict(V=0.0), dict(z0=-1e-3), dict(d=0.0), dict(d=0.4), dict(v0=math.nan)],
)
def test_params_validation(kw):
    with pytest.raises(DomainError):
        WavePacketParams(**kw)


def test_params_derived(nominal):
    assert nominal.sigma_v == pytest.approx(HBAR / (2 * nominal.m * 0.4e-6))
    assert nominal.sigma_v == pytest.approx(0.0788, rel=1e-3)
    assert nominal.T == pytest.approx(0.27)
    assert nominal.t_mirror == pytest.approx(0.03)


def _local_grid(p, n=4096, per_sigma=40):
    dz = p.sigma_z / per_sigma
    return Grid(p.z0 - n // 2 * dz, dz, n)


def test_initial_moments(nominal):
    grid = _local_grid(nominal)
    psi = initial_wavepacket(nominal, grid)
    z = grid.z
    rho = psi.density()
    dz = grid.delta_z
    assert psi.norm() == pytest.approx(1.0, abs=1e-12)
    mean = np.sum(z * rho) * dz
    assert mean == pytest.approx(nominal.z0, rel=1e-10)
    var = np.sum((z - mean) ** 2 * rho) * dz
    assert var == pytest.approx(nominal.sigma_z**2, rel=1e-10)
    k = 2 * np.pi * fft.fftfreq(grid.n_z, dz)
    phik = np.abs(fft.fft(psi.values)) ** 2
    phik /= phik.sum()
    p_mean = HBAR * np.sum(k * phik)
    assert p_mean == pytest.approx(nominal.m * nominal.v0, rel=1e-10)
    sig_p = HBAR * math.sqrt(np.sum((k - p_mean / HBAR) ** 2 * phik))
    assert sig_p * nominal.sigma_z == pytest.approx(HBAR / 2, rel=1e-10)


def test_initial_real_when_at_rest(nominal):
    p = WavePacketParams(v0=0.0)
    grid = _local_grid(p)
    psi = initial_wavepacket(p, grid).values
    assert np.all(psi.imag == 0)
    # z_j - z0 = (j - n/2) dz up to rounding of z_j near 1 mm
    np.testing.assert_allclose(psi[1:2048], psi[2049:][::-1], rtol=1e-9, atol=0)


def test_initial_grid_too_narrow(nominal):
    grid = Grid(nominal.z0 - 4 * nominal.sigma_z, nominal.sigma_z / 10, 128)
    with pytest.raises(ConfigurationError):
        initial_wavepacket(nominal, grid)


def test_norm_sum_at_nominal_truncation(nominal):
    dec = coefficients_cn(nominal, 12000)
    assert abs(dec.norm_defect) < 1e-4
    assert dec.n_gqs == 12000
    np.testing.assert_allclose(dec.energy, dec.units.e_g * dec.lam)
    assert np.all(np.diff(dec.lam) > 0)


def _overlap(p, n, sign=1.0):
    """Quadrature of the overlap between state n and the initial packet."""
    u = p.units
    lam = airy_zeros(n)[-1]
    from qbounce.airy import airy_ai_prime

    aip = airy_ai_prime(-lam)
    s, z0 = p.sigma_z, p.z0
    k = sign * p.m * p.v0 / HBAR

    def chi(z):
        return airy_ai(z / u.l_g - lam) / (math.sqrt(u.l_g) * aip)

    def psi(z):
        return (2 * math.pi * s * s) ** -0.25 * math.exp(-((z - z0) ** 2) / (4 * s * s))

    lo, hi = max(0.0, z0 - 12 * s), z0 + 12 * s
    opts = dict(epsabs=0, epsrel=1e-12, limit=400)
    re, _ = integrate.quad(lambda z: chi(z) * psi(z) * math.cos(k * (z - z0)), lo, hi, **opts)
    im, _ = integrate.quad(lambda z: chi(z) * psi(z) * math.sin(k * (z - z0)), lo, hi, **opts)
    return complex(re, im)


@pytest.fixture(scope="module")
def moving_small():
    return WavePacketParams(z0=20e-6, v0=-0.02, sigma_z=2e-6, d=1e-3, D=2e-3)


def test_c5_matches_quadrature(moving_small):
    dec = coefficients_cn(moving_small, 5)
    ref = _overlap(moving_small, 5)
    assert abs(ref) > 1e-3
    assert abs(dec.coeff[4] - ref) <= 1e-6 * abs(ref)


def test_opposite_phase_convention_disagrees(moving_small):
    # the closed form corresponds to exp(+i m v0 (z - z0) / hbar)
    dec = coefficients_cn(moving_small, 5)
    wrong = _overlap(moving_small, 5, sign=-1.0)
    assert abs(dec.coeff[4] - wrong) > 1e-2 * abs(wrong)


def test_small_instance_all_states(moving_small):
    dec = coefficients_cn(moving_small, 40)
    for n in (1, 3, 8, 15, 25, 40):
        ref = _overlap(moving_small, n)
        if abs(ref) > 1e-6:
            assert abs(dec.coeff[n - 1] - ref) <= 1e-6 * abs(ref), n


def test_weight_peak_and_mean_energy(nominal):
    dec = coefficients_cn(nominal, 20000)
    u = dec.units
    lam_peak = dec.lam[np.argmax(dec.weights)]
    # the weight per state diverges like 1/sqrt(lam - z0/l) above the
    # potential energy m g z0 and is cut off by the position spread
    u0 = nominal.z0 / u.l_g
    assert 0 < lam_peak - u0 < 3
    assert dec.mean_energy() == pytest.approx(mean_energy(nominal), rel=2e-5)


def test_overflow_names_index():
    with pytest.raises(AiryRangeError) as info:
        coefficients_cn(WavePacketParams(v0=-1000.0, sigma_z=1e-6), 50)
    assert info.value.index == 1
    assert "n = 1" in str(info.value)


def test_cn_preconditions(nominal):
    with pytest.raises(DomainError):
        coefficients_cn(nominal, 0)
    with pytest.raises(DomainError):
        coefficients_cn(WavePacketParams(z0=1e-6, sigma_z=0.4e-6), 10)


def test_truncation_nominal(nominal):
    n = truncation_order(nominal, 1e-4)
    assert abs(n - 12000) <= 500
    assert n % 100 == 0
    dec = coefficients_cn(nominal, n)
    assert abs(dec.norm_defect) < 1e-4


def test_truncation_monotone(nominal):
    tight = truncation_order(nominal, 1e-4)
    loose = truncation_order(nominal, 1e-2)
    assert loose <= tight
    lower = truncation_order(WavePacketParams(z0=0.5e-3), 1e-4)
    assert lower < tight


def test_truncation_cap_and_domain(nominal):
    with pytest.raises(ConvergenceError):
        truncation_order(nominal, 1e-4, cap=1000)
    for tol in (0.0, 1.0, -0.1):
        with pytest.raises(DomainError):
            truncation_order(nominal, tol)


def test_eigenfunction_orthonormal(nominal):
    u = nominal.units
    lam = airy_zeros(50)
    from qbounce.airy import airy_ai_prime

    aip = airy_ai_prime(-lam)
    h = u.l_g / 200
    z = np.arange(0, (lam[-1] + 12) * u.l_g, h)
    chi = np.array([eigenfunction(l, a, z, u) for l, a in zip(lam, aip)])
    w = np.full(len(z), h)
    w[0] = w[-1] = h / 2
    gram = (chi * w) @ chi.T
    assert np.max(np.abs(gram - np.eye(50))) < 1e-8


def test_eigenfunction_zero_below_mirror(nominal):
    u = nominal.units
    assert np.all(eigenfunction(2.338, 0.7, np.array([-1e-6, -1e-9]), u) == 0)


def test_reconstruction_at_nominal_truncation(nominal, nominal_model):
    dec = nominal_model.decomposition()
    grid = nominal_model.grid_mirror
    rec = snapshot_on_mirror(dec, 0.0, grid).values
    ref = initial_wavepacket(nominal, grid).values
    err2 = np.sum(np.abs(rec - ref) ** 2) / np.sum(np.abs(ref) ** 2)
    # the states left out carry -norm_defect of the probability, which
    # bounds the squared error from below
    assert err2 < 1e-4
    assert err2 == pytest.approx(-dec.norm_defect, rel=0.05)


def test_bounce_trajectory_reflects():
    z, v = bounce_trajectory(1e-3, 0.0, math.sqrt(2e-3 / 9.81), 9.81)
    assert z == pytest.approx(0.0, abs=1e-12)
    z, v = bounce_trajectory(1e-3, 0.0, 2 * math.sqrt(2e-3 / 9.81), 9.81)
    assert z == pytest.approx(1e-3, rel=1e-9)
    assert v == pytest.approx(0.0, abs=1e-9)


def test_classical_moments_before_contact(nominal):
    # short enough that even the outer quadrature nodes stay above the mirror
    t = 5e-4
    mz, mv, vz, cov, vv = classical_moments_at(nominal, t)
    assert mz == pytest.approx(nominal.z0 + nominal.v0 * t - 0.5 * nominal.g * t * t, rel=1e-10)
    assert mv == pytest.approx(nominal.v0 - nominal.g * t, rel=1e-10)
    assert vv == pytest.approx(nominal.sigma_v**2, rel=1e-10)
    assert vz == pytest.approx(nominal.sigma_z**2 + (nominal.sigma_v * t) ** 2, rel=1e-10)
    assert cov == pytest.approx(nominal.sigma_v**2 * t, rel=1e-10)
