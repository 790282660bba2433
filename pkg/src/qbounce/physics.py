"""Natural units, the initial Gaussian and its projection on bouncer states."""

from dataclasses import dataclass, field, replace
import math

import numpy as np
import scipy.constants as const

from .airy import airy, airy_ai, airy_zeros
from .errors import (
    AiryRangeError,
    ConfigurationError,
    ConvergenceError,
    DomainError,
)
from .grid import WaveField

__all__ = [
    "HYDROGEN_MASS_U",
    "NEUTRON_MASS",
    "PhysicalConstants",
    "CONSTANTS",
    "UnitSet",
    "WavePacketParams",
    "SpectralDecomposition",
    "gqs_units",
    "initial_wavepacket",
    "eigenfunction",
    "coefficients_cn",
    "truncation_order",
    "mean_energy",
    "classical_moments_at",
]

# 1H atomic mass in unified atomic mass units (AME2020)
HYDROGEN_MASS_U = 1.00782503223
NEUTRON_MASS = const.m_n


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = const.hbar
    amu: float = const.atomic_mass

    def __post_init__(self):
        if not (self.hbar > 0 and self.amu > 0):
            raise DomainError("physical constants must be positive")

    @property
    def hydrogen_mass(self):
        return HYDROGEN_MASS_U * self.amu


CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class UnitSet:
    """Length, energy and time scales of a particle above a mirror."""

    l_g: float
    e_g: float
    t_g: float


def gqs_units(m, g, hbar=CONSTANTS.hbar):
    if not (m > 0 and g > 0):
        raise DomainError(f"mass and gravity must be positive, got m={m}, g={g}")
    l_g = (hbar * hbar / (2.0 * g * m * m)) ** (1.0 / 3.0)
    e_g = m * g * l_g
    return UnitSet(l_g, e_g, hbar / e_g)


@dataclass(frozen=True)
class WavePacketParams:
    """Physical configuration of one bounce-and-fall experiment (SI units).

    ``v0 < 0`` means the packet initially moves towards the mirror. The
    packet leaves the mirror after ``d / V`` and falls freely for
    ``T = (D - d) / V``.
    """

    m: float = field(default_factory=lambda: CONSTANTS.hydrogen_mass)
    g: float = 9.81
    z0: float = 1e-3
    v0: float = -0.0915
    sigma_z: float = 0.4e-6
    V: float = 1.0
    d: float = 0.03
    D: float = 0.3

    def __post_init__(self):
        for name in ("m", "g", "sigma_z", "V", "z0"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be positive, got {value}")
        if not math.isfinite(self.v0):
            raise DomainError(f"v0 must be finite, got {self.v0}")
        if not (0 < self.d < self.D):
            raise DomainError(f"need 0 < d < D, got d={self.d}, D={self.D}")

    @property
    def sigma_v(self):
        return CONSTANTS.hbar / (2.0 * self.m * self.sigma_z)

    @property
    def t_mirror(self):
        return self.d / self.V

    @property
    def T(self):
        return (self.D - self.d) / self.V

    @property
    def units(self):
        return gqs_units(self.m, self.g)

    def with_g(self, g):
        return replace(self, g=g)


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Bouncer eigenvalues and the projections ``c_n`` of the initial state."""

    lam: np.ndarray
    coeff: np.ndarray
    ai_prime: np.ndarray
    units: UnitSet
    params: WavePacketParams
    tolerance: float = 1e-4

    @property
    def n_gqs(self):
        return len(self.lam)

    @property
    def energy(self):
        return self.units.e_g * self.lam

    @property
    def weights(self):
        c = self.coeff
        return c.real**2 + c.imag**2

    @property
    def norm_defect(self):
        """``sum |c_n|^2 - 1``."""
        return float(np.sum(self.weights) - 1.0)

    def mean_energy(self):
        return float(np.sum(self.weights * self.energy))


def eigenfunction(lam, ai_prime, z, units):
    """Normalised bouncer state ``Ai(z/l - lam) / (sqrt(l) Ai'(-lam))`` for z >= 0."""
    z = np.asarray(z, dtype=float)
    x = z / units.l_g - lam
    out = np.asarray(airy_ai(x), dtype=float) / (math.sqrt(units.l_g) * ai_prime)
    return np.where(z >= 0, out, 0.0)


def initial_wavepacket(params, grid, hbar=CONSTANTS.hbar):
    lo = params.z0 - 8.0 * params.sigma_z
    hi = params.z0 + 8.0 * params.sigma_z
    if grid.z_min > lo or grid.z_max < hi:
        raise ConfigurationError(
            f"grid [{grid.z_min:.4g}, {grid.z_max:.4g}] m does not hold "
            f"[{lo:.4g}, {hi:.4g}] m"
        )
    z = grid.z
    s = params.sigma_z
    u = z - params.z0
    amp = (2.0 * math.pi * s * s) ** -0.25 * np.exp(-u * u / (4.0 * s * s))
    psi = amp * np.exp(1j * (params.m * params.v0 / hbar) * u)
    return WaveField(grid, psi)


def _cn(params, units, lam, aip, hbar, offset=0):
    """Closed-form projection of the Gaussian on each bouncer state.

    With ``S = sigma/l``, ``u0 = z0/l`` and ``w = v0 t_g / l``,
    ``c_n = (8 pi)^(1/4) sqrt(S) / Ai'(-lam)
            * Ai(u0 - lam + i w S^2 + S^4)
            * exp(S^2 (u0 - lam + i w S^2 - w^2/4 + 2 S^4 / 3))``.
    """
    S = params.sigma_z / units.l_g
    u0 = params.z0 / units.l_g
    w = params.v0 * units.t_g / units.l_g
    S2 = S * S
    arg = (u0 - lam + S2 * S2) + 1j * (w * S2)
    expo = S2 * (u0 - lam - w * w / 4.0 + 2.0 * S2 * S2 / 3.0) + 1j * (w * S2 * S2)
    try:
        ai = airy_ai(arg)
    except AiryRangeError as exc:
        n = None if exc.index is None else int(exc.index) + 1 + offset
        raise AiryRangeError(
            f"Ai overflow in c_n for n = {n} (argument {exc.argument})",
            argument=exc.argument,
            index=n,
        ) from None
    big = np.real(expo) > 700.0
    if np.any(big):
        n = int(np.argmax(big)) + 1 + offset
        raise AiryRangeError(f"exponential overflow in c_n for n = {n}", index=n)
    pref = (8.0 * math.pi) ** 0.25 * math.sqrt(S)
    return pref * ai * np.exp(expo) / aip


def coefficients_cn(params, n_max, *, tolerance=1e-4, hbar=CONSTANTS.hbar):
    """Spectral decomposition of the initial Gaussian over ``n_max`` states.

    The closed form assumes the Gaussian has negligible weight below the
    mirror, which holds when ``z0`` is many ``sigma_z`` above it.
    """
    if int(n_max) < 1:
        raise DomainError(f"n_max must be >= 1, got {n_max}")
    if params.z0 < 6.0 * params.sigma_z:
        raise DomainError("z0 must exceed 6 sigma_z for the closed-form projection")
    units = gqs_units(params.m, params.g, hbar)
    lam = airy_zeros(int(n_max))
    aip = airy(-lam)[1]
    c = _cn(params, units, lam, aip, hbar)
    return SpectralDecomposition(lam, c, aip, units, params, tolerance)


def truncation_order(params, tol, *, granularity=100, cap=1_000_000, hbar=CONSTANTS.hbar):
    """Smallest multiple of ``granularity`` whose partial norm is within ``tol`` of 1."""
    if not 0 < tol < 1:
        raise DomainError(f"tol must lie in (0, 1), got {tol}")
    units = gqs_units(params.m, params.g, hbar)
    total = 0.0
    n = 0
    chunk = max(granularity, 20 * granularity)
    while n < cap:
        count = min(chunk, cap - n)
        lam = airy_zeros(n + count, start=n + 1)
        aip = airy(-lam)[1]
        w = np.abs(_cn(params, units, lam, aip, hbar, offset=n)) ** 2
        partial = total + np.cumsum(w)
        ok = np.nonzero(np.abs(partial - 1.0) < tol)[0]
        # the partial sums only grow, so the first hit is the answer
        if len(ok):
            k = n + int(ok[0]) + 1
            return int(math.ceil(k / granularity) * granularity)
        total = float(partial[-1])
        n += count
    raise ConvergenceError(
        f"partial norm {total:.6g} still off by more than {tol} after {cap} states"
    )


def mean_energy(params, hbar=CONSTANTS.hbar):
    """Energy of the initial Gaussian above a perfect mirror at z = 0."""
    m = params.m
    return m * params.g * params.z0 + 0.5 * m * params.v0**2 + hbar**2 / (
        8.0 * m * params.sigma_z**2
    )


def classical_moments_at(params, t, hbar=CONSTANTS.hbar):
    """Phase-space moments of the initial Gaussian after ``t`` above the mirror.

    Each phase-space point follows the bouncing ballistic trajectory; the
    moments of the resulting cloud are evaluated by Gauss-Hermite quadrature.
    Returns the same tuple layout as :meth:`WaveField.moments`.
    """
    x, wts = np.polynomial.hermite_e.hermegauss(40)
    wts = wts / wts.sum()
    zz = params.z0 + params.sigma_z * x[:, None]
    vv = params.v0 + params.sigma_v * x[None, :]
    z, v = bounce_trajectory(zz, vv, t, params.g)
    w = wts[:, None] * wts[None, :]
    mz = np.sum(w * z)
    mv = np.sum(w * v)
    var_z = np.sum(w * (z - mz) ** 2)
    cov = np.sum(w * (z - mz) * (v - mv))
    var_v = np.sum(w * (v - mv) ** 2)
    return float(mz), float(mv), float(var_z), float(cov), float(var_v)


def bounce_trajectory(z, v, t, g):
    """Classical position and velocity after ``t`` above a perfect mirror.

    Vectorised over ``z`` and ``v`` (broadcast); ``z > 0`` is assumed.
    """
    z = np.asarray(z, dtype=float)
    v = np.asarray(v, dtype=float)
    z, v = np.broadcast_arrays(z, v)
    z = z.copy()
    v = v.copy()
    remaining = np.full(z.shape, float(t))
    for _ in range(10_000):
        # time to reach the mirror from (z, v)
        hit = (v + np.sqrt(v * v + 2.0 * g * z)) / g
        done = hit >= remaining
        if np.all(done):
            break
        bounce = ~done
        v_hit = v[bounce] - g * hit[bounce]
        remaining[bounce] -= hit[bounce]
        z[bounce] = 0.0
        v[bounce] = -v_hit
    r = remaining
    return z + v * r - 0.5 * g * r * r, v - g * r
