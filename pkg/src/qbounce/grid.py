"""Uniform altitude grids and sampled wave functions on them."""

from dataclasses import dataclass
import math

import numpy as np

from .airy import airy_zero
from .errors import CapacityError, ConfigurationError, DomainError

__all__ = [
    "DEFAULT_SAFETY",
    "MAX_POINTS",
    "X_MAX",
    "Grid",
    "WaveField",
    "next_pow2",
    "nyquist_spacing",
    "first_phase_grid",
    "extend_for_freefall",
    "freefall_extent",
]

# fraction of the Nyquist bound used for the default spacing
DEFAULT_SAFETY = 0.25
# Ai(x) is below 1e-10 of Ai(0) past this reduced altitude
X_MAX = 10.0
MAX_POINTS = 2**26


def next_pow2(n):
    n = int(n)
    return 1 if n <= 1 else 1 << (n - 1).bit_length()


@dataclass(frozen=True)
class Grid:
    """``z_j = z_min + j * delta_z`` for ``j < n_z``; ``n_z`` is a power of two."""

    z_min: float
    delta_z: float
    n_z: int

    def __post_init__(self):
        if self.delta_z <= 0 or not math.isfinite(self.delta_z):
            raise DomainError(f"delta_z must be positive, got {self.delta_z}")
        n = int(self.n_z)
        if n < 2 or n & (n - 1):
            raise DomainError(f"n_z must be a power of two >= 2, got {self.n_z}")
        object.__setattr__(self, "n_z", n)

    @property
    def z(self):
        return self.z_min + self.delta_z * np.arange(self.n_z)

    @property
    def z_max(self):
        """Last sample."""
        return self.z_min + (self.n_z - 1) * self.delta_z

    @property
    def z_end(self):
        """One step past the last sample (the periodic length boundary)."""
        return self.z_min + self.n_z * self.delta_z

    @property
    def length(self):
        return self.n_z * self.delta_z

    def index_of(self, z):
        """Index of the first sample at or above ``z``."""
        return int(math.ceil((z - self.z_min) / self.delta_z - 1e-9))


@dataclass(frozen=True, eq=False)
class WaveField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.grid.n_z,):
            raise ConfigurationError(
                f"field has {self.values.shape} samples, grid has {self.grid.n_z}"
            )

    @property
    def z(self):
        return self.grid.z

    def density(self):
        v = self.values
        return v.real**2 + v.imag**2

    def norm(self):
        """Squared norm ``sum |psi_j|^2 dz``."""
        return float(np.sum(self.density()) * self.grid.delta_z)

    def mean_z(self):
        p = self.density()
        return float(np.sum(self.z * p) / np.sum(p))

    def moments(self, hbar, m):
        """Position/velocity moments used to plan the free-fall grid.

        Returns ``(mean_z, mean_v, var_z, cov_zv, var_v)`` where the covariance
        is the symmetrised one. Momenta come from the FFT of the samples.
        """
        from scipy import fft

        psi = self.values
        dz = self.grid.delta_z
        z = self.z
        w = self.density()
        total = w.sum()
        mz = np.sum(z * w) / total
        zc = z - mz
        k = 2.0 * np.pi * fft.fftfreq(self.grid.n_z, dz)
        phik = fft.fft(psi)
        wk = phik.real**2 + phik.imag**2
        mk = np.sum(k * wk) / wk.sum()
        var_k = np.sum((k - mk) ** 2 * wk) / wk.sum()
        kpsi = fft.ifft(k * phik)
        # Re<psi| (z - <z>) (k - <k>) |psi>
        cov = np.sum((np.conj(psi) * zc * (kpsi - mk * psi)).real) / total
        var_z = np.sum(zc**2 * w) / total
        v = hbar / m
        return float(mz), float(v * mk), float(var_z), float(v * cov), float(v * v * var_k)


def nyquist_spacing(units, n_gqs, safety=DEFAULT_SAFETY):
    """``safety * pi * l_g / sqrt(lambda_{n_gqs})``."""
    if n_gqs < 1:
        raise DomainError(f"n_gqs must be >= 1, got {n_gqs}")
    if not 0 < safety <= 1:
        raise DomainError(f"safety must lie in (0, 1], got {safety}")
    return safety * math.pi * units.l_g / math.sqrt(airy_zero(n_gqs))


def first_phase_grid(units, n_gqs, delta_z, *, max_points=MAX_POINTS):
    """Symmetric grid ``[-z_max, z_max)`` with ``z_max = (lambda_n + X_MAX) l_g``."""
    bound = nyquist_spacing(units, n_gqs, 1.0)
    if delta_z > 0.5 * bound:
        raise ConfigurationError(
            f"delta_z = {delta_z:.3e} m exceeds half the Nyquist bound {bound:.3e} m"
        )
    z_max = (airy_zero(n_gqs) + X_MAX) * units.l_g
    n_z = next_pow2(math.ceil(2.0 * z_max / delta_z))
    if n_z > max_points:
        raise CapacityError(f"first-phase grid needs {n_z} points (cap {max_points})")
    return Grid(-z_max, delta_z, n_z)


def freefall_extent(moments, T, g, hbar, m):
    """Classical endpoint and spread of the packet after falling for ``T``.

    ``moments`` is the tuple returned by :meth:`WaveField.moments`. Returns
    ``(z_cl, sigma_final, fringe)`` where ``fringe`` is the de Broglie length
    ``2 pi hbar T / (m sigma_final)`` associated with the final spread.
    """
    mz, mv, var_z, cov, var_v = moments
    z_cl = mz + mv * T - 0.5 * g * T * T
    sigma = math.sqrt(max(var_z + 2.0 * T * cov + T * T * var_v, 0.0))
    fringe = 2.0 * math.pi * hbar * T / (m * sigma) if sigma > 0 else 0.0
    return z_cl, sigma, fringe


def extend_for_freefall(grid, params, psi_d=None, *, max_points=MAX_POINTS, hbar=None):
    """Lower ``z_min`` so the grid holds the packet after the free fall.

    The top of the grid is kept; the new bottom lies below the classical
    endpoint minus ``max(20 sigma_final, 50 fringe)``. Moments are taken from
    ``psi_d`` when given, otherwise from the initial Gaussian followed
    classically through the bounce.
    """
    from .physics import CONSTANTS, classical_moments_at

    hbar = CONSTANTS.hbar if hbar is None else hbar
    T = params.T
    if T == 0:
        return grid
    if psi_d is not None:
        mom = psi_d.moments(hbar, params.m)
    else:
        mom = classical_moments_at(params, params.t_mirror)
    z_cl, sigma, fringe = freefall_extent(mom, T, params.g, hbar, params.m)
    target = z_cl - max(20.0 * sigma, 50.0 * fringe)
    top = grid.z_end
    span = top - min(target, grid.z_min)
    n_z = next_pow2(math.ceil(span / grid.delta_z - 1e-9))
    n_z = max(n_z, grid.n_z)
    if n_z > max_points:
        raise CapacityError(
            f"free-fall grid needs {n_z} points (cap {max_points}); "
            f"span {span:.3g} m at delta_z = {grid.delta_z:.3g} m"
        )
    return Grid(top - n_z * grid.delta_z, grid.delta_z, n_z)
