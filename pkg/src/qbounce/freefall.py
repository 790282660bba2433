"""Free fall in a uniform field, done exactly in the momentum representation.

In momentum space the fall is a shift of every momentum by ``-m g t`` plus a
quadratic phase. On the FFT grid this is applied as: transform, multiply by
``exp(-i T/hbar [(p - m g T)^2/2m + g (p - m g T) T/2 + m g^2 T^2/6])``,
transform back, multiply by ``exp(-i m g T z / hbar)``.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy import fft

from .errors import DomainError, LeakageError
from .grid import WaveField
from .physics import CONSTANTS

__all__ = [
    "LEAKAGE_THRESHOLD",
    "MomentumGrid",
    "momentum_grid",
    "freefall_propagate",
    "freefall_literal",
    "snapshot_freefall",
    "edge_mass",
]

LEAKAGE_THRESHOLD = 1e-6
EDGE_FRACTION = 0.01
_BLOCK = 1 << 20


@dataclass(frozen=True, eq=False)
class MomentumGrid:
    values: np.ndarray
    delta_p: float

    @property
    def p_max(self):
        return float(np.max(np.abs(self.values)))


def momentum_grid(grid, hbar=CONSTANTS.hbar):
    n = grid.n_z
    j = np.arange(n)
    j = np.where(j < n // 2, j, j - n)
    dp = 2.0 * math.pi * hbar / (n * grid.delta_z)
    return MomentumGrid(dp * j, dp)


def edge_mass(field, fraction=EDGE_FRACTION):
    """Fraction of the norm held by the outer ``fraction`` of samples at each end."""
    p = field.density()
    k = max(1, int(fraction * len(p)))
    total = p.sum()
    if total == 0:
        return 0.0
    return float((p[:k].sum() + p[-k:].sum()) / total)


def _phase(p, m, g, T, hbar):
    q = p - m * g * T
    return np.exp((-1j * T / hbar) * (q * q / (2.0 * m) + 0.5 * g * T * q + m * g * g * T * T / 6.0))


def freefall_propagate(psi_d, T, params, *, hbar=CONSTANTS.hbar, check_leakage=True):
    """Propagate ``psi_d`` for a time ``T`` under gravity ``params.g``."""
    if T < 0:
        raise DomainError(f"T must be non-negative, got {T}")
    grid = psi_d.grid
    if T == 0:
        out = fft.ifft(fft.fft(psi_d.values))
        return WaveField(grid, out)
    m, g = params.m, params.g
    n = grid.n_z
    dp = 2.0 * math.pi * hbar / (n * grid.delta_z)
    a = fft.fft(psi_d.values)
    # phases applied in blocks so that large grids need no full-size temporaries
    for lo in range(0, n, _BLOCK):
        j = np.arange(lo, min(lo + _BLOCK, n))
        p = dp * np.where(j < n // 2, j, j - n)
        a[lo:lo + _BLOCK] *= _phase(p, m, g, T, hbar)
    out = fft.ifft(a, overwrite_x=True)
    del a
    k = -m * g * T / hbar
    for lo in range(0, n, _BLOCK):
        z = grid.z_min + grid.delta_z * np.arange(lo, min(lo + _BLOCK, n))
        out[lo:lo + _BLOCK] *= np.exp(1j * k * z)
    res = WaveField(grid, out)
    if check_leakage:
        leak = edge_mass(res)
        if leak > LEAKAGE_THRESHOLD:
            raise LeakageError(
                f"{leak:.3g} of the norm sits in the outer {EDGE_FRACTION:.0%} of the grid "
                f"after T = {T} s; extend the grid"
            )
    return res


def freefall_literal(psi_d, T, params, *, hbar=CONSTANTS.hbar):
    """Reference form: momentum-space propagator written in the unshifted momentum.

    ``psi(p, T) = psi(p + m g T, 0) exp(-i/(hbar) int_0^T (p + m g s)^2/2m ds)``,
    with the shift applied by interpolation-free modulation in position space.
    Only used to cross-check :func:`freefall_propagate`.
    """
    grid = psi_d.grid
    m, g = params.m, params.g
    z = grid.z
    # multiplying by exp(-i m g T z / hbar) shifts all momenta by -m g T
    shifted = psi_d.values * np.exp((-1j * m * g * T / hbar) * z)
    p = momentum_grid(grid, hbar).values
    # time integral of the kinetic energy along p(s) = p + m g (T - s)
    kin = (p * p * T + p * m * g * T * T + m * m * g * g * T**3 / 3.0) / (2.0 * m)
    a = fft.fft(shifted) * np.exp(-1j * kin / hbar)
    return WaveField(grid, fft.ifft(a))


def snapshot_freefall(psi_d, t_partial, params, *, hbar=CONSTANTS.hbar):
    if not 0 <= t_partial <= params.T * (1 + 1e-12):
        raise DomainError(f"t_partial = {t_partial} s outside [0, {params.T}] s")
    return freefall_propagate(psi_d, t_partial, params, hbar=hbar)
