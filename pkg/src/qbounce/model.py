"""End-to-end pipeline: initial packet, bounce over the mirror, fall to the plate."""

import numpy as np

from .airy import airy, airy_zeros
from .bounce import SPLINE_ORDER, bn_coefficients, evolve_on_mirror, psi_d_spline
from .errors import DomainError
from .freefall import freefall_propagate
from .grid import (
    DEFAULT_SAFETY,
    MAX_POINTS,
    WaveField,
    extend_for_freefall,
    first_phase_grid,
    nyquist_spacing,
)
from .physics import CONSTANTS, SpectralDecomposition, _cn, gqs_units

__all__ = ["BounceModel"]


class BounceModel:
    """Caches what does not depend on ``g`` and computes densities at any ``g``.

    All densities share the grids built at the nominal ``params.g``, so that
    members of a likelihood family can be compared sample by sample.
    """

    def __init__(
        self,
        params,
        *,
        n_gqs=12000,
        delta_z=None,
        safety=DEFAULT_SAFETY,
        max_points=MAX_POINTS,
        spline_order=SPLINE_ORDER,
    ):
        self.params = params
        self.n_gqs = int(n_gqs)
        self.hbar = CONSTANTS.hbar
        units = gqs_units(params.m, params.g, self.hbar)
        if delta_z is None:
            delta_z = nyquist_spacing(units, self.n_gqs, safety)
        self.max_points = max_points
        self.spline_order = spline_order
        self.lam = airy_zeros(self.n_gqs)
        self.ai_prime = airy(-self.lam)[1]
        self.grid_mirror = first_phase_grid(units, self.n_gqs, delta_z, max_points=max_points)
        self._grid_fall = None
        self._density0 = None

    @property
    def g0(self):
        return self.params.g

    @property
    def delta_z(self):
        return self.grid_mirror.delta_z

    def _params(self, g):
        return self.params if g is None or g == self.params.g else self.params.with_g(g)

    def decomposition(self, g=None):
        p = self._params(g)
        units = gqs_units(p.m, p.g, self.hbar)
        c = _cn(p, units, self.lam, self.ai_prime, self.hbar)
        return SpectralDecomposition(self.lam, c, self.ai_prime, units, p)

    def psi_mirror_end(self, g=None):
        """State when the packet leaves the mirror, on the first-phase grid."""
        dec = self.decomposition(g)
        bn = bn_coefficients(dec, dec.params.d, dec.params.V)
        return psi_d_spline(bn, dec, self.grid_mirror, self.spline_order)

    @property
    def grid_fall(self):
        if self._grid_fall is None:
            self._grid_fall = extend_for_freefall(
                self.grid_mirror,
                self.params,
                self.psi_mirror_end(),
                max_points=self.max_points,
            )
        return self._grid_fall

    def embed(self, field):
        """Place a first-phase field at the top of the free-fall grid."""
        big = self.grid_fall
        out = np.zeros(big.n_z, dtype=complex)
        out[big.n_z - field.grid.n_z :] = field.values
        return WaveField(big, out)

    def psi_detector(self, g=None, t_fall=None):
        p = self._params(g)
        T = p.T if t_fall is None else t_fall
        psi = self.embed(self.psi_mirror_end(g))
        return freefall_propagate(psi, T, p, hbar=self.hbar)

    def density(self, g=None):
        from .estimation import detection_density

        if g is None or g == self.params.g:
            if self._density0 is None:
                self._density0 = detection_density(self.psi_detector(), self.params.g)
            return self._density0
        return detection_density(self.psi_detector(g), g)

    def snapshot(self, x, g=None):
        """Field at horizontal abscissa ``x = V t`` with ``0 <= x <= D``."""
        p = self._params(g)
        if not 0 <= x <= p.D * (1 + 1e-12):
            raise DomainError(f"x = {x} m outside [0, {p.D}] m")
        if x <= p.d:
            return evolve_on_mirror(self.decomposition(g), x / p.V, self.grid_mirror, order=self.spline_order)
        return self.psi_detector(g, t_fall=(x - p.d) / p.V)

    def describe(self):
        gf = self.grid_fall
        gm = self.grid_mirror
        return {
            "n_gqs": self.n_gqs,
            "spline_order": self.spline_order,
            "delta_z_m": gm.delta_z,
            "mirror_grid_z_min_m": gm.z_min,
            "mirror_grid_n_z": gm.n_z,
            "fall_grid_z_min_m": gf.z_min,
            "fall_grid_n_z": gf.n_z,
            "nyquist_ratio": gm.delta_z / nyquist_spacing(gqs_units(self.params.m, self.params.g), self.n_gqs, 1.0),
            "l_g_m": gqs_units(self.params.m, self.params.g).l_g,
        }

    def __repr__(self):
        return f"BounceModel(n_gqs={self.n_gqs}, delta_z={self.delta_z:.4g})"

