"""Detection statistics: densities, event sampling, likelihood fits, Fisher bound."""

from dataclasses import dataclass, field
from functools import cached_property
import math

import numpy as np
from scipy import fft, signal

from .errors import (
    DegenerateInputError,
    DomainError,
    StepSizeError,
    WindowError,
)

__all__ = [
    "SEED_MIX",
    "DetectionDensity",
    "DensityFamily",
    "EstimationReport",
    "FisherResult",
    "detection_density",
    "crop",
    "substream",
    "sample_events",
    "build_family",
    "family_window",
    "log_likelihood",
    "loglik_nodes",
    "mle_estimate",
    "monte_carlo_campaign",
    "fisher_information",
    "fisher_from_densities",
    "cramer_rao",
    "resolution_blur",
    "fringe_extrema",
    "pattern_shift",
    "crop_bounds",
]

SEED_MIX = "numpy SeedSequence(seed, spawn_key=(rep,)) -> PCG64"


@dataclass(frozen=True, eq=False)
class DetectionDensity:
    """Probability density of the detection altitude.

    ``pdf[i]`` is the density at ``grid.z_min + (start + i) * grid.delta_z``.
    A cropped density keeps the normalisation of the full grid.
    """

    grid: object
    pdf: np.ndarray
    g_value: float
    start: int = 0

    @property
    def delta_z(self):
        return self.grid.delta_z

    @property
    def z_min(self):
        return self.grid.z_min + self.start * self.grid.delta_z

    @property
    def z(self):
        return self.z_min + self.grid.delta_z * np.arange(len(self.pdf))

    @cached_property
    def cdf(self):
        """Cumulative trapezoid of the pdf scaled to end at exactly 1."""
        p = self.pdf
        c = np.empty(len(p))
        c[0] = 0.0
        np.cumsum(0.5 * (p[1:] + p[:-1]), out=c[1:])
        return c / c[-1]

    def mass(self):
        return float(np.sum(self.pdf) * self.grid.delta_z)

    def mean(self):
        return float(np.sum(self.z * self.pdf) / np.sum(self.pdf))

    def quantile(self, q):
        return np.interp(q, self.cdf, self.z)


def detection_density(psi_D, g):
    p = psi_D.density()
    total = float(np.sum(p)) * psi_D.grid.delta_z
    if not (math.isfinite(total) and total > 0):
        raise DegenerateInputError("wave function carries no probability")
    return DetectionDensity(psi_D.grid, p / total, float(g))


def crop(density, tail=1e-7, margin=1e-3, *, bounds=None):
    """Restrict a density to the altitudes that carry its mass.

    Drops ``tail`` of the mass on each side and keeps ``margin`` metres
    around what remains. ``bounds=(i0, i1)`` crops to explicit indices
    relative to ``density.start`` instead.
    """
    if bounds is None:
        bounds = crop_bounds(density, tail, margin)
    i0, i1 = bounds
    return DetectionDensity(density.grid, density.pdf[i0:i1].copy(), density.g_value, density.start + i0)


def crop_bounds(density, tail=1e-7, margin=1e-3):
    c = np.cumsum(density.pdf) * density.delta_z
    c /= c[-1]
    lo, hi = np.searchsorted(c, [tail, 1.0 - tail])
    pad = int(math.ceil(margin / density.delta_z))
    return max(0, int(lo) - pad), min(len(c), int(hi) + 1 + pad)


def substream(seed, index):
    """Generator for repetition ``index`` of a campaign seeded with ``seed``."""
    key = tuple(index) if isinstance(index, (tuple, list)) else (int(index),)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=key)))


def _inverse_cdf(density, u):
    """Exact inverse of the piecewise-linear density at probabilities ``u``.

    Inside an interval the CDF is quadratic; solving it rather than
    interpolating the CDF linearly makes the samples follow exactly the
    density used by the likelihood.
    """
    p = density.pdf
    h = density.delta_z
    cdf = density.cdf
    scale = 0.5 * h * np.sum(p[1:] + p[:-1])
    i = np.searchsorted(cdf, u, side="right") - 1
    i = np.clip(i, 0, len(p) - 2)
    r = (u - cdf[i]) * scale
    pa = p[i]
    s = (p[i + 1] - pa) / h
    disc = np.maximum(pa * pa + 2.0 * s * r, 0.0)
    den = pa + np.sqrt(disc)
    with np.errstate(divide="ignore", invalid="ignore"):
        x = np.where(den > 0, 2.0 * r / den, 0.0)
    x = np.clip(x, 0.0, h)
    return density.z_min + h * i + x


def sample_events(density, N, seed=0, *, rng=None):
    """Draw ``N`` detection altitudes by inverse-CDF sampling."""
    if int(N) < 1:
        raise DomainError(f"N must be >= 1, got {N}")
    if rng is None:
        rng = np.random.Generator(np.random.PCG64(int(seed)))
    u = rng.random(int(N))
    return _inverse_cdf(density, u)


@dataclass(frozen=True, eq=False)
class DensityFamily:
    """Densities on a common altitude window for an increasing list of ``g``."""

    g_grid: np.ndarray
    pdf: np.ndarray
    grid: object
    start: int
    params: object = None

    def __post_init__(self):
        g = np.asarray(self.g_grid, dtype=float)
        if g.ndim != 1 or len(g) < 3 or np.any(np.diff(g) <= 0):
            raise DomainError("g_grid must hold at least 3 strictly increasing values")
        if self.pdf.shape[0] != len(g):
            raise DomainError("one density per g value is required")

    @property
    def z_min(self):
        return self.grid.z_min + self.start * self.grid.delta_z

    @property
    def densities(self):
        return [
            DetectionDensity(self.grid, row, float(g), self.start)
            for g, row in zip(self.g_grid, self.pdf)
        ]

    def locate(self, z):
        """Interval index and fraction of each altitude in the window."""
        x = (np.asarray(z, dtype=float) - self.z_min) / self.grid.delta_z
        i = np.floor(x).astype(np.int64)
        n = self.pdf.shape[1]
        outside = (i < 0) | (i > n - 2)
        i = np.clip(i, 0, n - 2)
        f = np.where(outside, 0.0, x - i)
        return i, f, outside


def family_window(g0, sigma_rel, sigmas=10.0, points=41):
    """``points`` values of ``g`` spanning ``g0 (1 +- sigmas * sigma_rel)``."""
    if points < 3 or points % 2 == 0:
        raise DomainError("the family needs an odd number (>= 3) of points")
    return g0 * (1.0 + sigmas * sigma_rel * np.linspace(-1.0, 1.0, points))


def build_family(density_fn, g_grid, bounds_from, *, tail=1e-7, margin=1e-3, params=None):
    """Evaluate ``density_fn(g)`` on each ``g`` and crop to a common window.

    The window is taken from ``bounds_from`` (usually the density at the
    nominal ``g``) using :func:`crop_bounds`.
    """
    g_grid = np.asarray(g_grid, dtype=float)
    i0, i1 = crop_bounds(bounds_from, tail, margin)
    pdf = np.empty((len(g_grid), i1 - i0))
    for k, g in enumerate(g_grid):
        d = density_fn(g)
        if d.grid != bounds_from.grid or d.start != bounds_from.start:
            raise DomainError("family members must share the reference grid")
        pdf[k] = d.pdf[i0:i1]
    return DensityFamily(g_grid, pdf, bounds_from.grid, bounds_from.start + i0, params)


def _log_pdf_at(row, i, f, outside):
    v = (1.0 - f) * row[i] + f * row[i + 1]
    v = np.where(outside, 0.0, v)
    with np.errstate(divide="ignore"):
        return np.log(v)


def log_likelihood(sample, family, g):
    """Log-likelihood of ``sample`` under the family interpolated at ``g``.

    Linear in ``g`` between neighbouring members and linear in ``z`` between
    samples. Events where the density vanishes give ``-inf``.
    """
    gg = family.g_grid
    if not gg[0] <= g <= gg[-1]:
        raise DomainError(f"g = {g} outside the family span [{gg[0]}, {gg[-1]}]")
    k = min(int(np.searchsorted(gg, g, side="right")) - 1, len(gg) - 2)
    w = (g - gg[k]) / (gg[k + 1] - gg[k])
    i, f, outside = family.locate(sample)
    row_lo, row_hi = family.pdf[k], family.pdf[k + 1]
    v = (1.0 - w) * ((1.0 - f) * row_lo[i] + f * row_lo[i + 1])
    v += w * ((1.0 - f) * row_hi[i] + f * row_hi[i + 1])
    v = np.where(outside, 0.0, v)
    with np.errstate(divide="ignore"):
        return float(np.sum(np.log(v)))


def loglik_nodes(events, family):
    """Log-likelihood at every family node; ``events`` is ``(..., N)``."""
    events = np.asarray(events, dtype=float)
    i, f, outside = family.locate(events)
    out = np.empty(events.shape[:-1] + (len(family.g_grid),))
    for k, row in enumerate(family.pdf):
        out[..., k] = _log_pdf_at(row, i, f, outside).sum(axis=-1)
    return out


def _refine(ll, g_grid):
    """Parabolic refinement around the best node of each row of ``ll``."""
    ll = np.atleast_2d(ll)
    n = ll.shape[1]
    j = np.argmax(ll, axis=1)
    rows = np.arange(ll.shape[0])
    best = ll[rows, j]
    if np.any(~np.isfinite(best)):
        raise DegenerateInputError("every family member gives zero likelihood to the sample")
    edge = (j == 0) | (j == n - 1)
    jj = np.clip(j, 1, n - 2)
    ym, y0, yp = ll[rows, jj - 1], ll[rows, jj], ll[rows, jj + 1]
    h = g_grid[1] - g_grid[0]
    curv = ym - 2.0 * y0 + yp
    with np.errstate(divide="ignore", invalid="ignore"):
        off = 0.5 * h * (ym - yp) / curv
    ok = np.isfinite(off) & (curv < 0)
    off = np.where(ok, np.clip(off, -h, h), 0.0)
    return g_grid[jj] + off, edge, j


def mle_estimate(sample, family):
    """Maximum-likelihood ``g``: best node, then a parabola through 3 nodes."""
    gg = np.asarray(family.g_grid)
    if not np.allclose(np.diff(gg), gg[1] - gg[0], rtol=1e-6, atol=0):
        raise DomainError("parabolic refinement needs a uniform g grid")
    ll = loglik_nodes(np.asarray(sample)[None, :], family)
    g_hat, edge, j = _refine(ll, gg)
    if edge[0]:
        raise WindowError(
            f"likelihood maximum at the window edge g = {gg[j[0]]!r}; widen the family"
        )
    return float(g_hat[0])


@dataclass(frozen=True, eq=False)
class EstimationReport:
    estimators: np.ndarray
    N: int
    M: int
    g0: float
    fisher: float
    seed: int
    N_effective: int = 0
    g_grid: np.ndarray = field(default=None, repr=False)
    seed_mix: str = SEED_MIX

    @property
    def mean(self):
        return float(np.mean(self.estimators))

    @property
    def sigma_g(self):
        """Sample standard deviation of the estimators; NaN when M < 2."""
        if len(self.estimators) < 2:
            return float("nan")
        return float(np.std(self.estimators, ddof=1))

    @property
    def sigma_rel(self):
        return self.sigma_g / self.g0

    @property
    def sigma_cr(self):
        """Cramér-Rao bound relative to ``g0`` for the effective event count."""
        if not self.fisher or self.fisher <= 0:
            return float("nan")
        return cramer_rao(self.N_effective or self.N, self.fisher)

    def histogram(self, bins=41):
        rel = self.estimators / self.g0 - 1.0
        counts, edges = np.histogram(rel, bins=bins)
        return 0.5 * (edges[1:] + edges[:-1]), counts


def monte_carlo_campaign(
    model,
    N,
    M,
    seed=0,
    *,
    fisher=None,
    family=None,
    window_sigmas=10.0,
    points=41,
    reflection=1.0,
    seed_keys=None,
    tail=1e-7,
    margin=1e-3,
):
    """Repeat ``M`` simulated experiments of ``N`` events and fit ``g`` in each.

    Events are drawn from the density at ``model.g0``. Each repetition has its
    own random stream ``substream(seed, key)`` with ``key`` taken from
    ``seed_keys`` (default ``0 .. M-1``), so results do not depend on the
    order in which repetitions are run. ``reflection`` scales the number of
    detected events (``round(reflection * N)``), modelling losses on the plate.
    """
    if int(N) < 1 or int(M) < 1:
        raise DomainError(f"need N >= 1 and M >= 1, got N={N}, M={M}")
    if not 0 < reflection <= 1:
        raise DomainError(f"reflection must lie in (0, 1], got {reflection}")
    N, M = int(N), int(M)
    n_eff = max(1, int(round(reflection * N)))
    g0 = model.g0
    if fisher is None:
        fisher = fisher_information(model).value
    if family is None:
        sig = cramer_rao(n_eff, fisher)
        gg = family_window(g0, sig, window_sigmas, points)
        gg[points // 2] = g0
        family = build_family(model.density, gg, model.density(), tail=tail, margin=margin)
    ref = _reference_member(model, family)
    keys = range(M) if seed_keys is None else list(seed_keys)
    if len(keys) != M:
        raise DomainError("seed_keys must provide one key per repetition")
    events = np.stack([sample_events(ref, n_eff, rng=substream(seed, k)) for k in keys])
    ll = loglik_nodes(events, family)
    g_hat, edge, j = _refine(ll, np.asarray(family.g_grid))
    if np.any(edge):
        bad = np.flatnonzero(edge)
        raise WindowError(
            f"{len(bad)} of {M} repetitions peaked at the window edge "
            f"(first: repetition {bad[0]}, g = {family.g_grid[j[bad[0]]]!r})"
        )
    return EstimationReport(g_hat, N, M, g0, float(fisher), int(seed), n_eff, np.asarray(family.g_grid))


def _reference_member(model, family):
    """Density at ``g0`` restricted to the family window."""
    hit = np.flatnonzero(family.g_grid == model.g0)
    if len(hit):
        return DetectionDensity(family.grid, family.pdf[hit[0]], model.g0, family.start)
    full = model.density()
    i0 = family.start - full.start
    return crop(full, bounds=(i0, i0 + family.pdf.shape[1]))


@dataclass(frozen=True)
class FisherResult:
    value: float
    value_half_step: float
    richardson: float
    rel_change: float
    delta_g: float

    def __float__(self):
        return self.value


def fisher_from_densities(pdf_plus, pdf_minus, delta_g, g0, delta_z):
    """``4 g0^2 sum (d sqrt(pdf)/dg)^2 dz`` from a central difference."""
    der = (np.sqrt(np.maximum(pdf_plus, 0.0)) - np.sqrt(np.maximum(pdf_minus, 0.0))) / (2.0 * delta_g)
    return float(4.0 * g0 * g0 * np.sum(der * der) * delta_z)


def fisher_information(model, delta_g=None, *, density_fn=None, g0=None, sigma_det=0.0, tolerance=0.05):
    """Fisher information of the detection density with respect to ``g``.

    ``model`` provides ``g0`` and ``density(g)`` unless ``density_fn`` and
    ``g0`` are given. The central difference with step ``delta_g`` (default
    ``1e-7 g0``) is repeated at half the step; the two estimates are combined
    by Richardson extrapolation and must agree within ``tolerance``.
    """
    if g0 is None:
        g0 = model.g0
    if density_fn is None:
        density_fn = model.density
    if delta_g is None:
        delta_g = 1e-7 * g0
    if not delta_g > 0:
        raise DomainError(f"delta_g must be positive, got {delta_g}")

    def blurred(g):
        d = density_fn(g)
        return resolution_blur(d, sigma_det) if sigma_det > 0 else d

    vals = []
    for h in (delta_g, 0.5 * delta_g):
        dp, dm = blurred(g0 + h), blurred(g0 - h)
        vals.append(fisher_from_densities(dp.pdf, dm.pdf, h, g0, dp.delta_z))
    full, half = vals
    rich = half + (half - full) / 3.0
    scale = max(abs(full), abs(half))
    rel = abs(half - full) / scale if scale > 0 else 0.0
    if rel > tolerance:
        raise StepSizeError(
            f"Fisher information changes by {rel:.1%} when delta_g is halved "
            f"({full:.4g} vs {half:.4g}); try another delta_g"
        )
    return FisherResult(rich, half, rich, rel, float(delta_g))


def cramer_rao(N, fisher):
    """Relative Cramér-Rao bound ``1 / sqrt(N I_F)``."""
    if N < 1 or not fisher > 0:
        raise DomainError(f"need N >= 1 and I_F > 0, got N={N}, I_F={fisher}")
    return 1.0 / math.sqrt(N * fisher)


def resolution_blur(density, sigma_det):
    """Convolve the pdf with a normalised Gaussian of width ``sigma_det``."""
    if sigma_det < 0:
        raise DomainError(f"sigma_det must be non-negative, got {sigma_det}")
    if sigma_det == 0:
        return density
    p = density.pdf
    h = density.delta_z
    # zero padding keeps the circular wrap-around out of the kept samples
    pad = int(math.ceil(8.0 * sigma_det / h)) + 1
    n = fft.next_fast_len(len(p) + 2 * pad, real=True)
    buf = np.zeros(n)
    buf[pad:pad + len(p)] = p
    k = 2.0 * math.pi * fft.rfftfreq(n, h)
    out = fft.irfft(fft.rfft(buf) * np.exp(-0.5 * (k * sigma_det) ** 2), n)[pad:pad + len(p)]
    np.maximum(out, 0.0, out=out)
    out *= np.sum(p) / np.sum(out)
    return DetectionDensity(density.grid, out, density.g_value, density.start)


def fringe_extrema(pdf, lo, hi, prominence=1e-3):
    """Local maxima and minima indices of ``pdf[lo:hi]`` (offset by ``lo``).

    Extrema must stand out by ``prominence`` times the segment maximum, which
    discards sample-level ripples.
    """
    seg = np.asarray(pdf[lo:hi], dtype=float)
    if len(seg) < 3:
        return np.array([], int), np.array([], int)
    prom = prominence * float(np.max(np.abs(seg)))
    maxima = signal.find_peaks(seg, prominence=prom)[0]
    minima = signal.find_peaks(-seg, prominence=prom)[0]
    return maxima + lo, minima + lo


def pattern_shift(ref, other, lo=None, hi=None):
    """Displacement (m) of ``other`` relative to ``ref`` by cross-correlation.

    Both densities must share grid and start. The correlation is taken over
    samples ``lo:hi`` (default: the whole array); a positive result means the
    pattern moved towards larger ``z``.
    """
    if ref.grid != other.grid or ref.start != other.start:
        raise DomainError("densities must share grid and start")
    a = ref.pdf[lo:hi] - np.mean(ref.pdf[lo:hi])
    b = other.pdf[lo:hi] - np.mean(other.pdf[lo:hi])
    n = fft.next_fast_len(2 * len(a), real=True)
    corr = fft.irfft(np.conj(fft.rfft(a, n)) * fft.rfft(b, n), n)
    lag = int(np.argmax(corr))
    y0 = corr[lag]
    ym = corr[lag - 1]
    yp = corr[(lag + 1) % n]
    den = ym - 2.0 * y0 + yp
    frac = 0.5 * (ym - yp) / den if den < 0 else 0.0
    if lag > n // 2:
        lag -= n
    return (lag + frac) * ref.delta_z
