"""Airy function Ai and its derivative for real and complex arguments.

The evaluation is split by region of the complex plane:

* ``|z| <= 1``: Maclaurin series.
* ``1 < |z| < 9`` and ``|arg z| <= pi/4``: Macdonald integral
  ``Ai(z) = sqrt(z/3)/pi * K_{1/3}(zeta)`` with ``K_nu`` computed by the
  trapezoidal rule on ``int exp(-zeta cosh t) cosh(nu t) dt``, which converges
  geometrically and has no cancellation.
* ``1 < |z| < 9`` and ``|Im z| <= 2`` otherwise: Taylor series of the Airy
  equation ``y'' = z y`` around tabulated real anchors spaced by 1/4. Anchors
  left of -1 are obtained by stepping the same recurrence from the Maclaurin
  value at -1 (the oscillatory side is neutrally stable).
* ``|z| >= 9``: the exponential (``Re z >= 0``) or oscillatory (``Re z < 0``)
  asymptotic expansion, truncated at 30 terms.

Arguments in the annulus ``1 < |z| < 9`` that lie outside both the sector
and the strip fall back to the Maclaurin series, where cancellation limits
the relative accuracy to about 1e-8. Gaussian projections onto bouncer
states only need small imaginary parts and never reach that fallback.
"""

import math

import numpy as np

from .errors import AiryRangeError, DomainError

__all__ = [
    "AI0",
    "AIP0",
    "ASYMPTOTIC_RADIUS",
    "airy",
    "airy_ai",
    "airy_ai_prime",
    "airy_ai_maclaurin",
    "airy_ai_asymptotic",
    "airy_zero",
    "airy_zeros",
    "airy_zero_seed",
]

AI0 = 1.0 / (3.0 ** (2.0 / 3.0) * math.gamma(2.0 / 3.0))
AIP0 = -1.0 / (3.0 ** (1.0 / 3.0) * math.gamma(1.0 / 3.0))

ASYMPTOTIC_RADIUS = 9.0
_MACLAURIN_RADIUS = 1.0
_STRIP_HALF_WIDTH = 2.0
_SECTOR = math.pi / 4.0
_N_ASYMPTOTIC = 30
_N_MACLAURIN = 45
_N_TAYLOR = 60
_ANCHOR_STEP = 0.25
_ANCHOR_MIN = -10.0
_ANCHOR_MAX = 10.0

# exp() overflows past this exponent
_EXP_LIMIT = 700.0

_SQRT_PI = math.sqrt(math.pi)


def _asymptotic_coefficients(n):
    u = np.empty(n + 1)
    v = np.empty(n + 1)
    u[0] = v[0] = 1.0
    for k in range(1, n + 1):
        u[k] = u[k - 1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216.0 * k)
        v[k] = -(6 * k + 1) / (6 * k - 1) * u[k]
    return u, v


_U, _V = _asymptotic_coefficients(2 * _N_ASYMPTOTIC + 1)


def _horner(coeffs, w):
    acc = np.full_like(w, coeffs[-1])
    for c in coeffs[-2::-1]:
        acc = acc * w + c
    return acc


# --- Maclaurin ---------------------------------------------------------------

def _maclaurin(z, nterms=_N_MACLAURIN):
    z3 = z * z * z
    f = np.ones_like(z)
    g = z.copy()
    df = np.zeros_like(z)
    dg = np.ones_like(z)
    tf = np.ones_like(z)
    tg = z.copy()
    td = 0.5 * z * z
    te = np.ones_like(z)
    df = df + td
    for k in range(1, nterms):
        tf = tf * z3 / ((3 * k - 1) * (3 * k))
        tg = tg * z3 / ((3 * k) * (3 * k + 1))
        te = te * z3 / ((3 * k - 2) * (3 * k))
        f = f + tf
        g = g + tg
        dg = dg + te
        if k >= 2:
            td = td * z3 / ((3 * k - 3) * (3 * k - 1))
            df = df + td
    ai = AI0 * f + AIP0 * g
    aip = AI0 * df + AIP0 * dg
    return ai, aip


# --- asymptotic expansions ---------------------------------------------------

def _asymptotic_right(z):
    zeta = (2.0 / 3.0) * z * np.sqrt(z)
    w = -1.0 / zeta
    su = _horner(_U[: _N_ASYMPTOTIC + 1], w)
    sv = _horner(_V[: _N_ASYMPTOTIC + 1], w)
    z14 = np.sqrt(np.sqrt(z))
    e = np.exp(-zeta)
    ai = e * su / (2.0 * _SQRT_PI * z14)
    aip = -z14 * e * sv / (2.0 * _SQRT_PI)
    return ai, aip


def _asymptotic_left(z):
    w = -z
    xi = (2.0 / 3.0) * w * np.sqrt(w)
    r = -1.0 / (xi * xi)
    inv = 1.0 / xi
    p = _horner(_U[0 : 2 * _N_ASYMPTOTIC : 2], r)
    q = inv * _horner(_U[1 : 2 * _N_ASYMPTOTIC + 1 : 2], r)
    pr = _horner(_V[0 : 2 * _N_ASYMPTOTIC : 2], r)
    qs = inv * _horner(_V[1 : 2 * _N_ASYMPTOTIC + 1 : 2], r)
    theta = xi - math.pi / 4.0
    c = np.cos(theta)
    s = np.sin(theta)
    w14 = np.sqrt(np.sqrt(w))
    ai = (c * p + s * q) / (_SQRT_PI * w14)
    aip = w14 * (s * pr - c * qs) / _SQRT_PI
    return ai, aip


# --- Macdonald integral ------------------------------------------------------

_K_STEP = 0.05
_K_NODES = np.arange(0.0, 7.0 + _K_STEP / 2, _K_STEP)
_K_WEIGHTS = np.full(_K_NODES.shape, _K_STEP)
_K_WEIGHTS[0] *= 0.5
_K_COSH = np.cosh(_K_NODES) - 1.0
_K_W13 = _K_WEIGHTS * np.cosh(_K_NODES / 3.0)
_K_W23 = _K_WEIGHTS * np.cosh(2.0 * _K_NODES / 3.0)


def _macdonald(z, chunk=4096):
    ai = np.empty_like(z)
    aip = np.empty_like(z)
    for lo in range(0, z.size, chunk):
        zz = z[lo : lo + chunk]
        zeta = (2.0 / 3.0) * zz * np.sqrt(zz)
        kern = np.exp(-np.multiply.outer(zeta, _K_COSH))
        e = np.exp(-zeta)
        k13 = e * (kern @ _K_W13)
        k23 = e * (kern @ _K_W23)
        ai[lo : lo + chunk] = np.sqrt(zz / 3.0) / math.pi * k13
        aip[lo : lo + chunk] = -zz / (math.pi * math.sqrt(3.0)) * k23
    return ai, aip


# --- Taylor continuation from real anchors -----------------------------------

def _taylor(c, ya, yp, delta, nterms=_N_TAYLOR):
    # y'' = (c + delta) y  =>  (k+2)(k+1) a_{k+2} = c a_k + a_{k-1}
    a_prev = np.zeros_like(ya)
    a0 = ya
    a1 = yp
    val = a0 + a1 * delta
    der = a1.copy()
    pw = delta.copy()  # delta**(k-1) for the derivative of term k+1
    ak_m1, ak, ak_p1 = a_prev, a0, a1
    for k in range(0, nterms - 2):
        a_next = (c * ak + ak_m1) / ((k + 1) * (k + 2))
        der = der + (k + 2) * a_next * pw
        pw = pw * delta
        val = val + a_next * pw
        ak_m1, ak, ak_p1 = ak, ak_p1, a_next
    return val, der


def _build_anchors():
    grid = np.arange(_ANCHOR_MIN, _ANCHOR_MAX + _ANCHOR_STEP / 2, _ANCHOR_STEP)
    ai = np.empty(grid.size)
    aip = np.empty(grid.size)
    small = np.abs(grid) <= 1.0
    a, b = _maclaurin(grid[small].astype(complex))
    ai[small], aip[small] = a.real, b.real
    right = grid > 1.0
    a, b = _macdonald(grid[right].astype(complex))
    ai[right], aip[right] = a.real, b.real
    start = int(np.flatnonzero(grid == -1.0)[0])
    step = np.array([-_ANCHOR_STEP])
    for j in range(start - 1, -1, -1):
        a, b = _taylor(
            np.array([grid[j + 1]]), np.array([ai[j + 1]]), np.array([aip[j + 1]]), step
        )
        ai[j], aip[j] = a[0], b[0]
    return grid, ai, aip


_ANCHOR_X, _ANCHOR_AI, _ANCHOR_AIP = _build_anchors()


def _anchored(z):
    idx = np.rint((z.real - _ANCHOR_MIN) / _ANCHOR_STEP).astype(int)
    idx = np.clip(idx, 0, _ANCHOR_X.size - 1)
    c = _ANCHOR_X[idx]
    return _taylor(
        c.astype(complex), _ANCHOR_AI[idx].astype(complex), _ANCHOR_AIP[idx].astype(complex), z - c
    )


# --- public API --------------------------------------------------------------

def airy(z):
    """Return ``(Ai(z), Ai'(z))`` elementwise.

    Real input gives real output. Raises :class:`AiryRangeError` if a value
    would overflow double precision.
    """
    arr = np.asarray(z)
    is_real = not np.iscomplexobj(arr)
    zc = np.atleast_1d(arr).astype(complex).ravel()
    ai = np.full(zc.shape, np.nan, dtype=complex)
    aip = np.full(zc.shape, np.nan, dtype=complex)

    r = np.abs(zc)
    finite = np.isfinite(zc)
    inner = finite & (r <= _MACLAURIN_RADIUS)
    outer = finite & (r >= ASYMPTOTIC_RADIUS)
    ring = finite & ~inner & ~outer
    sector = ring & (np.abs(np.angle(zc)) <= _SECTOR)
    strip = ring & ~sector & (np.abs(zc.imag) <= _STRIP_HALF_WIDTH)
    fallback = ring & ~sector & ~strip
    right = outer & (zc.real >= 0.0)
    left = outer & (zc.real < 0.0)

    _guard(zc, right, left)

    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        for mask, fn in (
            (inner | fallback, _maclaurin),
            (sector, _macdonald),
            (strip, _anchored),
            (right, _asymptotic_right),
            (left, _asymptotic_left),
        ):
            if mask.any():
                ai[mask], aip[mask] = fn(zc[mask])

    bad = finite & ~(np.isfinite(ai) & np.isfinite(aip))
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        raise AiryRangeError(f"Airy function overflows at z = {zc[k]!r}", argument=zc[k], index=k)

    if is_real:
        ai, aip = ai.real, aip.real
    if arr.ndim == 0:
        return ai[0].item(), aip[0].item()
    return ai.reshape(arr.shape), aip.reshape(arr.shape)


def _guard(zc, right, left):
    # growth exponent of the dominant solution
    if right.any():
        zr = zc[right]
        expo = -((2.0 / 3.0) * zr * np.sqrt(zr)).real
        over = expo > _EXP_LIMIT
        if over.any():
            k = int(np.flatnonzero(right)[over][0])
            raise AiryRangeError(f"Airy function overflows at z = {zc[k]!r}", argument=zc[k], index=k)
    if left.any():
        w = -zc[left]
        expo = np.abs(((2.0 / 3.0) * w * np.sqrt(w)).imag)
        over = expo > _EXP_LIMIT
        if over.any():
            k = int(np.flatnonzero(left)[over][0])
            raise AiryRangeError(f"Airy function overflows at z = {zc[k]!r}", argument=zc[k], index=k)


def airy_ai(z):
    """Ai(z) for real or complex ``z`` (scalar or array)."""
    return airy(z)[0]


def airy_ai_prime(z):
    """Ai'(z) for real or complex ``z`` (scalar or array)."""
    return airy(z)[1]


def airy_ai_maclaurin(z, nterms=_N_MACLAURIN):
    """Maclaurin-series branch alone, exposed for cross-validation."""
    zc = np.atleast_1d(np.asarray(z, dtype=complex))
    return _maclaurin(zc, nterms)


def airy_ai_asymptotic(z):
    """Asymptotic-expansion branch alone (valid for large ``|z|``)."""
    zc = np.atleast_1d(np.asarray(z, dtype=complex))
    ai = np.empty_like(zc)
    aip = np.empty_like(zc)
    right = zc.real >= 0
    if right.any():
        ai[right], aip[right] = _asymptotic_right(zc[right])
    if (~right).any():
        ai[~right], aip[~right] = _asymptotic_left(zc[~right])
    return ai, aip


# --- zeros -------------------------------------------------------------------

def airy_zero_seed(n):
    """Asymptotic estimate of ``lambda_n = -a_n`` from ``t = 3 pi (4n - 1) / 8``."""
    n = np.asarray(n, dtype=float)
    t = 3.0 * math.pi * (4.0 * n - 1.0) / 8.0
    t2 = t ** -2
    corr = 1.0 + t2 * (5.0 / 48.0 + t2 * (-5.0 / 36.0 + t2 * (77125.0 / 82944.0 - t2 * 108056875.0 / 6967296.0)))
    return t ** (2.0 / 3.0) * corr


def airy_zeros(n_max, *, start=1):
    """Magnitudes ``lambda_n`` of the zeros of Ai for ``n = start .. n_max``."""
    if start < 1 or n_max < start:
        raise DomainError(f"need 1 <= start <= n_max, got start={start}, n_max={n_max}")
    n = np.arange(start, n_max + 1)
    lam = airy_zero_seed(n)
    for _ in range(8):
        a, ap = airy(-lam)
        step = a / ap
        lam = lam + step
        if np.all(np.abs(step) <= 4e-16 * lam):
            break
    return lam


def airy_zero(n):
    """Magnitude of the ``n``-th zero of Ai (``n >= 1``)."""
    if int(n) != n or n < 1:
        raise DomainError(f"Airy zero index must be a positive integer, got {n!r}")
    return float(airy_zeros(int(n), start=int(n))[0])
