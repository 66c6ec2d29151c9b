"""Gamma-family special functions and the soft-thresholding operator.

``log_gamma``, ``digamma`` and ``trigamma`` shift every argument up by seven
with the recurrence relations and then evaluate the Stirling-type asymptotic
series. ``log_gamma`` switches to a Taylor series around its two positive
roots (x = 1 and x = 2) so that relative accuracy holds where the function
itself goes to zero.

All functions accept scalars or numpy arrays and return the same kind.
Non-finite or out-of-domain inputs raise :class:`DomainError`.
"""

import math

import numpy as np

from .errors import DomainError

__all__ = [
    "log_gamma",
    "digamma",
    "trigamma",
    "log_beta",
    "regularized_incomplete_beta",
    "soft_threshold",
]

EULER_GAMMA = 0.57721566490153286061
_HALF_LOG_2PI = 0.91893853320467274178
_SHIFT = 7
_OFFSETS = np.arange(_SHIFT, dtype=float)

# Bernoulli numbers B_2 .. B_16
_BERNOULLI = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
)

# Stirling: ln Γ(x) = (x - 1/2) ln x - x + ln √(2π) + Σ B_2j / (2j (2j-1) x^(2j-1))
_LGAMMA_COEF = tuple(b / ((2 * j) * (2 * j - 1)) for j, b in enumerate(_BERNOULLI, start=1))
# ψ(x) = ln x - 1/(2x) - Σ B_2j / (2j x^(2j))
_DIGAMMA_COEF = tuple(b / (2 * j) for j, b in enumerate(_BERNOULLI, start=1))
# ψ'(x) = 1/x + 1/(2x²) + Σ B_2j / x^(2j+1)
_TRIGAMMA_COEF = _BERNOULLI
_PAIR_COEF = tuple(
    np.array([d, t]) for d, t in zip(reversed(_DIGAMMA_COEF), reversed(_TRIGAMMA_COEF))
)
_PAIR_COEF_1D = tuple(c.reshape(2, 1) for c in _PAIR_COEF)


def _zeta(s, n_terms=10):
    """Riemann zeta at integer s >= 2 by Euler-Maclaurin summation."""
    total = sum(k ** -s for k in range(1, n_terms))
    N = float(n_terms)
    total += N ** (1 - s) / (s - 1) + 0.5 * N ** -s
    rising = float(s)  # s (s+1) ... (s+2j-2)
    for j, b in enumerate(_BERNOULLI, start=1):
        total += b / math.factorial(2 * j) * rising * N ** (-s - 2 * j + 1)
        rising *= (s + 2 * j - 1) * (s + 2 * j)
    return total


# ln Γ(1+e) = -γ e + Σ_{k>=2} (-1)^k ζ(k) e^k / k, used for |e| <= _ROOT_RADIUS
_ROOT_RADIUS = 0.25
_ROOT_SERIES = tuple((-1) ** k * _zeta(k) / k for k in range(2, 34))


def _as_checked_array(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    return arr


def _positive(x, name="x"):
    arr = _as_checked_array(x, name)
    if np.any(arr <= 0.0):
        raise DomainError(f"{name} must be > 0")
    return arr


def _result(arr, like):
    return float(arr) if np.ndim(like) == 0 else arr


def _polyval_inverse(coef, inv_x2):
    # Horner in 1/x² for Σ coef[j] * inv_x2**j
    acc = np.zeros_like(inv_x2)
    for c in reversed(coef):
        acc = acc * inv_x2 + c
    return acc


def _root_series(e):
    acc = np.zeros_like(e)
    for c in reversed(_ROOT_SERIES):
        acc = (acc + c) * e
    return (acc - EULER_GAMMA) * e


def _shifted(x):
    # recurrence shift by a fixed _SHIFT steps keeps every argument in the
    # asymptotic regime without per-element branching
    w = x + _SHIFT
    inv = 1.0 / (x[..., None] + _OFFSETS)
    return w, inv


def log_gamma(x):
    """Natural log of the gamma function for x > 0."""
    x = _positive(x)
    z = np.array(x, dtype=float, ndmin=1)
    out = np.empty_like(z)

    near1 = np.abs(z - 1.0) <= _ROOT_RADIUS
    near2 = np.abs(z - 2.0) <= _ROOT_RADIUS
    if near1.any():
        out[near1] = _root_series(z[near1] - 1.0)
    if near2.any():
        e2 = z[near2] - 2.0
        out[near2] = np.log1p(e2) + _root_series(e2)

    rest = ~(near1 | near2)
    if rest.any():
        v = z[rest]
        w = v + _SHIFT
        shifted = v[:, None] + _OFFSETS
        if v.max() < 1e40:
            log_prod = np.log(np.prod(shifted, axis=1))
        else:
            # the product would overflow
            log_prod = np.log(shifted).sum(axis=1)
        inv = 1.0 / w
        series = inv * _polyval_inverse(_LGAMMA_COEF, inv * inv)
        out[rest] = (w - 0.5) * np.log(w) - w + _HALF_LOG_2PI + series - log_prod
    return _result(out.reshape(np.shape(x)), x)


def _digamma_unchecked(x):
    w, inv = _shifted(x)
    inv2 = 1.0 / (w * w)
    return np.log(w) - 0.5 / w - inv2 * _polyval_inverse(_DIGAMMA_COEF, inv2) - inv.sum(axis=-1)


def _trigamma_unchecked(x):
    w, inv = _shifted(x)
    iw = 1.0 / w
    iw2 = iw * iw
    return iw + 0.5 * iw2 + iw * iw2 * _polyval_inverse(_TRIGAMMA_COEF, iw2) + (inv * inv).sum(axis=-1)


def psi_pair(x):
    """Digamma and trigamma together, without argument checks.

    Internal fast path for inner loops; callers guarantee finite x > 0.
    """
    x = np.asarray(x, dtype=float)
    w, inv = _shifted(x)
    iw = 1.0 / w
    iw2 = iw * iw
    acc = np.zeros((2,) + iw2.shape)
    if iw2.ndim == 1:
        coefs = _PAIR_COEF_1D
    else:
        coefs = tuple(c.reshape((2,) + (1,) * iw2.ndim) for c in _PAIR_COEF)
    for c in coefs:
        acc *= iw2
        acc += c
    psi = np.log(w) - 0.5 * iw - iw2 * acc[0] - inv.sum(axis=-1)
    tri = iw + 0.5 * iw2 + iw * iw2 * acc[1] + (inv * inv).sum(axis=-1)
    return psi, tri


def digamma(x):
    """Digamma function psi(x) = d/dx ln Gamma(x) for x > 0."""
    arr = _positive(x)
    return _result(_digamma_unchecked(arr), x)


def trigamma(x):
    """Trigamma function psi'(x) for x > 0; always positive."""
    arr = _positive(x)
    return _result(_trigamma_unchecked(arr), x)


def log_beta(a, b):
    """ln B(a, b) = ln Γ(a) + ln Γ(b) - ln Γ(a + b)."""
    a = _positive(a, "a")
    b = _positive(b, "b")
    return log_gamma(a) + log_gamma(b) - log_gamma(a + b)


_CF_EPS = 1e-16
_CF_TINY = 1e-300
_CF_MAXIT = 20000


def _beta_continued_fraction(a, b, y):
    # Modified Lentz evaluation of the incomplete beta continued fraction
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * y / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * y / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * y / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise DomainError(f"incomplete beta continued fraction did not converge for a={a}, b={b}")


def _ibeta_scalar(a, b, y):
    if y == 0.0:
        return 0.0
    if y == 1.0:
        return 1.0
    log_front = a * math.log(y) + b * math.log1p(-y) - float(log_beta(a, b))
    if y < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _beta_continued_fraction(a, b, y) / a
    return 1.0 - math.exp(log_front) * _beta_continued_fraction(b, a, 1.0 - y) / b


def regularized_incomplete_beta(a, b, y):
    """Regularized incomplete beta I_y(a, b), the beta(a, b) CDF at y.

    ``y`` may be an array; ``a`` and ``b`` are scalars.
    """
    a = float(_positive(a, "a"))
    b = float(_positive(b, "b"))
    yy = _as_checked_array(y, "y")
    if np.any((yy < 0.0) | (yy > 1.0)):
        raise DomainError("y must lie in [0, 1]")
    if yy.ndim == 0:
        return _ibeta_scalar(a, b, float(yy))
    flat = np.array([_ibeta_scalar(a, b, float(v)) for v in yy.ravel()])
    return np.clip(flat, 0.0, 1.0).reshape(yy.shape)


def soft_threshold(x, k):
    """Soft-thresholding operator: shrink ``x`` toward 0 by ``k``, zero inside [-k, k]."""
    if isinstance(x, float) and isinstance(k, float):
        if k < 0.0:
            raise DomainError("threshold k must be >= 0")
        if x > k:
            return x - k
        if x < -k:
            return x + k
        return 0.0
    if np.any(np.asarray(k) < 0):
        raise DomainError("threshold k must be >= 0")
    x_arr = np.asarray(x, dtype=float)
    out = np.sign(x_arr) * np.maximum(np.abs(x_arr) - k, 0.0) + 0.0
    return _result(out, x)
