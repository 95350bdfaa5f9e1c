"""Standard normal primitives: Phi, its survival function, quantiles and the
equal-level bivariate orthant probability.

Univariate functions accept scalars or arrays and return the same shape.
Tail probabilities are computed directly (``sf(t) = ndtr(-t)``) so they keep
full relative precision far into the tail.
"""

import math

import numpy as np
from scipy import integrate
from scipy.special import ndtr, ndtri

from .errors import DomainError

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _as_finite(t, name="t"):
    arr = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite, got {t!r}")
    return arr


def _unwrap(arr):
    return float(arr) if arr.ndim == 0 else arr


def std_normal_pdf(t):
    arr = np.asarray(t, dtype=float)
    return _unwrap(_INV_SQRT_2PI * np.exp(-0.5 * arr * arr))


def std_normal_cdf(t):
    """Phi(t)."""
    return _unwrap(ndtr(_as_finite(t)))


def std_normal_sf(t):
    """1 - Phi(t), evaluated as Phi(-t) to avoid cancellation."""
    return _unwrap(ndtr(-_as_finite(t)))


def _as_open_prob(p):
    arr = np.asarray(p, dtype=float)
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise DomainError(f"probability must lie in (0, 1), got {p!r}")
    return arr


def std_normal_quantile(p):
    """Inverse of Phi on (0, 1)."""
    return _unwrap(ndtri(_as_open_prob(p)))


def std_normal_isf(p):
    """Inverse survival function: the t with 1 - Phi(t) = p.

    Computed as ``-ndtri(p)`` so that small p (deep upper tail) keeps its
    relative precision; ``ndtri(1 - p)`` would not.
    """
    return _unwrap(-ndtri(_as_open_prob(p)))


def _check_rho(rho):
    if not math.isfinite(rho) or abs(rho) > 1.0:
        raise DomainError(f"correlation must lie in [-1, 1], got {rho!r}")


def _lower_strip(t, rho):
    """P(X <= t, Y > t) for 0 <= rho < 1, by quadrature over Y.

    The integrand phi(y) Phi((t - rho y)/s) is concentrated within a few
    multiples of s/rho above t once rho is close to one, so the range is
    split there to keep the adaptive rule from stepping over it.
    """
    s = math.sqrt((1.0 - rho) * (1.0 + rho))

    def f(u):
        y = t + u
        return _INV_SQRT_2PI * math.exp(-0.5 * y * y) * ndtr((t * (1.0 - rho) - rho * u) / s)

    width = s / rho if rho > 0 else 1.0
    breaks = [0.0]
    for mult in (1.0, 8.0, 40.0):
        edge = mult * width
        if edge > breaks[-1] and edge < 40.0:
            breaks.append(edge)
    breaks.append(max(40.0, breaks[-1] * 2.0))
    total = 0.0
    for a, b in zip(breaks[:-1], breaks[1:]):
        val, _ = integrate.quad(f, a, b, epsabs=1e-17, epsrel=1e-12, limit=200)
        total += val
    val, _ = integrate.quad(f, breaks[-1], np.inf, epsabs=1e-17, epsrel=1e-12, limit=200)
    return total + val


def _upper_orthant_negative(t, rho):
    s = math.sqrt((1.0 - rho) * (1.0 + rho))

    def f(y):
        return _INV_SQRT_2PI * math.exp(-0.5 * y * y) * ndtr((rho * y - t) / s)

    lo = t
    val, _ = integrate.quad(f, lo, max(lo, 0.0) + 40.0, epsabs=1e-17, epsrel=1e-12, limit=200)
    return val


def bivariate_exceedance(t, rho):
    """P(X > t, Y > t) for standard normals with correlation rho.

    One-dimensional quadrature of P(X > t | Y = y) phi(y) over y > t. For
    rho >= 0 the result is formed as Phi_bar(t) minus the strip
    P(X <= t, Y > t), which stays accurate as rho -> 1.
    """
    t = float(_as_finite(t))
    rho = float(rho)
    _check_rho(rho)
    sf = float(ndtr(-t))
    if rho == 1.0:
        return sf
    if rho == -1.0:
        return max(0.0, float(ndtr(-t) - ndtr(t)))
    if rho >= 0.0:
        return min(sf, max(0.0, sf - _lower_strip(t, rho)))
    return min(sf, max(0.0, _upper_orthant_negative(t, rho)))


def conditional_exceedance_deficit(t, rho):
    """1 - P(X > t | Y > t) for correlation rho in [0, 1].

    Returned without forming the conditional probability first, so the value
    keeps relative accuracy when it is small (rho near one).
    """
    t = float(_as_finite(t))
    rho = float(rho)
    _check_rho(rho)
    if rho < 0.0:
        return 1.0 - bivariate_exceedance(t, rho) / float(ndtr(-t))
    if rho == 1.0:
        return 0.0
    return _lower_strip(t, rho) / float(ndtr(-t))
