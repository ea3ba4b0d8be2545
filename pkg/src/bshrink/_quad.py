"""Shared 1-D quadrature machinery: tail truncation, endpoint-singularity
handling, and cached Gauss-Jacobi rules."""

import math
import warnings
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.special import roots_jacobi


class IntegrationError(RuntimeError):
    """Raised when an integral fails to converge at the requested tolerance."""

    def __init__(self, message, value=None, error=None):
        super().__init__(message)
        self.value = value
        self.error = error


def doubling_upper_point(cdf, start=1.0, tail=1e-12, max_doublings=240):
    """Smallest power-of-two multiple of `start` whose cdf mass exceeds 1 - tail.

    Deterministic, model-agnostic truncation rule for integrals over (0, inf).
    """
    u = float(start)
    for _ in range(max_doublings):
        if cdf(u) >= 1.0 - tail:
            return u
        u *= 2.0
    raise IntegrationError("tail truncation search did not converge")


def _quad_silent(f, a, b, epsabs, epsrel, points=None):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if points:
            pts = [p for p in points if a < p < b]
            return quad(f, a, b, epsabs=epsabs, epsrel=epsrel, limit=400,
                        points=pts or None)
        return quad(f, a, b, epsabs=epsabs, epsrel=epsrel, limit=400)


def integrate_power_endpoint(f, upper, alpha0=1.0, epsrel=1e-11, epsabs=0.0,
                             points=None):
    """Integral of f over (0, upper) where f(w) ~ w^alpha0 as w -> 0+.

    A fractional alpha0 below zero defeats plain adaptive rules, so the
    substitution w = u^k (k chosen to make the integrand vanish at least
    linearly at 0) is applied first.  Returns (value, error_estimate).
    """
    if upper <= 0.0:
        return 0.0, 0.0
    if alpha0 <= -1.0:
        raise IntegrationError(
            f"integrand behaves like w^{alpha0:g} near 0: not integrable")
    frac = abs(alpha0 - round(alpha0))
    if alpha0 < 0.25 and frac > 1e-12:
        k = max(2, math.ceil(2.0 / (alpha0 + 1.0)))

        def g(u):
            w = u ** k
            return f(w) * k * u ** (k - 1)

        return _quad_silent(g, 0.0, upper ** (1.0 / k), epsabs, epsrel)
    return _quad_silent(f, 0.0, upper, epsabs, epsrel, points=points)


def integrate_with_tail_doubling(f, upper, alpha0=1.0, epsrel=1e-11,
                                 epsabs=0.0, max_doublings=8, points=None):
    """Integrate f over (0, inf) by truncating at `upper` and doubling the
    truncation point until the added mass is negligible.

    Divergence shows up as tail contributions that refuse to settle and is
    reported as an IntegrationError.
    """
    total, err = integrate_power_endpoint(f, upper, alpha0, epsrel, epsabs,
                                          points=points)
    lo = upper
    for _ in range(max_doublings):
        hi = 2.0 * lo
        add, aerr = _quad_silent(f, lo, hi, epsabs=max(epsabs, 1e-300),
                                 epsrel=epsrel)
        total += add
        err += abs(aerr)
        if abs(add) <= max(epsabs, epsrel * abs(total), 1e-300):
            return total, err
        lo = hi
    raise IntegrationError(
        "tail contributions did not settle under truncation doubling "
        "(divergent or extremely heavy-tailed integrand)",
        value=total, error=err)


@lru_cache(maxsize=128)
def jacobi_rule(n, alpha, beta):
    """Nodes/weights for int_{-1}^{1} (1-x)^alpha (1+x)^beta g(x) dx."""
    x, w = roots_jacobi(n, alpha, beta)
    return np.ascontiguousarray(x), np.ascontiguousarray(w)
