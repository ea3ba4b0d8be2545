"""Shared oracles for the test suite.

The risk oracle below integrates in (radius, angle-cosine) coordinates of
X = theta + R*U, a parametrization disjoint from the production code's
(T, W) = (direction-cosine, squared-norm) reduction, so agreement is a real
cross-check rather than a tautology.
"""

import math

from scipy.integrate import quad
from scipy.special import gamma as gamma_fn


def sphere_mean_loss(model, bl, est, lam, r):
    """Mean balanced loss over the sphere ||x - theta|| = r, theta = lam*e1."""
    d = model.dim
    c_t = gamma_fn(d / 2) / (gamma_fn((d - 1) / 2) * math.sqrt(math.pi))
    b = est.shrink_b
    mult = est.multiplier

    def g(t):
        w = r * r + lam * lam + 2 * lam * r * t
        if w <= 0:
            return 0.0
        shr = b * float(mult.shrink_factor(w))
        fit = shr * shr * w
        h = 1.0 - shr
        # ||h x - theta||^2 with x'theta = lam^2 + lam r t
        prec = h * h * w - 2 * h * (lam * lam + lam * r * t) + lam * lam
        return float(bl.combine(fit, max(prec, 0.0))) * (1 - t * t) ** ((d - 3) / 2)

    val, _ = quad(g, -1, 1, epsabs=1e-12, epsrel=1e-11, limit=300)
    return c_t * val


def radial_sphere_risk(model, bl, est, lam, epsabs=1e-9):
    """Risk by integrating sphere means against the radial law."""
    r_hi = math.sqrt(model.w_upper())

    def f(r):
        return model.radial_pdf(r) * sphere_mean_loss(model, bl, est, lam, r)

    val, _ = quad(f, 0, r_hi, epsabs=epsabs, epsrel=1e-9, limit=300)
    return val
