"""Dominance cut-off constants for Baranchik-type shrinkage.

Two routes per balanced-loss form: generic adaptive quadrature of the
loss-slope-weighted moments of the model, and the closed forms available for
particular model/loss pairs.  Both are exposed so each can audit the other.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma as gamma_fn

from ._quad import integrate_power_endpoint, integrate_with_tail_doubling
from .losses import certify_C1, certify_C3

RHO_ROUTE = "rho_form"
ELL_ROUTE = "ell_form"


@dataclass
class CutoffReport:
    """Cut-off constant with the integrals that produced it.

    admissible_b_max translates the bound on the raw coefficient a into the
    stored-coefficient range b <= a0 * (1 - omega).
    """

    a0: float
    admissible_b_max: float
    method: str          # quadrature | closed_form | tilted
    theorem: str         # rho_form | ell_form route
    omega: float
    dim: int
    intermediates: dict = field(default_factory=dict)
    model: str = ""
    loss: str = ""

    def to_dict(self):
        return {"a0": self.a0, "admissible_b_max": self.admissible_b_max,
                "method": self.method, "theorem": self.theorem,
                "omega": self.omega, "dim": self.dim,
                "intermediates": dict(self.intermediates),
                "model": self.model, "loss": self.loss}


def _certify_or_raise(loss, condition):
    cert = certify_C1(loss) if condition == "C1" else certify_C3(loss)
    if not cert.ok:
        clauses = ", ".join(v.clause for v in cert.violations)
        raise ValueError(
            f"loss {loss!r} fails {condition} certification ({clauses})")


def _require_moments(model):
    # the dominance guarantees need E[W] and E[W^-1]; raises if divergent
    model.moment(1)
    model.moment(-1)


def loss_weighted_moment(model, rho, k, normalize=True, epsrel=1e-11):
    """Integral of w^{k-1} rho'(w) f(w) dw over the W-support, with rho
    rescaled to unit slope at zero when `normalize`.

    Computed by adaptive quadrature with deterministic tail truncation plus
    doubling; non-convergence under doubling is reported as divergence.
    """
    if k <= 0:
        raise ValueError("k must be positive")
    gen = model.gen
    deriv = rho.deriv
    f = lambda w: w ** (k - 1) * deriv(w) * gen(w)
    alpha0 = k - 1 + model.gen_pow0 + rho.deriv_pow0
    upper = model.w_upper()
    if math.isfinite(model.w_support()[1]):
        val, _ = integrate_power_endpoint(f, upper, alpha0, epsrel=epsrel)
    else:
        val, _ = integrate_with_tail_doubling(f, upper, alpha0, epsrel=epsrel)
    if normalize:
        rp0 = rho.rho_prime_at_zero
        if not math.isfinite(rp0) or rp0 <= 0:
            raise ValueError(
                f"loss {rho!r} has no finite positive slope at zero")
        val /= rp0
    return val


def cutoff_rho(model, rho, omega, method="moments", skip_certification=False):
    """Largest shrinkage constant a0 guaranteeing dominance of X under the
    weighted-sum balanced loss, for a C1-certified shape rho and dim >= 4.

    method='moments' evaluates the explicit representation in the normalized
    loss-slope moments; method='tilted' takes the inverse squared-norm mean
    under the slope-tilted law (the two agree algebraically and cross-check
    the tilt plumbing).
    """
    d = model.dim
    if d < 4:
        raise ValueError(f"cut-off requires dim >= 4, got {d}")
    if not 0.0 <= omega < 1.0:
        raise ValueError(f"omega must lie in [0, 1), got {omega}")
    if not skip_certification:
        _certify_or_raise(rho, "C1")
    _require_moments(model)
    rp0 = rho.rho_prime_at_zero

    gd = gamma_fn(d / 2) / math.pi ** (d / 2)
    if method == "moments":
        moment_hi = loss_weighted_moment(model, rho, d / 2)
        moment_lo = loss_weighted_moment(model, rho, d / 2 - 1)
        tilt_mass = moment_hi / gd  # E[rho'(W)] for the unit-slope shape
        a0 = (2 * ((d - 2) / d) * moment_hi ** 2
              / ((omega * gd + (1 - omega) * moment_hi) * moment_lo))
        intermediates = {"weighted_moment_hi": moment_hi,
                         "weighted_moment_lo": moment_lo,
                         "tilt_normalizer": tilt_mass,
                         "rho_prime_at_zero_raw": rp0}
    elif method == "tilted":
        unit = rho.normalized()
        law = model.tilted(unit.deriv, weight_pow0=unit.deriv_pow0)
        inv_sq = law.moment(-1)
        a0 = (2 * law.K * (d - 2) / d
              / ((omega + law.K * (1 - omega)) * inv_sq))
        intermediates = {"tilt_normalizer": law.K,
                         "tilted_inverse_w_mean": inv_sq,
                         "rho_prime_at_zero_raw": rp0}
    else:
        raise ValueError("method must be 'moments' or 'tilted'")

    return CutoffReport(a0, a0 * (1 - omega),
                        "quadrature" if method == "moments" else "tilted",
                        RHO_ROUTE, omega, d, intermediates,
                        model.describe(), repr(rho))


def cutoff_ell(model, ell, omega, skip_certification=False):
    """Cut-off for the loss-of-weighted-sum form: (2(d-2)/d) times the ratio
    of E[ell'((1-omega)W)] to E[ell'((1-omega)W)/W]."""
    d = model.dim
    if d < 4:
        raise ValueError(f"cut-off requires dim >= 4, got {d}")
    if not 0.0 <= omega < 1.0:
        raise ValueError(f"omega must lie in [0, 1), got {omega}")
    if not skip_certification:
        _certify_or_raise(ell, "C3")
    _require_moments(model)

    # endpoint exponent of the denominator integrand: divergence would
    # silently corrupt a0, so refuse it explicitly
    alpha_den = d / 2 - 2 + model.gen_pow0 + ell.deriv_pow0
    if alpha_den <= -1.0:
        raise ValueError(
            "E[ell'((1-omega)W)/W] diverges for this model/loss "
            f"(endpoint exponent {alpha_den:g} <= -1)")

    scale = 1.0 - omega
    num = model.expect_w(lambda w: ell.deriv(scale * w),
                         phi_pow0=ell.deriv_pow0)
    den = model.expect_w(lambda w: ell.deriv(scale * w) / w,
                         phi_pow0=ell.deriv_pow0 - 1)
    a0 = 2 * (d - 2) / d * num / den
    intermediates = {"mean_loss_slope": num, "mean_loss_slope_over_w": den}
    return CutoffReport(a0, a0 * (1 - omega), "quadrature", ELL_ROUTE,
                        omega, d, intermediates, model.describe(), repr(ell))


# -- closed forms -----------------------------------------------------------


def closed_form(name, **params):
    """The cut-offs available in closed form.

    ball_log_d4(m, omega): uniform ball, log(1+t) shape, dim 4 (rho route);
    kotz_refnorm(r, nu, alpha, omega, d): Kotz s=1, reflected-normal shape;
    ball_power(m, q, d, omega=0): uniform ball, power shape (ell route);
    kotz_power(r, s, nu, q, d, omega=0): Kotz model, power shape.
    """
    if name == "ball_log_d4":
        m = params.pop("m")
        omega = params.pop("omega")
        _no_extra(name, params)
        _check(m > 0, "m must be positive")
        _check(0 <= omega < 1, "omega must lie in [0, 1)")
        m2 = m * m
        lg = math.log1p(m2)
        a0 = ((m2 - lg) ** 2
              / ((omega * m2 * m2 / 2 + (1 - omega) * (m2 - lg)) * lg))
        return CutoffReport(a0, a0 * (1 - omega), "closed_form", RHO_ROUTE,
                            omega, 4, {"m": m}, f"ball(m={m:g}, dim=4)",
                            "log1p")
    if name == "kotz_refnorm":
        r = params.pop("r")
        nu = params.pop("nu")
        alpha = params.pop("alpha")
        omega = params.pop("omega")
        d = int(params.pop("d"))
        _no_extra(name, params)
        _check(r > 0 and alpha > 0, "r and alpha must be positive")
        _check(nu > 1, "nu must exceed 1 for finite risk")
        _check(d >= 4, "d must be at least 4")
        _check(0 <= omega < 1, "omega must lie in [0, 1)")
        a0 = (2 * (nu - 1) * (1 - 2 / d) / (r + alpha)
              / (omega * (1 + alpha / r) ** nu + (1 - omega)))
        return CutoffReport(a0, a0 * (1 - omega), "closed_form", RHO_ROUTE,
                            omega, d, {"r": r, "nu": nu, "alpha": alpha},
                            f"kotz(r={r:g}, s=1, nu={nu:g}, dim={d})",
                            f"reflected_normal(alpha={alpha:g})")
    if name == "ball_power":
        m = params.pop("m")
        q = params.pop("q")
        d = int(params.pop("d"))
        omega = params.pop("omega", 0.0)
        _no_extra(name, params)
        _check(m > 0, "m must be positive")
        _check(0 < q <= 1, "q must lie in (0, 1]")
        _check(d >= 4, "d must be at least 4")
        a0 = 2 * (d - 2) * m * m / d * (2 * q + d - 4) / (2 * q + d - 2)
        return CutoffReport(a0, a0 * (1 - omega), "closed_form", ELL_ROUTE,
                            omega, d, {"m": m, "q": q},
                            f"ball(m={m:g}, dim={d})", f"power(q={q:g})")
    if name == "kotz_power":
        r = params.pop("r")
        s = params.pop("s")
        nu = params.pop("nu")
        q = params.pop("q")
        d = int(params.pop("d"))
        omega = params.pop("omega", 0.0)
        _no_extra(name, params)
        _check(r > 0 and s > 0 and nu > 0, "r, s, nu must be positive")
        _check(0 < q <= 1, "q must lie in (0, 1]")
        _check(d >= 4, "d must be at least 4")
        _check((q - 2) / s + nu > 0,
               "(q-2)/s + nu must be positive for a finite denominator moment")
        a0 = (2 * (d - 2) / d
              * gamma_fn((q - 1) / s + nu) / gamma_fn((q - 2) / s + nu)
              * r ** (-1.0 / s))
        return CutoffReport(a0, a0 * (1 - omega), "closed_form", ELL_ROUTE,
                            omega, d, {"r": r, "s": s, "nu": nu, "q": q},
                            f"kotz(r={r:g}, s={s:g}, nu={nu:g}, dim={d})",
                            f"power(q={q:g})")
    raise ValueError(f"unknown closed form {name!r}")


def _check(cond, msg):
    if not cond:
        raise ValueError(msg)


def _no_extra(name, params):
    if params:
        raise ValueError(f"{name} got unexpected parameters {sorted(params)}")


def power_cutoff_table(model, q_grid):
    """a0(q) = (2(d-2)/d) E[W^{q-1}]/E[W^{q-2}] over a grid of power-loss
    exponents; asserts the table is non-decreasing in q."""
    d = model.dim
    if d < 4:
        raise ValueError(f"cut-off requires dim >= 4, got {d}")
    q_grid = np.asarray(sorted(float(q) for q in q_grid))
    if np.any((q_grid <= 0) | (q_grid > 1)):
        raise ValueError("power exponents must lie in (0, 1]")
    a0 = np.array([2 * (d - 2) / d * model.moment(q - 1) / model.moment(q - 2)
                   for q in q_grid])
    drops = np.diff(a0) < -1e-12 * np.abs(a0[:-1])
    if drops.any():
        i = int(np.argmax(drops))
        raise ValueError(
            f"a0(q) decreased between q={q_grid[i]:g} and q={q_grid[i + 1]:g}")
    return q_grid, a0
