"""Frequentist risk of equivariant estimators h(||X||^2) X under balanced
losses.

At theta != 0 the d-dimensional expectation collapses to a double integral
over (t, w) = (cosine of the angle between theta and X, ||X||^2); the inner
t-integral is evaluated with a Gauss-Jacobi rule whose weight matches the
(1-t^2)^{(d-3)/2} factor of the joint density, and the outer w-integral by an
adaptive Gauss-Kronrod rule.  A z-substitution variant of the inner rule
keeps full accuracy when a finite-support generator (uniform ball) cuts the
integration region.  theta = 0 degenerates to a 1-D integral against the
W-law.
"""

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.special import gamma as gamma_fn

from . import _fastpath
from ._quad import IntegrationError, integrate_power_endpoint, jacobi_rule
from .losses import RHO_FORM

MC_CHUNK = 1 << 18


class RiskToleranceError(IntegrationError):
    """Quadrature failed to meet the requested tolerance; the best estimate
    and its achieved error ride along on the exception."""


def _psi_constant(dim):
    return math.pi ** ((dim - 1) / 2) / gamma_fn((dim - 1) / 2)


class TWDensity:
    """Joint law of T = theta'X / (||theta|| ||X||) and W = ||X||^2 for
    ||theta|| = lam > 0."""

    def __init__(self, model, lam):
        lam = float(lam)
        if lam <= 0:
            raise ValueError("the (T, W) density requires lam > 0; "
                             "lam = 0 is handled by the 1-D origin path")
        if model.dim < 2:
            raise ValueError("the (T, W) reduction requires dim >= 2")
        self.model = model
        self.lam = lam
        self.const = _psi_constant(model.dim)

    def pdf(self, t, w):
        t = np.asarray(t, dtype=float)
        w = np.asarray(w, dtype=float)
        d = self.model.dim
        inside = (np.abs(t) < 1) & (w > 0)
        ts = np.where(inside, t, 0.0)
        ws = np.where(inside, w, 1.0)
        z = np.maximum(ws + self.lam**2 - 2 * self.lam * ts * np.sqrt(ws), 0.0)
        val = (self.const * ws ** (d / 2 - 1) * (1 - ts * ts) ** ((d - 3) / 2)
               * self.model.gen(z))
        out = np.where(inside, val, 0.0)
        return out if out.ndim else float(out)

    def total_mass(self, tol=1e-9):
        """Double integral of the density; equals 1 for a proper model."""
        val, _ = _integrate_tw(self.model, None, self.lam,
                               loss_eval=lambda fit, prec: np.ones_like(prec),
                               tol=tol)
        return val


# -- (t, w) quadrature core ------------------------------------------------


def _w_limits(model, lam):
    # W = ||X||^2 lives within (lam -/+ ||X - theta||)^2 and ||X - theta||^2
    # carries no mass beyond the truncation quantile
    rad = math.sqrt(model.w_upper())
    w_lo = max(0.0, lam - rad) ** 2
    w_hi = (lam + rad) ** 2
    pts = [(rad - lam) ** 2, (rad + lam) ** 2, lam * lam]
    return w_lo, w_hi, pts


def _python_outer(model, est, lam, n_t, loss_eval):
    """Numpy fallback for the outer integrand; also the only path for
    user-defined models/losses/multipliers.

    When the z-range (sqrt(w) -/+ lam)^2 pokes past the generator's effective
    support, the inner integral switches from the symmetric t-rule to a
    Jacobi rule in z over [a_z, z_cut], which both handles the uniform-ball
    support edge exactly and keeps the nodes on the generator's mass when
    lam is large.
    """
    d = model.dim
    al = (d - 3) / 2
    t_nodes, t_wts = jacobi_rule(n_t, al, al)
    c_nodes, c_wts = jacobi_rule(n_t, 0.0, al)
    cpsi = _psi_constant(d)
    lam2 = lam * lam
    b = est.shrink_b if est is not None else 0.0
    mult = est.multiplier if est is not None else None
    z_cut = model.w_upper()

    def outer(w):
        if w <= 0.0:
            return 0.0
        sq = math.sqrt(w)
        shr = b * float(mult.shrink_factor(w)) if b else 0.0
        fit = shr * shr * w
        h = 1.0 - shr
        h2w = h * h * w
        two_lam_sq = 2.0 * lam * sq
        a_z = (sq - lam) ** 2
        b_z = (sq + lam) ** 2
        if a_z >= z_cut:
            return 0.0
        if b_z > z_cut:
            half = (z_cut - a_z) / 2.0
            z = a_z + half * (c_nodes + 1.0)
            t = (w + lam2 - z) / two_lam_sq
            prec = lam2 + h2w - two_lam_sq * h * t
            vals = loss_eval(fit, prec) * (b_z - z) ** al * model.gen(z)
            scale = half ** (al + 1) / two_lam_sq ** (2 * al + 1)
            return cpsi * w ** (d / 2 - 1) * scale * float(np.dot(c_wts, vals))
        z = np.maximum(w + lam2 - two_lam_sq * t_nodes, 1e-300)
        fz = model.gen(z)
        prec = lam2 + h2w - two_lam_sq * h * t_nodes
        vals = loss_eval(fit, prec) * fz
        return cpsi * w ** (d / 2 - 1) * float(np.dot(t_wts, vals))

    return outer, ()


def _outer_integrand(model, bl, est, lam, n_t):
    """Backend-aware outer integrand: compiled kernel when the configuration
    is encodable, numpy fallback otherwise."""
    d = model.dim
    al = (d - 3) / 2
    t_nodes, t_wts = jacobi_rule(n_t, al, al)
    c_nodes, c_wts = jacobi_rule(n_t, 0.0, al)
    compiled = _fastpath.compiled_outer_integrand(
        model, bl, est, lam, _psi_constant(d), t_nodes, t_wts,
        c_nodes, c_wts)
    if compiled is not None:
        return compiled
    return _python_outer(model, est, lam, n_t, bl.combine)


def _integrate_tw(model, est, lam, bl=None, loss_eval=None, tol=1e-7,
                  n_t=48, n_t_max=768):
    """Nested quadrature against the (T, W) law, with the inner rule refined
    by doubling until two full passes agree within tol/2."""
    w_lo, w_hi, pts = _w_limits(model, lam)
    prev = None
    n = n_t
    while True:
        if bl is not None:
            f, args = _outer_integrand(model, bl, est, lam, n)
        else:
            f, args = _python_outer(model, est, lam, n, loss_eval)
        # the outer rule runs an order tighter than the inner-doubling
        # threshold so its own noise cannot masquerade as inner error
        with np.errstate(over="ignore", invalid="ignore", divide="ignore",
                         under="ignore"):
            val, qerr = _quad_args(f, w_lo, w_hi, args, epsabs=tol / 10,
                                   epsrel=1e-10, points=pts)
        if abs(qerr) > 100 * max(tol, 1e-12 * abs(val)):
            raise RiskToleranceError(
                f"outer quadrature error {qerr:.3e} exceeds tolerance "
                f"(likely a divergent or near-divergent risk integral)",
                value=val, error=abs(qerr))
        if prev is not None:
            inner_gap = abs(val - prev)
            if inner_gap <= tol / 2:
                return val, inner_gap + abs(qerr)
            if n >= n_t_max:
                raise RiskToleranceError(
                    f"inner rule not converged at {n} nodes "
                    f"(gap {inner_gap:.3e} > {tol / 2:.3e})",
                    value=val, error=inner_gap + abs(qerr))
        prev = val
        n *= 2


def _quad_args(f, a, b, args, epsabs, epsrel, points):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        pts = [p for p in points if a < p < b] or None
        return quad(f, a, b, args=args, epsabs=epsabs, epsrel=epsrel,
                    limit=400, points=pts)


# -- risk operations ---------------------------------------------------------


def risk_quadrature(model, bl, est, lam, tol=1e-7, full_output=False):
    """Frequentist risk at ||theta|| = lam by exact 2-D quadrature."""
    lam = float(lam)
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    if lam < 1e-8:  # the (T, W) reduction needs theta != 0; risk is O(lam^2)
        return risk_at_origin(model, bl, est, tol=tol, full_output=full_output)
    if model.dim < 2:
        raise ValueError("risk quadrature requires dim >= 2")
    val, err = _integrate_tw(model, est, lam, bl=bl, tol=tol)
    return (val, err) if full_output else val


def _origin_alpha0(model, bl, est):
    base = model.dim / 2 - 1 + model.gen_pow0
    shape = bl.shape
    singular = est.multiplier.singular_at_zero
    if singular is None:
        singular = True  # unknown user multiplier: assume the worst
    if est.shrink_b > 0 and singular:
        return base - shape.value_pow_inf
    return base + shape.value_pow0


def risk_at_origin(model, bl, est, tol=1e-9, full_output=False):
    """Risk at theta = 0, where the loss depends on X only through W."""
    b = est.shrink_b
    mult = est.multiplier

    def integrand(w):
        shr = b * mult.shrink_factor(w) if b else 0.0
        fit = shr * shr * w
        h = 1.0 - shr
        return float(bl.combine(fit, h * h * w)) * model.w_pdf(w)

    alpha0 = _origin_alpha0(model, bl, est)
    if alpha0 <= -1.0:
        raise IntegrationError(
            "risk at the origin diverges for this model/loss/estimator "
            f"(endpoint exponent {alpha0:g})")
    with np.errstate(over="ignore", invalid="ignore", divide="ignore",
                     under="ignore"):
        val, err = integrate_power_endpoint(
            integrand, model.w_upper(), alpha0, epsrel=1e-11, epsabs=tol)
    return (val, err) if full_output else val


def benchmark_risk(model, bl):
    """Constant risk of the benchmark estimator X: (1-omega) E[rho(W)] for
    the rho form, E[ell((1-omega) W)] for the ell form."""
    shape = bl.shape
    omega = bl.omega
    if bl.form == RHO_FORM:
        return (1 - omega) * model.expect_w(shape.value,
                                            phi_pow0=shape.value_pow0)
    return model.expect_w(lambda w: shape.value((1 - omega) * w),
                          phi_pow0=shape.value_pow0)


def _lam_stream_id(lam):
    # one RNG stream per (lambda, seed): fold the float's bit pattern in
    return int(np.float64(lam).view(np.uint64))


def risk_mc(model, bl, est, lam, n, seed, direction=None):
    """Monte Carlo risk estimate and standard error at theta = lam * e1
    (or lam * direction).  Deterministic per (lam, seed)."""
    n = int(n)
    if n < 100:
        raise ValueError("risk_mc requires n >= 100")
    d = model.dim
    theta = np.zeros(d)
    if direction is None:
        theta[0] = lam
    else:
        direction = np.asarray(direction, dtype=float)
        theta = lam * direction / np.linalg.norm(direction)
    rng = np.random.default_rng(
        np.random.SeedSequence([int(seed), _lam_stream_id(lam)]))

    b = est.shrink_b
    mult = est.multiplier
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < n:
        m = min(MC_CHUNK, n - done)
        x = model.sample_with_rng(theta, m, rng)
        w = np.sum(x * x, axis=1)
        shr = b * mult.shrink_factor(w) if b else np.zeros_like(w)
        fit = shr * shr * w
        diff = (1.0 - shr)[:, None] * x - theta
        prec = np.sum(diff * diff, axis=1)
        vals = bl.combine(fit, prec)
        total += float(vals.sum())
        total_sq += float((vals * vals).sum())
        done += m
    mean = total / n
    var = max(total_sq / n - mean * mean, 0.0) * n / (n - 1)
    return mean, math.sqrt(var / n)


@dataclass
class RiskCurve:
    """Risk along a grid of ||theta|| values with method metadata."""

    lambdas: np.ndarray
    values: np.ndarray
    se: np.ndarray
    method: str
    meta: dict = field(default_factory=dict)

    def rows(self):
        for lam, val, se in zip(self.lambdas, self.values, self.se):
            yield lam, val, se


def risk_curve(model, bl, est, lambdas, method="quadrature", mc_n=10**6,
               seed=0, tol=1e-7, threads=None):
    """Risk over a lambda grid; points are evaluated independently and
    per-point failures are retained as NaN with the error recorded."""
    lambdas = np.asarray(sorted(float(v) for v in lambdas))
    if lambdas.size == 0:
        raise ValueError("lambda grid must be non-empty")
    if np.any(lambdas < 0):
        raise ValueError("lambda values must be nonnegative")
    if method not in ("quadrature", "mc"):
        raise ValueError("method must be 'quadrature' or 'mc'")

    errors = {}

    def one(lam):
        if method == "quadrature":
            return risk_quadrature(model, bl, est, lam, tol=tol), math.nan
        return risk_mc(model, bl, est, lam, mc_n, seed)

    def safe(i):
        try:
            return one(lambdas[i])
        except Exception as exc:  # retain partial results
            errors[float(lambdas[i])] = str(exc)
            return math.nan, math.nan

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(safe, range(lambdas.size)))
    else:
        results = [safe(i) for i in range(lambdas.size)]

    values = np.array([r[0] for r in results])
    ses = np.array([r[1] for r in results])
    meta = {"model": model.describe(), "loss": repr(bl.shape),
            "form": bl.form, "omega": bl.omega, "estimator": est.describe(),
            "backend": _fastpath.active_backend()}
    if method == "mc":
        meta.update({"mc_n": mc_n, "seed": seed})
    if errors:
        meta["errors"] = errors
    return RiskCurve(lambdas, values, ses, method, meta)


def default_lambda_grid(lo=0.0, hi=8.0, count=33):
    return np.linspace(lo, hi, count)
