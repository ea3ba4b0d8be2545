"""Spherically symmetric model densities f(||x - theta||^2).

Each model exposes the generator f, the radial law of R = ||X - theta||, the
law of W = R^2, closed-form moments where available, exact samplers, and
weight-tilted variants.  All pdf/moment queries are pure; samplers derive a
fresh RNG from (seed, stream).
"""

import math

import numpy as np
from scipy.special import gamma as gamma_fn, gammainc

from ._quad import (IntegrationError, doubling_upper_point,
                    integrate_power_endpoint, integrate_with_tail_doubling)

TAIL_MASS = 1e-12


class DivergentMomentError(ValueError):
    """The requested moment E[W^p] does not exist for the model."""


def _check_point(x, dim, name):
    x = np.asarray(x, dtype=float)
    if x.shape != (dim,):
        raise ValueError(f"{name} must be a vector of length {dim}, got shape {x.shape}")
    return x


def _unit_directions(rng, n, dim):
    z = rng.standard_normal((n, dim))
    norms = np.linalg.norm(z, axis=1)
    # resample the (measure-zero) exact-zero rows rather than dividing by 0
    bad = norms == 0.0
    while bad.any():
        z[bad] = rng.standard_normal((int(bad.sum()), dim))
        norms = np.linalg.norm(z, axis=1)
        bad = norms == 0.0
    return z / norms[:, None]


def sample_sphere(theta, radius, n, rng):
    """n draws uniform on the sphere of given radius centered at theta."""
    theta = np.asarray(theta, dtype=float)
    return theta + radius * _unit_directions(rng, n, theta.size)


def sample_ball(theta, radius, n, rng):
    """n draws uniform on the closed ball of given radius centered at theta."""
    theta = np.asarray(theta, dtype=float)
    d = theta.size
    r = radius * rng.random(n) ** (1.0 / d)
    return theta + r[:, None] * _unit_directions(rng, n, d)


class ModelDensity:
    """Base class: a spherically symmetric law on R^d with Lebesgue density
    f(||x - theta||^2).

    Subclasses provide the smooth part of the generator via `_gen_smooth` and
    `gen_pow0` so that f(t) = t^gen_pow0 * _gen_smooth(t) with a finite,
    generically nonzero smooth part at t = 0.
    """

    kind = "base"
    gen_pow0 = 0.0

    def __init__(self, dim):
        dim = int(dim)
        if dim < 1:
            raise ValueError(f"dim must be a positive integer, got {dim}")
        self.dim = dim

    # -- generator and derived laws ------------------------------------

    def _gen_smooth(self, t):
        raise NotImplementedError

    def gen(self, t):
        """Generator f(t) of the density f(||x - theta||^2), vectorized."""
        t = np.asarray(t, dtype=float)
        if self.gen_pow0 == 0.0:
            out = self._gen_smooth(t)
        else:
            safe = np.where(t > 0, t, 1.0)
            out = safe ** self.gen_pow0 * self._gen_smooth(t)
            out = np.where(t > 0, out, np.inf if self.gen_pow0 < 0 else 0.0)
        return out if out.ndim else float(out)

    def density_at(self, x, theta):
        """Density value f(||x - theta||^2) at the point x."""
        x = _check_point(x, self.dim, "x")
        theta = _check_point(theta, self.dim, "theta")
        return float(self.gen(float(np.sum((x - theta) ** 2))))

    @property
    def _w_const(self):
        d = self.dim
        return math.pi ** (d / 2) / gamma_fn(d / 2)

    def w_pdf(self, w):
        """Density of W = ||X - theta||^2 (translation invariant)."""
        w = np.asarray(w, dtype=float)
        if np.any(w < 0):
            raise ValueError("w must be nonnegative")
        d = self.dim
        with np.errstate(divide="ignore", invalid="ignore"):
            expo = d / 2 - 1 + self.gen_pow0
            base = np.where(w > 0, w, 1.0) ** expo * self._gen_smooth(w)
            at0 = np.inf if expo < 0 else (self._gen_smooth(w) if expo == 0 else 0.0)
            out = self._w_const * np.where(w > 0, base, at0)
        return out if out.ndim else float(out)

    def radial_pdf(self, r):
        """Density of R = ||X - theta||."""
        r = np.asarray(r, dtype=float)
        if np.any(r < 0):
            raise ValueError("r must be nonnegative")
        out = 2.0 * r * self.w_pdf(r * r)
        return out if out.ndim else float(out)

    def w_cdf(self, w):
        raise NotImplementedError

    def radial_cdf(self, r):
        r = np.asarray(r, dtype=float)
        return self.w_cdf(r * r)

    def w_support(self):
        """(0, upper) support of W; upper may be inf."""
        return 0.0, math.inf

    def _w_scale(self):
        """Rough scale of W used to seed the truncation search."""
        return float(self.dim)

    def w_upper(self, tail=TAIL_MASS):
        """Truncation point for quadrature over the W-law, by doubling search
        on the cdf until mass 1 - tail is covered."""
        lo, hi = self.w_support()
        if math.isfinite(hi):
            return hi
        return doubling_upper_point(lambda w: float(self.w_cdf(w)),
                                    start=self._w_scale(), tail=tail)

    # -- moments and expectations --------------------------------------

    def _moment_lower_exponent(self):
        """E[W^p] exists iff p is above this threshold (model-exact)."""
        return -(self.dim / 2 + self.gen_pow0)

    def moment(self, p):
        """E[W^p] by closed form.  Raises DivergentMomentError when the
        moment does not exist."""
        p = float(p)
        if p == 0.0:
            return 1.0
        if p <= self._moment_lower_exponent():
            raise DivergentMomentError(
                f"E[W^{p:g}] diverges for {self.describe()} "
                f"(requires p > {self._moment_lower_exponent():g})")
        return self._moment_finite(p)

    def _moment_finite(self, p):
        raise NotImplementedError

    def expect_w(self, phi, phi_pow0=0.0, epsrel=1e-11, points=None):
        """E[phi(W)] by adaptive quadrature against the W-density.

        phi_pow0 is the power behaviour of phi near 0 (e.g. q - 1 for the
        derivative of a power loss); it steers endpoint handling.
        """
        d = self.dim
        alpha0 = d / 2 - 1 + self.gen_pow0 + phi_pow0
        upper = self.w_upper()
        f = lambda w: phi(w) * self.w_pdf(w)
        lo, hi = self.w_support()
        if math.isfinite(hi):
            val, _ = integrate_power_endpoint(f, upper, alpha0, epsrel=epsrel,
                                              points=points)
            return val
        val, _ = integrate_with_tail_doubling(f, upper, alpha0, epsrel=epsrel,
                                              points=points)
        return val

    # -- sampling -------------------------------------------------------

    def _sample_radius(self, n, rng):
        raise NotImplementedError

    def sample_with_rng(self, theta, n, rng):
        """n i.i.d. draws theta + R*U with a caller-owned RNG."""
        theta = _check_point(theta, self.dim, "theta")
        n = int(n)
        if n < 1:
            raise ValueError("n must be >= 1")
        r = self._sample_radius(n, rng)
        u = _unit_directions(rng, n, self.dim)
        return theta + r[:, None] * u

    def sample(self, theta, n, seed, stream=0):
        """n i.i.d. draws, deterministic for fixed (seed, stream)."""
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(stream)]))
        return self.sample_with_rng(theta, n, rng)

    # -- tilting ---------------------------------------------------------

    def tilted(self, weight, weight_pow0=0.0):
        """Normalized tilt of the law by a positive weight on t = ||x-theta||^2.

        Returns a TiltedLaw with generator weight(t) f(t) / K and exposes the
        same W-law/radial-law queries; the normalizer K is an attribute.
        """
        try:
            k = self.expect_w(weight, phi_pow0=weight_pow0)
        except IntegrationError as exc:
            raise IntegrationError(f"non-integrable tilt: {exc}") from exc
        if not np.isfinite(k) or k <= 0:
            raise IntegrationError(f"non-integrable tilt (K = {k!r})")
        return TiltedLaw(self, weight, weight_pow0, k)

    # -- misc -------------------------------------------------------------

    def describe(self):
        return f"{self.kind}(dim={self.dim})"

    def kernel_encoding(self):
        """Encoding consumed by the compiled quadrature kernel, or None when
        only the generic path applies."""
        return None

    def __repr__(self):
        return self.describe()


class NormalModel(ModelDensity):
    """Standard multivariate normal: f(t) = (2 pi)^{-d/2} e^{-t/2}."""

    kind = "normal"

    def __init__(self, dim):
        super().__init__(dim)
        self._coef = (2 * math.pi) ** (-self.dim / 2)

    def _gen_smooth(self, t):
        return self._coef * np.exp(-0.5 * np.asarray(t, dtype=float))

    def w_cdf(self, w):
        w = np.asarray(w, dtype=float)
        return gammainc(self.dim / 2, np.maximum(w, 0.0) / 2)

    def _moment_lower_exponent(self):
        return -self.dim / 2

    def _moment_finite(self, p):
        d = self.dim
        return 2.0 ** p * gamma_fn(d / 2 + p) / gamma_fn(d / 2)

    def _w_scale(self):
        return 2.0 * self.dim

    def _sample_radius(self, n, rng):
        return np.sqrt(rng.chisquare(self.dim, n))

    def kernel_encoding(self):
        return {"family": "expmix",
                "coef": np.array([self._coef]),
                "rate": np.array([0.5])}


class KotzModel(ModelDensity):
    """Kotz-type generator f(t) = c_d t^{s nu - d/2} e^{-r t^s}.

    W^s = ||X - theta||^{2s} is Gamma(nu, rate=r), which gives closed moments
    and an exact radius sampler.
    """

    kind = "kotz"

    def __init__(self, r, s, nu, dim):
        super().__init__(dim)
        if r <= 0 or s <= 0 or nu <= 0:
            raise ValueError("kotz parameters r, s, nu must all be positive")
        self.r = float(r)
        self.s = float(s)
        self.nu = float(nu)
        d = self.dim
        self.norm_const = (self.s * gamma_fn(d / 2) * self.r ** self.nu
                           / (math.pi ** (d / 2) * gamma_fn(self.nu)))
        self.gen_pow0 = self.s * self.nu - d / 2

    def _gen_smooth(self, t):
        t = np.asarray(t, dtype=float)
        return self.norm_const * np.exp(-self.r * np.maximum(t, 0.0) ** self.s)

    def w_cdf(self, w):
        w = np.asarray(w, dtype=float)
        return gammainc(self.nu, self.r * np.maximum(w, 0.0) ** self.s)

    def _moment_lower_exponent(self):
        return -self.s * self.nu

    def _moment_finite(self, p):
        return gamma_fn(self.nu + p / self.s) / (gamma_fn(self.nu) * self.r ** (p / self.s))

    def _w_scale(self):
        return 2.0 * (self.nu / self.r) ** (1.0 / self.s) + 1.0

    def _sample_radius(self, n, rng):
        g = rng.gamma(self.nu, 1.0 / self.r, n)
        return g ** (1.0 / (2.0 * self.s))

    def describe(self):
        return f"kotz(r={self.r:g}, s={self.s:g}, nu={self.nu:g}, dim={self.dim})"

    def kernel_encoding(self):
        return {"family": "kotz",
                "coef": self.norm_const, "pow0": self.gen_pow0,
                "rate": self.r, "power": self.s}


class UniformBallModel(ModelDensity):
    """Uniform law on the ball of radius m centered at theta."""

    kind = "ball"

    def __init__(self, m, dim):
        super().__init__(dim)
        if m <= 0:
            raise ValueError("ball radius m must be positive")
        self.m = float(m)
        d = self.dim
        self.norm_const = gamma_fn(d / 2 + 1) / (self.m ** d * math.pi ** (d / 2))

    def _gen_smooth(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t <= self.m ** 2, self.norm_const, 0.0)

    def w_cdf(self, w):
        w = np.asarray(w, dtype=float)
        return np.clip(np.maximum(w, 0.0) / self.m ** 2, 0.0, 1.0) ** (self.dim / 2)

    def w_support(self):
        return 0.0, self.m ** 2

    def _moment_lower_exponent(self):
        return -self.dim / 2

    def _moment_finite(self, p):
        d = self.dim
        return self.m ** (2 * p) * (d / 2) / (d / 2 + p)

    def _sample_radius(self, n, rng):
        return self.m * rng.random(n) ** (1.0 / self.dim)

    def describe(self):
        return f"ball(m={self.m:g}, dim={self.dim})"

    def kernel_encoding(self):
        return {"family": "ball", "coef": self.norm_const, "m2": self.m ** 2}


class ScaleMixtureModel(ModelDensity):
    """Finite scale mixture of normals: X | V=v_i ~ N(theta, v_i I) with
    probability p_i.  Continuous mixing laws are approximated by a
    user-chosen quantile discretization before construction."""

    kind = "mix"

    def __init__(self, components, dim):
        super().__init__(dim)
        comps = [(float(v), float(p)) for v, p in components]
        if not comps:
            raise ValueError("mixture needs at least one (variance, weight) pair")
        if any(v <= 0 for v, _ in comps):
            raise ValueError("mixture variances must be positive")
        if any(p <= 0 for _, p in comps):
            raise ValueError("mixture weights must be positive")
        total = sum(p for _, p in comps)
        self.variances = np.array([v for v, _ in comps])
        self.weights = np.array([p / total for _, p in comps])

    def _gen_smooth(self, t):
        t = np.asarray(t, dtype=float)[..., None]
        d = self.dim
        coefs = self.weights * (2 * math.pi * self.variances) ** (-d / 2)
        out = np.sum(coefs * np.exp(-0.5 * t / self.variances), axis=-1)
        return out

    def w_cdf(self, w):
        w = np.asarray(w, dtype=float)[..., None]
        out = np.sum(self.weights * gammainc(self.dim / 2,
                                             np.maximum(w, 0.0) / (2 * self.variances)),
                     axis=-1)
        return out

    def _moment_lower_exponent(self):
        return -self.dim / 2

    def _moment_finite(self, p):
        d = self.dim
        chi_mom = 2.0 ** p * gamma_fn(d / 2 + p) / gamma_fn(d / 2)
        return float(np.sum(self.weights * self.variances ** p) * chi_mom)

    def _w_scale(self):
        return 2.0 * self.dim * float(np.max(self.variances))

    def _sample_radius(self, n, rng):
        comp = rng.choice(self.variances.size, size=n, p=self.weights)
        return np.sqrt(self.variances[comp] * rng.chisquare(self.dim, n))

    def describe(self):
        parts = ",".join(f"{v:g}:{p:g}" for v, p in zip(self.variances, self.weights))
        return f"mix({parts}, dim={self.dim})"

    def kernel_encoding(self):
        d = self.dim
        coef = self.weights * (2 * math.pi * self.variances) ** (-d / 2)
        return {"family": "expmix",
                "coef": np.ascontiguousarray(coef),
                "rate": np.ascontiguousarray(0.5 / self.variances)}


class TiltedLaw(ModelDensity):
    """Spherical law with generator weight(t) f(t) / K over a base model.

    Exposes the same W-law / radial-law queries as the base; moments fall back
    to quadrature and sampling to inverse-cdf interpolation on the W-law.
    """

    kind = "tilted"

    def __init__(self, base, weight, weight_pow0, normalizer):
        super().__init__(base.dim)
        self.base = base
        self.weight = weight
        self.gen_pow0 = base.gen_pow0 + weight_pow0
        self._weight_pow0 = weight_pow0
        self.K = float(normalizer)
        self._upper = None
        self._inv_cdf = None

    def gen(self, t):
        t = np.asarray(t, dtype=float)
        out = self.weight(t) * self.base.gen(t) / self.K
        return out if out.ndim else float(out)

    def w_pdf(self, w):
        w = np.asarray(w, dtype=float)
        if np.any(w < 0):
            raise ValueError("w must be nonnegative")
        out = self.weight(w) * self.base.w_pdf(w) / self.K
        return out if out.ndim else float(out)

    def radial_pdf(self, r):
        r = np.asarray(r, dtype=float)
        out = 2.0 * r * self.w_pdf(r * r)
        return out if out.ndim else float(out)

    def w_support(self):
        return self.base.w_support()

    def w_upper(self, tail=TAIL_MASS):
        lo, hi = self.w_support()
        if math.isfinite(hi):
            return hi
        if self._upper is None:
            u = self.base.w_upper(tail)
            for _ in range(60):
                tail_mass, _ = integrate_power_endpoint(
                    lambda w: self.w_pdf(w + u), 2.0 * u, alpha0=1.0, epsrel=1e-8)
                if tail_mass <= tail:
                    break
                u *= 2.0
            self._upper = u
        return self._upper

    def w_cdf(self, w):
        scalar = np.isscalar(w)
        w = np.atleast_1d(np.asarray(w, dtype=float))
        alpha0 = self.base.dim / 2 - 1 + self.gen_pow0
        out = np.array([
            integrate_power_endpoint(self.w_pdf, min(wi, self.w_upper() * 2),
                                     alpha0, epsrel=1e-10)[0] if wi > 0 else 0.0
            for wi in w])
        return float(out[0]) if scalar else out

    def moment(self, p):
        p = float(p)
        if p == 0.0:
            return 1.0
        alpha0 = self.dim / 2 - 1 + self.gen_pow0 + p
        if alpha0 <= -1.0:
            raise DivergentMomentError(
                f"E[W^{p:g}] diverges for the tilted law (endpoint exponent {alpha0:g})")
        try:
            return self.base.expect_w(lambda w: self.weight(w) * w ** p,
                                      phi_pow0=self._weight_pow0 + p) / self.K
        except IntegrationError as exc:
            raise DivergentMomentError(str(exc)) from exc

    def expect_w(self, phi, phi_pow0=0.0, epsrel=1e-11, points=None):
        return self.base.expect_w(lambda w: self.weight(w) * phi(w),
                                  phi_pow0=self._weight_pow0 + phi_pow0,
                                  epsrel=epsrel, points=points) / self.K

    def _sample_radius(self, n, rng):
        if self._inv_cdf is None:
            upper = self.w_upper()
            grid = np.unique(np.concatenate([
                np.geomspace(upper * 1e-9, upper, 4001), [0.0]]))
            pdf = self.w_pdf(grid)
            pdf = np.where(np.isfinite(pdf), pdf, 0.0)
            cdf = np.concatenate([[0.0], np.cumsum(np.diff(grid) * 0.5 * (pdf[1:] + pdf[:-1]))])
            cdf /= cdf[-1]
            self._inv_cdf = (cdf, grid)
        cdf, grid = self._inv_cdf
        return np.sqrt(np.interp(rng.random(n), cdf, grid))

    def describe(self):
        return f"tilted({self.base.describe()}, K={self.K:.6g})"


# -- factories and CLI parsing ------------------------------------------


def normal(dim):
    return NormalModel(dim)


def kotz(r, s, nu, dim):
    return KotzModel(r, s, nu, dim)


def uniform_ball(m, dim):
    return UniformBallModel(m, dim)


def scale_mixture(components, dim):
    return ScaleMixtureModel(components, dim)


def parse_model(spec, dim):
    """Build a model from its CLI string.

    Grammar: normal | kotz:r=<f>,s=<f>,nu=<f> | ball:m=<f> | mix:v1:w1,v2:w2,...
    """
    spec = spec.strip()
    if spec == "normal":
        return normal(dim)
    head, _, rest = spec.partition(":")
    if head == "kotz":
        params = _parse_kv(rest, {"r", "s", "nu"})
        return kotz(params["r"], params["s"], params["nu"], dim)
    if head == "ball":
        params = _parse_kv(rest, {"m"})
        return uniform_ball(params["m"], dim)
    if head == "mix":
        pieces = rest.split(",") if rest else []
        comps = []
        for piece in pieces:
            try:
                v, p = piece.split(":")
                comps.append((float(v), float(p)))
            except ValueError as exc:
                raise ValueError(f"bad mixture component {piece!r}; "
                                 f"expected v:w") from exc
        if not comps:
            raise ValueError("mix model needs at least one v:w component")
        return scale_mixture(comps, dim)
    raise ValueError(f"unknown model spec {spec!r}")


def _parse_kv(text, expected):
    params = {}
    for piece in text.split(","):
        if not piece:
            continue
        try:
            key, val = piece.split("=")
            params[key.strip()] = float(val)
        except ValueError as exc:
            raise ValueError(f"bad parameter {piece!r}; expected key=value") from exc
    missing = expected - set(params)
    if missing:
        raise ValueError(f"missing parameters: {sorted(missing)}")
    extra = set(params) - expected
    if extra:
        raise ValueError(f"unknown parameters: {sorted(extra)}")
    return params
