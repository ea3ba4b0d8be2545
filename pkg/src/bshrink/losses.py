"""Scalar loss shapes, the two balanced loss forms, and numerical
certification of the concave-increasing conditions they must satisfy.

A loss shape is a scalar function of the squared distance t >= 0 with value,
first and second derivatives (analytic for builtins, central differences for
user-defined shapes).  The goodness-of-fit/precision mix enters through
BalancedLoss, either as a weighted sum of two shape evaluations or as one
shape evaluated at the weighted sum of squared distances.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


class LossFn:
    """Scalar loss shape with derivatives and endpoint metadata.

    deriv_pow0 / value_pow0 describe the power behaviour near 0 (t^{q-1} and
    t^q for the power loss, exponents 0 and 1 otherwise); quadrature uses them
    to handle integrable endpoint singularities exactly.
    """

    def __init__(self, name, value, deriv=None, deriv2=None,
                 rho_prime_at_zero=None, deriv_pow0=0.0, value_pow0=1.0,
                 value_pow_inf=1.0, params=None, kernel_id=None):
        self.name = name
        self.params = dict(params or {})
        self._value = value
        self._deriv = deriv if deriv is not None else self._numeric_deriv
        self._deriv2 = deriv2 if deriv2 is not None else self._numeric_deriv2
        if rho_prime_at_zero is None:
            rho_prime_at_zero = self._estimate_slope_at_zero()
        self.rho_prime_at_zero = float(rho_prime_at_zero)
        self.deriv_pow0 = float(deriv_pow0)
        self.value_pow0 = float(value_pow0)
        # growth exponent at infinity; concavity with value(0)=0 caps it at 1
        self.value_pow_inf = float(value_pow_inf)
        self.kernel_id = kernel_id

    def value(self, t):
        out = self._value(np.asarray(t, dtype=float))
        return out if np.ndim(out) else float(out)

    def deriv(self, t):
        out = self._deriv(np.asarray(t, dtype=float))
        return out if np.ndim(out) else float(out)

    def deriv2(self, t):
        out = self._deriv2(np.asarray(t, dtype=float))
        return out if np.ndim(out) else float(out)

    def _numeric_deriv(self, t):
        t = np.asarray(t, dtype=float)
        h = 1e-6 * np.maximum(1.0, np.abs(t))
        h = np.minimum(h, np.where(t > 0, t / 2, h))  # stay inside t >= 0
        return (self._value(t + h) - self._value(t - h)) / (2 * h)

    def _numeric_deriv2(self, t):
        t = np.asarray(t, dtype=float)
        h = 1e-4 * np.maximum(1.0, np.abs(t))
        h = np.minimum(h, np.where(t > 0, t / 2, h))
        return (self._value(t + h) - 2 * self._value(t) + self._value(t - h)) / (h * h)

    def _estimate_slope_at_zero(self):
        # one-sided difference at 1e-6 with one Richardson step
        h = 1e-6
        v0 = float(self._value(np.float64(0.0)))
        d1 = (float(self._value(np.float64(h))) - v0) / h
        d2 = (float(self._value(np.float64(h / 2))) - v0) / (h / 2)
        est = 2 * d2 - d1
        if not np.isfinite(est) or est > 1e12:
            return math.inf
        return est

    def normalized(self):
        """Same shape rescaled so the slope at zero equals one."""
        c = self.rho_prime_at_zero
        if not math.isfinite(c):
            raise ValueError(f"loss {self.name!r} has infinite slope at zero; "
                             "cannot normalize")
        if c == 1.0:
            return self
        return LossFn(self.name + "/norm",
                      lambda t: self._value(t) / c,
                      lambda t: self._deriv(t) / c,
                      lambda t: self._deriv2(t) / c,
                      rho_prime_at_zero=1.0,
                      deriv_pow0=self.deriv_pow0,
                      value_pow0=self.value_pow0,
                      value_pow_inf=self.value_pow_inf,
                      params=self.params)

    def __repr__(self):
        if self.params:
            inner = ",".join(f"{k}={v:g}" for k, v in self.params.items())
            return f"{self.name}({inner})"
        return self.name


def _require(cond, msg):
    if not cond:
        raise ValueError(msg)


def builtin(name, **params):
    """Named loss shapes with analytic derivatives.

    identity, log1p, atan, tanh, tnormcdf take no parameters;
    reflected_normal(alpha>0), power_shift(gamma>0, beta in (0,1)),
    rational(r>0), power(q in (0,1)).
    """
    if name == "identity":
        _require(not params, "identity takes no parameters")
        return LossFn("identity", lambda t: t,
                      lambda t: np.ones_like(t), lambda t: np.zeros_like(t),
                      rho_prime_at_zero=1.0, kernel_id=0)
    if name == "reflected_normal":
        alpha = params.pop("alpha")
        _require(not params and alpha > 0, "reflected_normal needs alpha > 0")
        return LossFn("reflected_normal",
                      lambda t: -np.expm1(-alpha * t),
                      lambda t: alpha * np.exp(-alpha * t),
                      lambda t: -alpha * alpha * np.exp(-alpha * t),
                      rho_prime_at_zero=alpha, value_pow_inf=0.0,
                      params={"alpha": alpha}, kernel_id=1)
    if name == "log1p":
        _require(not params, "log1p takes no parameters")
        return LossFn("log1p", np.log1p,
                      lambda t: 1.0 / (1.0 + t),
                      lambda t: -1.0 / (1.0 + t) ** 2,
                      rho_prime_at_zero=1.0, value_pow_inf=0.0, kernel_id=2)
    if name == "power_shift":
        gamma = params.pop("gamma")
        beta = params.pop("beta")
        _require(not params and gamma > 0 and 0 < beta < 1,
                 "power_shift needs gamma > 0 and beta in (0,1)")
        return LossFn("power_shift",
                      lambda t: np.expm1(beta * np.log1p(t / gamma)),
                      lambda t: (beta / gamma) * (1.0 + t / gamma) ** (beta - 1),
                      lambda t: (beta * (beta - 1) / gamma**2) * (1.0 + t / gamma) ** (beta - 2),
                      rho_prime_at_zero=beta / gamma, value_pow_inf=beta,
                      params={"gamma": gamma, "beta": beta}, kernel_id=3)
    if name == "rational":
        r = params.pop("r")
        _require(not params and r > 0, "rational needs r > 0")
        return LossFn("rational",
                      lambda t: r * r * t / (r * t + 1.0),
                      lambda t: r * r / (r * t + 1.0) ** 2,
                      lambda t: -2 * r**3 / (r * t + 1.0) ** 3,
                      rho_prime_at_zero=r * r, value_pow_inf=0.0,
                      params={"r": r}, kernel_id=4)
    if name == "atan":
        _require(not params, "atan takes no parameters")
        return LossFn("atan", np.arctan,
                      lambda t: 1.0 / (1.0 + t * t),
                      lambda t: -2.0 * t / (1.0 + t * t) ** 2,
                      rho_prime_at_zero=1.0, value_pow_inf=0.0, kernel_id=5)
    if name == "tanh":
        _require(not params, "tanh takes no parameters")
        return LossFn("tanh", np.tanh,
                      lambda t: 1.0 / np.cosh(t) ** 2,
                      lambda t: -2.0 * np.tanh(t) / np.cosh(t) ** 2,
                      rho_prime_at_zero=1.0, value_pow_inf=0.0, kernel_id=6)
    if name == "power":
        q = params.pop("q")
        _require(not params and 0 < q < 1, "power needs q in (0,1)")

        def dpow(t, e):
            t = np.asarray(t, dtype=float)
            with np.errstate(divide="ignore"):
                out = np.where(t > 0, t, 1.0) ** e
            return np.where(t > 0, out, np.inf)

        return LossFn("power",
                      lambda t: np.asarray(t, dtype=float) ** q,
                      lambda t: q * dpow(t, q - 1),
                      lambda t: q * (q - 1) * dpow(t, q - 2),
                      rho_prime_at_zero=math.inf,
                      deriv_pow0=q - 1.0, value_pow0=q, value_pow_inf=q,
                      params={"q": q}, kernel_id=7)
    if name == "trunc_normal_cdf":
        _require(not params, "trunc_normal_cdf takes no parameters")
        return LossFn("trunc_normal_cdf",
                      lambda t: erf(t / math.sqrt(2)),
                      lambda t: SQRT_2_OVER_PI * np.exp(-0.5 * t * t),
                      lambda t: -SQRT_2_OVER_PI * t * np.exp(-0.5 * t * t),
                      rho_prime_at_zero=SQRT_2_OVER_PI, value_pow_inf=0.0,
                      kernel_id=8)
    raise ValueError(f"unknown loss {name!r}")


def user_loss(value, deriv=None, deriv2=None, name="user",
              deriv_pow0=0.0, value_pow0=1.0):
    """Wrap a user-supplied scalar loss; missing derivatives are taken by
    central differences and the slope at zero by one-sided Richardson."""
    return LossFn(name, lambda t: np.asarray(value(t), dtype=float),
                  None if deriv is None else (lambda t: np.asarray(deriv(t), dtype=float)),
                  None if deriv2 is None else (lambda t: np.asarray(deriv2(t), dtype=float)),
                  deriv_pow0=deriv_pow0, value_pow0=value_pow0)


# -- certification -------------------------------------------------------

SIGN_TOL = 1e-9


@dataclass
class Violation:
    clause: str
    witness: float
    detail: str

    def to_dict(self):
        return {"clause": self.clause, "witness": self.witness, "detail": self.detail}


@dataclass
class Certificate:
    subject: str
    condition: str
    ok: bool
    grid_size: int
    violations: list = field(default_factory=list)

    def to_dict(self):
        return {"subject": self.subject, "condition": self.condition,
                "ok": self.ok, "grid_size": self.grid_size,
                "violations": [v.to_dict() for v in self.violations]}


def default_loss_grid(t_max=100.0, size=1200):
    return np.geomspace(1e-8, t_max, size)


def _first_bad(grid, mask):
    idx = int(np.argmax(mask))
    return float(grid[idx])


def certify_C1(loss, grid=None):
    """Certify rho(0)=0, finite positive slope at zero, positivity and
    concavity of the derivative, and the non-increasing secant rho(t)/t."""
    if grid is None:
        grid = default_loss_grid()
    grid = np.asarray(grid, dtype=float)
    violations = []

    v0 = loss.value(0.0)
    if not abs(v0) <= 1e-12:
        violations.append(Violation("value_at_zero", 0.0, f"value(0) = {v0!r}"))

    rp0 = loss.rho_prime_at_zero
    if not (0 < rp0 < math.inf):
        violations.append(Violation("rho_prime_at_zero", 0.0,
                                    f"slope at zero is {rp0!r}"))

    scale = max(rp0, 1.0) if math.isfinite(rp0) else 1.0
    violations.extend(_shape_checks(loss, grid, scale=scale))

    vals = np.asarray(loss.value(grid))
    secant = vals / grid
    jump = np.diff(secant)
    # the eps/t term absorbs rounding of value() near zero for user shapes
    slack = (SIGN_TOL * np.maximum(1.0, np.abs(secant[:-1]))
             + 8 * np.finfo(float).eps * scale / grid[1:])
    bad = jump > slack
    if bad.any():
        violations.append(Violation("secant_nonincreasing", _first_bad(grid[1:], bad),
                                    "rho(t)/t increases"))

    return Certificate(repr(loss), "C1", not violations, grid.size, violations)


def certify_C3(loss, grid=None):
    """Certify ell(0)=0 plus positivity and concavity of the derivative;
    the slope at zero may be infinite."""
    if grid is None:
        grid = default_loss_grid()
    grid = np.asarray(grid, dtype=float)
    violations = []

    v0 = loss.value(0.0)
    if not abs(v0) <= 1e-12:
        violations.append(Violation("value_at_zero", 0.0, f"value(0) = {v0!r}"))

    violations.extend(_shape_checks(loss, grid, scale=1.0))
    return Certificate(repr(loss), "C3", not violations, grid.size, violations)


def _shape_checks(loss, grid, scale):
    violations = []
    d1 = np.asarray(loss.deriv(grid))
    vals = np.asarray(loss.value(grid))
    # a derivative that underflows to 0 in the saturated tail of a bounded
    # shape is not a positivity violation
    saturated = (d1 == 0) & (vals >= vals.max() * (1 - 1e-12)) & (vals > 0)
    bad_pos = (d1 < 0) | ((d1 == 0) & ~saturated)
    if bad_pos.any():
        violations.append(Violation("deriv_positive",
                                    _first_bad(grid, bad_pos),
                                    "derivative not strictly positive"))
    rising = np.diff(d1) > SIGN_TOL * scale
    if rising.any():
        violations.append(Violation("deriv_nonincreasing",
                                    _first_bad(grid[1:], rising),
                                    "derivative increases between grid points"))
    d2 = np.asarray(loss.deriv2(grid))
    bad2 = d2 > SIGN_TOL * scale
    if bad2.any():
        violations.append(Violation("second_derivative",
                                    _first_bad(grid, bad2),
                                    "second derivative exceeds the concavity tolerance"))
    return violations


# -- balanced losses ------------------------------------------------------

RHO_FORM = "rho"
ELL_FORM = "ell"


@dataclass(frozen=True)
class BalancedLoss:
    """Balanced loss: either omega*rho(||d-x||^2) + (1-omega)*rho(||d-theta||^2)
    (rho form) or ell(omega*||d-x||^2 + (1-omega)*||d-theta||^2) (ell form),
    with the data X as the target estimator."""

    form: str
    omega: float
    shape: LossFn

    def __post_init__(self):
        if self.form not in (RHO_FORM, ELL_FORM):
            raise ValueError(f"form must be {RHO_FORM!r} or {ELL_FORM!r}")
        if not 0.0 <= self.omega < 1.0:
            raise ValueError(f"omega must lie in [0, 1), got {self.omega}")
        if self.form == RHO_FORM and not math.isfinite(self.shape.rho_prime_at_zero):
            raise ValueError(
                f"rho-form requires a finite slope at zero; {self.shape!r} has "
                "infinite slope (use the ell form)")

    def combine(self, fit_sq, precision_sq):
        """Loss from the two squared distances (vectorized)."""
        fit_sq = np.maximum(fit_sq, 0.0)
        precision_sq = np.maximum(precision_sq, 0.0)
        if self.form == RHO_FORM:
            out = (self.omega * self.shape.value(fit_sq)
                   + (1 - self.omega) * self.shape.value(precision_sq))
        else:
            out = self.shape.value(self.omega * fit_sq
                                   + (1 - self.omega) * precision_sq)
        return out


def loss_value(bl, estimate, x, theta):
    """Balanced loss of an estimate given the observation and the parameter."""
    estimate = np.asarray(estimate, dtype=float)
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if not (estimate.shape == x.shape == theta.shape):
        raise ValueError("estimate, x and theta must have identical shapes")
    fit = float(np.sum((estimate - x) ** 2))
    prec = float(np.sum((estimate - theta) ** 2))
    return float(bl.combine(fit, prec))


# -- CLI parsing -----------------------------------------------------------

_CLI_NAMES = {
    "identity": ("identity", {}),
    "log1p": ("log1p", {}),
    "refnorm": ("reflected_normal", {"alpha": float}),
    "power": ("power", {"q": float}),
    "powshift": ("power_shift", {"gamma": float, "beta": float}),
    "rational": ("rational", {"r": float}),
    "atan": ("atan", {}),
    "tanh": ("tanh", {}),
    "tnormcdf": ("trunc_normal_cdf", {}),
}


def parse_loss(spec):
    """Loss from its CLI string, e.g. 'log1p', 'refnorm:alpha=1', 'power:q=0.5'."""
    spec = spec.strip()
    head, _, rest = spec.partition(":")
    if head not in _CLI_NAMES:
        raise ValueError(f"unknown loss spec {spec!r}")
    name, sig = _CLI_NAMES[head]
    params = {}
    for piece in rest.split(",") if rest else []:
        try:
            key, val = piece.split("=")
        except ValueError as exc:
            raise ValueError(f"bad loss parameter {piece!r}") from exc
        if key not in sig:
            raise ValueError(f"loss {head!r} does not take parameter {key!r}")
        params[key] = float(val)
    missing = set(sig) - set(params)
    if missing:
        raise ValueError(f"loss {head!r} missing parameters {sorted(missing)}")
    return builtin(name, **params)
