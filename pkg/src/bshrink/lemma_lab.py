"""Numerical verification harness for the supporting inequalities behind the
dominance results: superharmonicity of the shrinkage field, the tilted-law
expectation chain, sphere-vs-ball means, monotone conditional means, the
covariance inequality, and the per-sample loss-difference bound.

Deterministic checks use a hard 1e-9 tolerance; stochastic checks allow a
uniform 3-standard-error slack.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .densities import kotz, normal, sample_ball, sample_sphere, uniform_ball
from .estimators import BaranchikEstimator, constant_one, ratio
from .losses import builtin

HARD_TOL = 1e-9


@dataclass
class PropertyReport:
    name: str
    passed: bool
    worst_margin: float
    tolerance: float
    sample: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return {"name": self.name, "passed": bool(self.passed),
                "worst_margin": float(self.worst_margin),
                "tolerance": float(self.tolerance),
                "sample": dict(self.sample), "details": dict(self.details)}


def _rng(seed, tag):
    return np.random.default_rng(np.random.SeedSequence([int(seed), tag]))


def _mean_se(values):
    values = np.asarray(values, dtype=float)
    n = values.size
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(n))


def check_superharmonic(sm, dim, grid=None):
    """Sign of the Laplacian of s(||x||^2)/||x||^2 on a radial grid: for a
    certified multiplier and dim >= 4 it must be nonpositive everywhere.

    The radial form of the Laplacian is
    (2/w^2) * (2 w^2 s''(w) + (d-4) (w s'(w) - s(w))) at w = ||x||^2.
    """
    if dim < 4:
        raise ValueError("superharmonicity holds for dim >= 4")
    if grid is None:
        grid = np.geomspace(1e-6, 1e6, 2048)
    w = np.asarray(grid, dtype=float)
    s = np.asarray(sm.s(w))
    s1 = np.asarray(sm.s_deriv(w))
    s2 = np.asarray(sm.s_deriv2(w))
    lap = 2.0 / w**2 * (2 * w**2 * s2 + (dim - 4) * (w * s1 - s))
    worst = float(lap.max())
    idx = int(np.argmax(lap))
    return PropertyReport(
        "superharmonic", worst <= HARD_TOL, worst, HARD_TOL,
        {"grid_size": w.size, "dim": dim},
        {"multiplier": repr(sm), "witness_w": float(w[idx])})


def check_tilted_mean_chain(model, rho, sm, theta, mc_n=10**6, seed=0):
    """Expectation chain  E[rho(s(W)/W)] <= rho'(0) E[s(W)/W]
    <= rho'(0) E*[s(W)/W], the starred mean taken under the law tilted by the
    normalized loss slope (estimated by radial importance re-weighting)."""
    theta = np.asarray(theta, dtype=float)
    rng = _rng(seed, 21)
    x = model.sample_with_rng(theta, int(mc_n), rng)
    w = np.sum(x * x, axis=1)
    g = np.asarray(sm.s(w)) / w
    rp0 = rho.rho_prime_at_zero
    r_sq = np.sum((x - theta) ** 2, axis=1)
    tilt = np.asarray(rho.deriv(r_sq)) / rp0

    first = np.asarray(rho.value(g)) - rp0 * g        # <= 0 samplewise in mean
    m1, se1 = _mean_se(first)

    # ratio estimator for the tilted mean, with a delta-method standard error
    mean_tilt = tilt.mean()
    tilted_mean = float(np.mean(g * tilt) / mean_tilt)
    influence = g - (g * tilt - tilted_mean * tilt) / mean_tilt - tilted_mean
    m2, se2 = _mean_se(influence)                     # mean(g) - E*[g]
    margin = max(m1 - 3 * se1, rp0 * (m2 - 3 * se2))
    return PropertyReport(
        "tilted_mean_chain", margin <= 0.0, margin, 0.0,
        {"mc_n": int(mc_n), "seed": seed},
        {"model": model.describe(), "loss": repr(rho), "multiplier": repr(sm),
         "lam": float(np.linalg.norm(theta)),
         "plain_mean": float(np.mean(g)), "tilted_mean": tilted_mean,
         "first_gap": m1, "first_se": se1, "second_gap": rp0 * m2,
         "second_se": rp0 * se2})


def check_sphere_ball(sm, dim, r, theta, mc_n=10**6, seed=0):
    """Sphere mean of the superharmonic field s(||z||^2)/||z||^2 must not
    exceed the ball mean (both centered at theta with radius r)."""
    if dim < 4:
        raise ValueError("requires dim >= 4 for an integrable singularity")
    theta = np.asarray(theta, dtype=float)
    rng = _rng(seed, 22)

    def field(z):
        w = np.sum(z * z, axis=1)
        return np.asarray(sm.s(w)) / w

    sphere_vals = field(sample_sphere(theta, r, int(mc_n), rng))
    ball_vals = field(sample_ball(theta, r, int(mc_n), rng))
    ms, ses = _mean_se(sphere_vals)
    mb, seb = _mean_se(ball_vals)
    margin = (ms - mb) - 3 * math.hypot(ses, seb)
    return PropertyReport(
        "sphere_vs_ball_mean", margin <= 0.0, margin, 0.0,
        {"mc_n": int(mc_n), "seed": seed},
        {"multiplier": repr(sm), "dim": dim, "radius": float(r),
         "sphere_mean": ms, "ball_mean": mb,
         "se": math.hypot(ses, seb)})


def check_monotone_conditional(model, sm, theta, r_grid, mc_n=10**6, seed=0):
    """E[R^2 s(||Z||^2)/||Z||^2 | ||Z - theta|| = R] estimated on spheres of
    increasing radius must be non-decreasing (3 SE slack per adjacent pair)."""
    theta = np.asarray(theta, dtype=float)
    if theta.size != model.dim:
        raise ValueError("theta must match the model dimension")
    rng = _rng(seed, 23)
    r_grid = [float(r) for r in r_grid]
    means, ses = [], []
    for r in r_grid:
        z = sample_sphere(theta, r, int(mc_n), rng)
        w = np.sum(z * z, axis=1)
        m, se = _mean_se(r * r * np.asarray(sm.s(w)) / w)
        means.append(m)
        ses.append(se)
    margins = [means[i] - means[i + 1] - 3 * math.hypot(ses[i], ses[i + 1])
               for i in range(len(means) - 1)]
    worst = max(margins) if margins else -math.inf
    return PropertyReport(
        "monotone_conditional_mean", worst <= 0.0, worst, 0.0,
        {"mc_n": int(mc_n), "seed": seed, "r_grid": r_grid},
        {"model": model.describe(), "multiplier": repr(sm),
         "means": means, "ses": ses})


def check_covariance_inequality(g_samples, h_samples, comonotone=False):
    """Sample check of E[g h] <=> E[g] E[h]: opposite monotonicity pushes the
    covariance nonpositive, co-monotonicity nonnegative (3 SE slack)."""
    g = np.asarray(g_samples, dtype=float)
    h = np.asarray(h_samples, dtype=float)
    if g.shape != h.shape or g.ndim != 1:
        raise ValueError("g and h must be paired 1-D samples")
    products = (g - g.mean()) * (h - h.mean())
    cov, se = _mean_se(products)
    margin = (-cov if comonotone else cov) - 3 * se
    return PropertyReport(
        "covariance_inequality", margin <= 0.0, margin, 0.0,
        {"n": g.size},
        {"direction": "comonotone" if comonotone else "opposite",
         "cov": cov, "se": se})


def check_loss_difference_bound(model, ell, omega, est, theta, mc_n=10**6,
                                seed=0):
    """Per-draw inequality: the balanced loss difference of the shrunk
    estimate over the benchmark is at most (1-omega)^2 ell'((1-omega) W)
    times the squared-error difference of the unit-shift estimate."""
    theta = np.asarray(theta, dtype=float)
    rng = _rng(seed, 24)
    x = model.sample_with_rng(theta, int(mc_n), rng)
    w = np.sum(x * x, axis=1)
    shrink = est.shrink_b * np.asarray(est.multiplier.shrink_factor(w))
    delta = (1.0 - shrink)[:, None] * x
    fit = np.sum((delta - x) ** 2, axis=1)
    prec = np.sum((delta - theta) ** 2, axis=1)
    w_center = np.sum((x - theta) ** 2, axis=1)

    lhs = (np.asarray(ell.value(omega * fit + (1 - omega) * prec))
           - np.asarray(ell.value((1 - omega) * w_center)))
    # unit shift g = (delta - x)/(1 - omega)
    g = (delta - x) / (1 - omega)
    sq_diff = np.sum((x + g - theta) ** 2, axis=1) - w_center
    rhs = (1 - omega) ** 2 * np.asarray(ell.deriv((1 - omega) * w_center)) * sq_diff
    worst = float(np.max(lhs - rhs))
    return PropertyReport(
        "loss_difference_bound", worst <= HARD_TOL, worst, HARD_TOL,
        {"mc_n": int(mc_n), "seed": seed},
        {"model": model.describe(), "loss": repr(ell), "omega": omega,
         "estimator": est.describe(),
         "lam": float(np.linalg.norm(theta))})


# -- default suite -----------------------------------------------------------


def _e1(dim, scale):
    v = np.zeros(dim)
    v[0] = scale
    return v


def suite_checks(seed=0, mc_n=10**6):
    """The default verification sweep over built-in models, certified losses,
    and the ratio/constant multipliers."""
    kotz6 = kotz(1, 1, 4, 6)
    n4 = normal(4)
    checks = {
        "superharmonic": lambda: [
            check_superharmonic(ratio(1.0), 4),
            check_superharmonic(ratio(1.0), 6),
            check_superharmonic(constant_one(), 4),
            check_superharmonic(constant_one(), 8),
        ],
        "tilted_chain": lambda: [
            check_tilted_mean_chain(kotz6, builtin("log1p"), ratio(1.0),
                                    _e1(6, 2.0), mc_n, seed),
            check_tilted_mean_chain(kotz6, builtin("log1p"), ratio(1.0),
                                    np.zeros(6), mc_n, seed),
            check_tilted_mean_chain(n4, builtin("reflected_normal", alpha=1.0),
                                    constant_one(), _e1(4, 1.0), mc_n, seed),
            check_tilted_mean_chain(uniform_ball(2, 5), builtin("atan"),
                                    ratio(0.5), _e1(5, 0.5), mc_n, seed),
        ],
        "sphere_ball": lambda: [
            check_sphere_ball(ratio(1.0), 4, 1.0, _e1(4, 3.0), mc_n, seed),
            check_sphere_ball(ratio(1.0), 4, 1.0, np.zeros(4), mc_n, seed),
            check_sphere_ball(constant_one(), 6, 2.0, _e1(6, 1.0), mc_n, seed),
        ],
        "monotone_conditional": lambda: [
            check_monotone_conditional(kotz(1, 1, 4, 6), ratio(1.0),
                                       _e1(6, 1.0), (0.5, 1, 2, 4), mc_n, seed),
            check_monotone_conditional(normal(6), constant_one(),
                                       np.zeros(6), (0.5, 1, 2, 4), mc_n, seed),
            check_monotone_conditional(normal(6), constant_one(),
                                       _e1(6, 2.0), (0.5, 1, 2, 4), mc_n, seed),
        ],
        "covariance": lambda: _covariance_cases(seed, mc_n),
        "loss_difference": lambda: [
            check_loss_difference_bound(kotz6, builtin("identity"), 0.5,
                                        BaranchikEstimator(0.5, ratio(1.0)),
                                        _e1(6, 1.0), mc_n, seed),
            check_loss_difference_bound(kotz6, builtin("power", q=0.5), 0.5,
                                        BaranchikEstimator(0.5, ratio(1.0)),
                                        _e1(6, 2.0), mc_n, seed),
            check_loss_difference_bound(n4, builtin("log1p"), 0.25,
                                        BaranchikEstimator(0.0, ratio(1.0)),
                                        _e1(4, 1.0), mc_n, seed),
        ],
    }
    return checks


def _covariance_cases(seed, mc_n):
    rng = _rng(seed, 25)
    y = rng.gamma(4.0, 1.0, int(mc_n))
    return [
        check_covariance_inequality(1.0 / y, y, comonotone=False),
        check_covariance_inequality(y, y, comonotone=True),
        check_covariance_inequality(np.full_like(y, 2.0), np.full_like(y, 3.0),
                                    comonotone=True),
    ]


def run_suite(which="all", seed=0, mc_n=10**6):
    """Run the named suite (or all of them); returns a list of reports."""
    checks = suite_checks(seed=seed, mc_n=mc_n)
    if which != "all":
        if which not in checks:
            raise ValueError(f"unknown suite {which!r}; "
                             f"pick from {sorted(checks)} or 'all'")
        return checks[which]()
    reports = []
    for name in checks:
        reports.extend(checks[name]())
    return reports
