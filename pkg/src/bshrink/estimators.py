"""Shrinkage multipliers s(.) and the Baranchik estimator family
(1 - b * s(||x||^2)/||x||^2) x."""

from dataclasses import dataclass

import numpy as np

from .losses import Certificate, Violation


class SMultiplier:
    """Multiplier function s on [0, inf) with 0 <= s <= 1, non-decreasing and
    concave.  Builtins: ratio(c) with s(w) = w/(w+c) (c = 0 gives s == 1, the
    James-Stein multiplier) and constant_one."""

    def __init__(self, name, s, shrink_factor, s_deriv, s_deriv2, ratio_c=None):
        self.name = name
        self._s = s
        self._shrink = shrink_factor
        self._deriv = s_deriv
        self._deriv2 = s_deriv2
        self.ratio_c = ratio_c  # None for user multipliers

    def s(self, w):
        out = self._s(np.asarray(w, dtype=float))
        return out if np.ndim(out) else float(out)

    def shrink_factor(self, w):
        """s(w)/w in a numerically stable form."""
        out = self._shrink(np.asarray(w, dtype=float))
        return out if np.ndim(out) else float(out)

    def s_deriv(self, w):
        out = self._deriv(np.asarray(w, dtype=float))
        return out if np.ndim(out) else float(out)

    def s_deriv2(self, w):
        out = self._deriv2(np.asarray(w, dtype=float))
        return out if np.ndim(out) else float(out)

    @property
    def singular_at_zero(self):
        """True when s(w)/w blows up as w -> 0 (constant_one, ratio(0))."""
        return self.ratio_c == 0.0 if self.ratio_c is not None else None

    def __repr__(self):
        if self.name == "ratio":
            return f"ratio(c={self.ratio_c:g})"
        return self.name


def ratio(c):
    """s(w) = w / (w + c), c >= 0; c = 0 degenerates to constant one."""
    c = float(c)
    if c < 0:
        raise ValueError("ratio multiplier needs c >= 0")
    if c == 0.0:
        return constant_one()
    return SMultiplier(
        "ratio",
        lambda w: w / (w + c),
        lambda w: 1.0 / (w + c),
        lambda w: c / (w + c) ** 2,
        lambda w: -2.0 * c / (w + c) ** 3,
        ratio_c=c)


def constant_one():
    def _shrink(w):
        with np.errstate(divide="ignore"):
            return np.where(w > 0, 1.0 / np.where(w > 0, w, 1.0), np.inf)

    return SMultiplier(
        "constant_one",
        lambda w: np.ones_like(w),
        _shrink,
        lambda w: np.zeros_like(w),
        lambda w: np.zeros_like(w),
        ratio_c=0.0)


def user_multiplier(s, s_deriv=None, s_deriv2=None, name="user"):
    """Wrap a user-supplied multiplier; derivatives default to central
    differences on w > 0."""
    def nd1(w):
        w = np.asarray(w, dtype=float)
        h = 1e-6 * np.maximum(1.0, np.abs(w))
        h = np.minimum(h, np.where(w > 0, w / 2, h))
        return (s(w + h) - s(w - h)) / (2 * h)

    def nd2(w):
        w = np.asarray(w, dtype=float)
        h = 1e-4 * np.maximum(1.0, np.abs(w))
        h = np.minimum(h, np.where(w > 0, w / 2, h))
        return (s(w + h) - 2 * s(w) + s(w - h)) / (h * h)

    def shrink(w):
        w = np.asarray(w, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.asarray(s(w), dtype=float) / w

    return SMultiplier(name, lambda w: np.asarray(s(w), dtype=float), shrink,
                       s_deriv or nd1, s_deriv2 or nd2)


def default_multiplier_grid():
    return np.geomspace(1e-6, 1e6, 2048)


def certify_multiplier(sm, grid=None):
    """Certify 0 <= s <= 1, non-decreasing, concave, not identically zero."""
    if grid is None:
        grid = default_multiplier_grid()
    grid = np.asarray(grid, dtype=float)
    tol = 1e-9
    violations = []
    s = np.asarray(sm.s(grid))

    def first_bad(mask, where=grid):
        return float(where[int(np.argmax(mask))])

    bad = (s < -tol) | (s > 1 + tol)
    if bad.any():
        violations.append(Violation("range", first_bad(bad), "s outside [0, 1]"))
    falling = np.diff(s) < -tol
    if falling.any():
        violations.append(Violation("nondecreasing", first_bad(falling, grid[1:]),
                                    "s decreases between grid points"))
    d2 = np.asarray(sm.s_deriv2(grid))
    convex = d2 > tol
    if convex.any():
        violations.append(Violation("concavity", first_bad(convex),
                                    "second derivative exceeds tolerance"))
    # secant slopes must be non-increasing (grid is geometric, so raw second
    # differences would be meaningless)
    slopes = np.diff(s) / np.diff(grid)
    slope_scale = np.maximum(np.abs(slopes[:-1]), np.abs(slopes[1:]))
    rising = np.diff(slopes) > tol * np.maximum(slope_scale, 1e-12)
    if rising.any():
        violations.append(Violation("concavity_slopes",
                                    first_bad(rising, grid[1:-1]),
                                    "secant slopes increase"))
    if np.all(np.abs(s) <= tol):
        violations.append(Violation("not_identically_zero", float(grid[0]),
                                    "s vanishes on the whole grid"))
    return Certificate(repr(sm), "multiplier", not violations, grid.size,
                       violations)


@dataclass(frozen=True)
class BaranchikEstimator:
    """x |-> (1 - b * s(||x||^2)/||x||^2) x.

    Stores the effective shrinkage coefficient b = a(1-omega) directly; the
    cut-off reports translate a0 into the admissible range b <= a0(1-omega).
    b = 0 recovers the benchmark x itself.
    """

    shrink_b: float
    multiplier: SMultiplier

    def __post_init__(self):
        if self.shrink_b < 0:
            raise ValueError("shrink_b must be nonnegative")

    def h(self, w):
        """Coordinate multiplier h(w) = 1 - b s(w)/w."""
        return 1.0 - self.shrink_b * self.multiplier.shrink_factor(w)

    def evaluate(self, x):
        """Apply the estimator to one point or to rows of an (n, d) array."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = x[None, :] if single else x
        w = np.sum(pts * pts, axis=1)
        if self.shrink_b > 0 and self.multiplier.singular_at_zero and np.any(w == 0):
            raise ValueError("estimator is singular at x = 0 for this multiplier")
        out = np.where(w > 0, self.h(np.where(w > 0, w, 1.0)), 1.0)[:, None] * pts
        return out[0] if single else out

    def describe(self):
        c = self.multiplier.ratio_c
        if c == 0.0:
            return f"js(b={self.shrink_b:g})"
        if c is not None:
            return f"baranchik(b={self.shrink_b:g}, c={c:g})"
        return f"baranchik(b={self.shrink_b:g}, s={self.multiplier.name})"

    def __repr__(self):
        return self.describe()


def identity_estimator():
    """The benchmark estimator x itself (zero shrinkage)."""
    return BaranchikEstimator(0.0, constant_one())


def parse_estimator(spec):
    """Estimator from its CLI string: baranchik:b=<f>,c=<f> | js:b=<f> | x."""
    spec = spec.strip()
    if spec == "x":
        return identity_estimator()
    head, _, rest = spec.partition(":")
    params = {}
    for piece in rest.split(",") if rest else []:
        try:
            key, val = piece.split("=")
            params[key] = float(val)
        except ValueError as exc:
            raise ValueError(f"bad estimator parameter {piece!r}") from exc
    if head == "baranchik":
        missing = {"b", "c"} - set(params)
        if missing or set(params) != {"b", "c"}:
            raise ValueError("baranchik estimator needs exactly b=<f>,c=<f>")
        return BaranchikEstimator(params["b"], ratio(params["c"]))
    if head == "js":
        if set(params) != {"b"}:
            raise ValueError("js estimator needs exactly b=<f>")
        return BaranchikEstimator(params["b"], constant_one())
    raise ValueError(f"unknown estimator spec {spec!r}")
