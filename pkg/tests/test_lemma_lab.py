import numpy as np
import pytest

from bshrink.densities import kotz, normal, uniform_ball
from bshrink.estimators import BaranchikEstimator, constant_one, ratio, user_multiplier
from bshrink.lemma_lab import (check_covariance_inequality,
                               check_loss_difference_bound,
                               check_tilted_mean_chain,
                               check_monotone_conditional, check_sphere_ball,
                               check_superharmonic, run_suite)
from bshrink.losses import builtin

N = 10**5


def e1(dim, scale=1.0):
    v = np.zeros(dim)
    v[0] = scale
    return v


def test_superharmonic_ratio_d4():
    # d = 4 kills the first-derivative bracket: Laplacian = 4 s'' < 0
    report = check_superharmonic(ratio(1.0), 4)
    assert report.passed
    assert report.worst_margin < 0


def test_superharmonic_constant_one():
    for d in (4, 6, 8):
        report = check_superharmonic(constant_one(), d)
        assert report.passed
        if d > 4:  # Laplacian -2(d-4)/w^2 strictly negative
            assert report.worst_margin < 0


def test_superharmonic_convex_multiplier_fails():
    bad = user_multiplier(lambda w: w * w,
                          s_deriv=lambda w: 2 * w,
                          s_deriv2=lambda w: 2 * np.ones_like(w),
                          name="square")
    report = check_superharmonic(bad, 4)
    assert not report.passed
    assert report.worst_margin > 0
    assert report.details["witness_w"] > 0


def test_superharmonic_needs_dim_4():
    with pytest.raises(ValueError):
        check_superharmonic(ratio(1.0), 3)


def test_tilted_chain_identity_first_inequality_tight():
    # rho(t) = t makes the first inequality an equality
    report = check_tilted_mean_chain(normal(4), builtin("identity"), ratio(1.0),
                             e1(4, 1.0), N, seed=0)
    assert report.passed
    assert abs(report.details["first_gap"]) < 1e-12


def test_tilted_chain_kotz_study_inputs():
    report = check_tilted_mean_chain(kotz(1, 1, 4, 6), builtin("log1p"), ratio(1.0),
                             e1(6, 2.0), N, seed=0)
    assert report.passed


def test_tilted_chain_origin_has_largest_means():
    at0 = check_tilted_mean_chain(kotz(1, 1, 4, 6), builtin("log1p"), ratio(1.0),
                          np.zeros(6), N, seed=0)
    at4 = check_tilted_mean_chain(kotz(1, 1, 4, 6), builtin("log1p"), ratio(1.0),
                          e1(6, 4.0), N, seed=0)
    assert at0.passed and at4.passed
    assert at0.details["plain_mean"] > at4.details["plain_mean"]


def test_sphere_ball_off_center_and_origin():
    assert check_sphere_ball(ratio(1.0), 4, 1.0, e1(4, 3.0), N, 0).passed
    assert check_sphere_ball(ratio(1.0), 4, 1.0, np.zeros(4), N, 0).passed


def test_sphere_ball_flat_field_equal_within_se():
    # s(w) = w gives the constant field s(w)/w = 1: means equal exactly
    flat = user_multiplier(lambda w: np.asarray(w, dtype=float), name="flat")
    report = check_sphere_ball(flat, 4, 1.0, e1(4, 3.0), 10_000, 0)
    assert report.passed
    assert report.details["sphere_mean"] == pytest.approx(
        report.details["ball_mean"], abs=1e-12)


def test_monotone_conditional_ratio():
    report = check_monotone_conditional(kotz(1, 1, 4, 6), ratio(1.0),
                                        e1(6, 1.0), (0.5, 1, 2, 4), N, 0)
    assert report.passed
    means = report.details["means"]
    assert means == sorted(means)


def test_monotone_conditional_constant_at_origin():
    # s == 1, theta = 0: the conditional mean is identically 1
    report = check_monotone_conditional(normal(6), constant_one(),
                                        np.zeros(6), (0.5, 1, 2), 10_000, 0)
    assert report.passed
    np.testing.assert_allclose(report.details["means"], 1.0, rtol=1e-12)


def test_monotone_conditional_constant_off_center():
    report = check_monotone_conditional(normal(6), constant_one(),
                                        e1(6, 2.0), (0.5, 1, 2, 4), N, 0)
    assert report.passed


def test_covariance_inequality_gamma_example():
    rng = np.random.default_rng(0)
    y = rng.gamma(4.0, 1.0, N)
    # E[(1/y) y] = 1 <= E[1/y] E[y] = (1/3) * 4
    assert check_covariance_inequality(1 / y, y, comonotone=False).passed
    assert check_covariance_inequality(y, y, comonotone=True).passed


def test_covariance_inequality_constant_equality():
    g = np.full(1000, 2.0)
    assert check_covariance_inequality(g, g, comonotone=True).passed
    assert check_covariance_inequality(g, g, comonotone=False).passed


def test_covariance_inequality_validates_shapes():
    with pytest.raises(ValueError):
        check_covariance_inequality(np.ones(5), np.ones(6))


def test_loss_difference_bound_identity_is_equality():
    report = check_loss_difference_bound(
        kotz(1, 1, 4, 6), builtin("identity"), 0.5,
        BaranchikEstimator(0.5, ratio(1.0)), e1(6, 1.0), N, 0)
    assert report.passed
    assert abs(report.worst_margin) < 1e-10


def test_loss_difference_bound_power():
    report = check_loss_difference_bound(
        kotz(1, 1, 4, 6), builtin("power", q=0.5), 0.5,
        BaranchikEstimator(0.5, ratio(1.0)), e1(6, 2.0), N, 0)
    assert report.passed


def test_loss_difference_bound_zero_shrinkage():
    report = check_loss_difference_bound(
        uniform_ball(2, 4), builtin("log1p"), 0.3,
        BaranchikEstimator(0.0, ratio(1.0)), e1(4, 1.0), 10_000, 0)
    assert report.passed
    assert abs(report.worst_margin) < 1e-14


def test_reports_are_deterministic():
    a = check_tilted_mean_chain(normal(4), builtin("log1p"), ratio(1.0), e1(4, 1.0),
                        10_000, seed=7)
    b = check_tilted_mean_chain(normal(4), builtin("log1p"), ratio(1.0), e1(4, 1.0),
                        10_000, seed=7)
    assert a.to_dict() == b.to_dict()


def test_run_suite_small():
    reports = run_suite("superharmonic")
    assert reports and all(r.passed for r in reports)
    with pytest.raises(ValueError):
        run_suite("bogus")
    everything = run_suite("all", seed=0, mc_n=20_000)
    assert len(everything) >= 15
    assert all(r.passed for r in everything)
    payload = [r.to_dict() for r in everything]
    assert all(set(p) == {"name", "passed", "worst_margin", "tolerance",
                          "sample", "details"} for p in payload)
