import numpy as np
import pytest

from bshrink.estimators import (BaranchikEstimator, certify_multiplier,
                                constant_one, identity_estimator,
                                parse_estimator, ratio, user_multiplier)


def test_zero_shrinkage_is_identity():
    est = BaranchikEstimator(0.0, ratio(1.0))
    x = np.array([1.0, -2.0, 0.5, 3.0])
    np.testing.assert_allclose(est.evaluate(x), x, rtol=1e-15)


def test_ratio_multiplier_example():
    # b=0.5, c=1, ||x||^2 = 1: multiplier 1 - 0.5 * (1/2) / 1 = 0.75
    est = BaranchikEstimator(0.5, ratio(1.0))
    x = np.array([1.0, 0.0])
    np.testing.assert_allclose(est.evaluate(x), 0.75 * x, rtol=1e-15)


def test_james_stein_zero_point():
    d = 6
    b = d - 2.0
    est = BaranchikEstimator(b, constant_one())
    x = np.zeros(d)
    x[0] = np.sqrt(b)
    np.testing.assert_allclose(est.evaluate(x), np.zeros(d), atol=1e-14)


def test_singular_at_origin_flagged():
    est = BaranchikEstimator(1.0, constant_one())
    with pytest.raises(ValueError):
        est.evaluate(np.zeros(4))
    # ratio(c > 0) extends continuously: shrink term b/(w+c) -> b/c
    ok = BaranchikEstimator(1.0, ratio(2.0))
    np.testing.assert_allclose(ok.evaluate(np.zeros(4)), np.zeros(4))


def test_batch_evaluation_matches_pointwise():
    est = BaranchikEstimator(0.7, ratio(0.5))
    rng = np.random.default_rng(2)
    pts = rng.standard_normal((50, 4))
    batch = est.evaluate(pts)
    rows = np.stack([est.evaluate(p) for p in pts])
    np.testing.assert_allclose(batch, rows, rtol=1e-15)


def test_orthogonal_equivariance():
    rng = np.random.default_rng(3)
    est = BaranchikEstimator(0.8, ratio(1.3))
    q, _ = np.linalg.qr(rng.standard_normal((5, 5)))
    for _ in range(10):
        x = rng.standard_normal(5)
        np.testing.assert_allclose(est.evaluate(q @ x), q @ est.evaluate(x),
                                   rtol=1e-12, atol=1e-13)


def test_certify_ratio_and_constant():
    assert certify_multiplier(ratio(1.0)).ok
    assert certify_multiplier(constant_one()).ok
    assert certify_multiplier(ratio(0.0)).ok  # degenerates to constant one


def test_certify_nonmonotone_user_multiplier():
    sm = user_multiplier(lambda w: w / (1 + w * w), name="hump")
    cert = certify_multiplier(sm)
    assert not cert.ok
    falling = [v for v in cert.violations if v.clause == "nondecreasing"]
    assert falling and falling[0].witness > 0.5


def test_ratio_concave_through_origin_inequality():
    # w s'(w) <= s(w) on the certification grid
    sm = ratio(2.0)
    w = np.geomspace(1e-6, 1e6, 2048)
    assert np.all(w * sm.s_deriv(w) <= np.asarray(sm.s(w)) + 1e-15)


def test_h_parameterization():
    est = BaranchikEstimator(0.5, ratio(1.0))
    w = np.array([0.5, 1.0, 4.0])
    np.testing.assert_allclose(est.h(w), 1 - 0.5 / (w + 1), rtol=1e-15)
    js = BaranchikEstimator(2.0, constant_one())
    np.testing.assert_allclose(js.h(w), 1 - 2.0 / w, rtol=1e-15)


def test_parse_estimator():
    est = parse_estimator("baranchik:b=0.5,c=1")
    assert est.shrink_b == 0.5 and est.multiplier.ratio_c == 1.0
    js = parse_estimator("js:b=2")
    assert js.shrink_b == 2.0 and js.multiplier.ratio_c == 0.0
    ident = parse_estimator("x")
    assert ident.shrink_b == 0.0
    assert identity_estimator().shrink_b == 0.0
    # b=<f>,c=0 is the James-Stein multiplier
    blue = parse_estimator("baranchik:b=0.5,c=0")
    assert blue.multiplier.ratio_c == 0.0
    with pytest.raises(ValueError):
        parse_estimator("baranchik:b=1")
    with pytest.raises(ValueError):
        parse_estimator("shrink:b=1")
    with pytest.raises(ValueError):
        BaranchikEstimator(-0.1, ratio(1.0))
