"""Dominance cut-offs and frequentist risks for Baranchik-type shrinkage
estimators of a spherically symmetric mean under balanced loss functions."""

from ._fastpath import HAVE_COMPILED, active_backend
from ._quad import IntegrationError
from .cutoffs import (CutoffReport, closed_form, cutoff_ell, cutoff_rho,
                      loss_weighted_moment, power_cutoff_table)
from .densities import (DivergentMomentError, ModelDensity, TiltedLaw, kotz,
                        normal, parse_model, scale_mixture, uniform_ball)
from .estimators import (BaranchikEstimator, SMultiplier, certify_multiplier,
                         constant_one, identity_estimator, parse_estimator,
                         ratio, user_multiplier)
from .lemma_lab import PropertyReport, run_suite
from .losses import (BalancedLoss, Certificate, LossFn, builtin, certify_C1,
                     certify_C3, loss_value, parse_loss, user_loss)
from .risk import (RiskCurve, RiskToleranceError, TWDensity, benchmark_risk,
                   default_lambda_grid, risk_at_origin, risk_curve, risk_mc,
                   risk_quadrature)

__version__ = "0.1.0"

__all__ = [
    "BalancedLoss", "BaranchikEstimator", "Certificate", "CutoffReport",
    "DivergentMomentError", "HAVE_COMPILED", "IntegrationError", "LossFn",
    "ModelDensity", "PropertyReport", "RiskCurve", "RiskToleranceError",
    "SMultiplier", "TWDensity", "TiltedLaw", "active_backend",
    "benchmark_risk", "builtin", "certify_C1", "certify_C3",
    "certify_multiplier", "closed_form", "constant_one", "cutoff_ell",
    "cutoff_rho", "default_lambda_grid", "identity_estimator", "kotz",
    "loss_value", "loss_weighted_moment", "normal", "parse_estimator",
    "parse_loss", "parse_model", "power_cutoff_table", "ratio", "risk_at_origin",
    "risk_curve", "risk_mc", "risk_quadrature", "run_suite", "scale_mixture",
    "uniform_ball", "user_loss", "user_multiplier", "__version__",
]
