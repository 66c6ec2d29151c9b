"""Estimator specifications and the standardize -> ML -> shrink fitting path."""

import warnings
from dataclasses import dataclass

from .errors import BetaShrinkError, ConvergenceWarning
from .estimators import (
    LassoConfig,
    RidgeSelector,
    fit_lasso,
    fit_ml,
    fit_ridge,
    select_lasso_k_cv,
)
from .preprocess import standardize

__all__ = ["EstimatorSpec", "parse_estimators", "fit_estimators"]


@dataclass(frozen=True)
class EstimatorSpec:
    """One estimator: ``ml``, ``ridge`` with a selector, or ``lasso`` with k or CV."""

    method: str
    ridge: RidgeSelector = None
    lasso_k: object = None  # float, or "cv"

    def __post_init__(self):
        if self.method not in ("ml", "ridge", "lasso"):
            raise ValueError(f"unknown estimator method {self.method!r}")
        if self.method == "ridge" and self.ridge is None:
            raise ValueError("ridge estimator needs a selector")
        if self.method == "lasso":
            if self.lasso_k is None:
                raise ValueError("lasso estimator needs k or 'cv'")
            if self.lasso_k != "cv" and float(self.lasso_k) < 0:
                raise ValueError("lasso k must be >= 0")

    @classmethod
    def parse(cls, text):
        """Parse ``ml``, ``ridge:<hk|med|max|min|FLOAT>`` or ``lasso:<cv|FLOAT>``."""
        method, _, arg = str(text).strip().lower().partition(":")
        if method == "ml":
            return cls("ml")
        if method == "ridge":
            return cls("ridge", ridge=RidgeSelector.parse(arg or "med"))
        if method == "lasso":
            arg = arg or "cv"
            return cls("lasso", lasso_k="cv" if arg == "cv" else float(arg))
        raise ValueError(f"cannot parse estimator {text!r}")

    @property
    def name(self):
        if self.method == "ml":
            return "ML"
        if self.method == "ridge":
            return f"Ridge({self.ridge.label})"
        return "Lasso(cv)" if self.lasso_k == "cv" else f"Lasso(k={float(self.lasso_k):g})"


def parse_estimators(texts):
    if isinstance(texts, str):
        texts = [t for t in texts.split(",") if t.strip()]
    return tuple(EstimatorSpec.parse(t) for t in texts)


def fit_estimators(ds, specs, lasso_cfg=None, *, quiet=True):
    """Fit every spec on ``ds`` (original scale), sharing one ML fit.

    Predictors are standardized first; shrinkage runs on that scale and
    coefficients come back on the original scale. Returns a dict
    ``name -> FitResult``; an estimator that raised is mapped to ``None``.
    """
    lasso_cfg = lasso_cfg or LassoConfig()
    sd, transform = standardize(ds)
    results = {}
    with warnings.catch_warnings():
        if quiet:
            warnings.simplefilter("ignore", ConvergenceWarning)
        try:
            ml = fit_ml(sd, transform=transform)
        except BetaShrinkError:
            return {spec.name: None for spec in specs}
        for spec in specs:
            try:
                if spec.method == "ml":
                    results[spec.name] = ml
                elif spec.method == "ridge":
                    results[spec.name] = fit_ridge(sd, spec.ridge, ml, transform=transform)
                else:
                    k = spec.lasso_k
                    if k == "cv":
                        k = select_lasso_k_cv(sd, lasso_cfg, ml)
                    results[spec.name] = fit_lasso(sd, float(k), lasso_cfg, ml, transform=transform)
            except BetaShrinkError:
                results[spec.name] = None
    return results
