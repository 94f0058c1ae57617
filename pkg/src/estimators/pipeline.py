"""
Declarative estimator specs and the fitted selection + model pipeline.

A spec only names the model kind and its hyperparameters, so every CV fold
and grid point fits a fresh model. Feature selection, when requested, is
part of the pipeline and is refit on each training split.
"""
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Optional

import numpy as np

from src.errors import ConfigError
from src.estimators.feature_selection import FeatureSelector, f_classif, select_k_best, select_percentile
from src.estimators.linear import MODEL_KINDS, LinearModel, classify, predict
from src.estimators.logistic import fit_logistic
from src.estimators.regression import fit_lasso_cd, fit_lasso_lars_cv, fit_ridge
from src.estimators.svm import fit_linear_svc


@dataclass(frozen=True)
class EstimatorSpec:
    kind: str
    params: Dict[str, Any] = field(default_factory=dict)
    select_k: Optional[int] = None
    select_percentile: Optional[float] = None

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ConfigError(f"unknown estimator kind {self.kind!r}, expected one of {list(MODEL_KINDS)}")
        if self.select_k is not None and self.select_percentile is not None:
            raise ConfigError("use either select_k or select_percentile, not both")

    @property
    def is_classifier(self) -> bool:
        return self.kind.startswith(("svc", "logreg"))

    @property
    def has_selection(self) -> bool:
        return self.select_k is not None or self.select_percentile is not None

    def with_params(self, **overrides) -> "EstimatorSpec":
        """Copy with hyperparameters replaced; select_k / select_percentile are accepted too."""
        selection = {key: overrides.pop(key) for key in ("select_k", "select_percentile") if key in overrides}
        return replace(self, params={**self.params, **overrides}, **selection)

    def describe(self) -> str:
        parts = [self.kind] + [f"{k}={v}" for k, v in self.params.items()]
        if self.select_k is not None:
            parts.append(f"k={self.select_k}")
        if self.select_percentile is not None:
            parts.append(f"percentile={self.select_percentile}")
        return " ".join(parts)


def fit_model(kind: str, X, y, params: Dict[str, Any]) -> LinearModel:
    """Dispatch to the solver for ``kind``."""
    p = dict(params)
    if kind == "svc_hinge_l2":
        return fit_linear_svc(X, y, "l2", "hinge", p.get("C", 1.0))
    if kind == "svc_sqhinge_l2":
        return fit_linear_svc(X, y, "l2", "squared_hinge", p.get("C", 1.0))
    if kind == "svc_sqhinge_l1":
        return fit_linear_svc(X, y, "l1", "squared_hinge", p.get("C", 1.0))
    if kind == "logreg_l1":
        return fit_logistic(X, y, "l1", p.get("C", 1.0))
    if kind == "logreg_l2":
        return fit_logistic(X, y, "l2", p.get("C", 1.0))
    if kind == "ridge":
        return fit_ridge(X, y, p.get("alpha", 1.0))
    if kind == "lasso":
        return fit_lasso_cd(X, y, p.get("alpha", 1.0))
    if kind == "lasso_lars":
        return fit_lasso_lars_cv(X, y, p.get("n_folds", 5), p.get("max_iter", 500))
    raise ConfigError(f"unknown estimator kind {kind!r}")


@dataclass
class FittedPipeline:
    spec: EstimatorSpec
    model: LinearModel
    selector: Optional[FeatureSelector] = None

    def _reduce(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return self.selector.transform(X) if self.selector is not None else X

    def predict(self, X) -> np.ndarray:
        """External labels for classifiers, values for regressors."""
        Xr = self._reduce(X)
        return classify(self.model, Xr) if self.spec.is_classifier else predict(self.model, Xr)

    def full_coef(self) -> np.ndarray:
        """Model weights in the original feature space (zeros on dropped features)."""
        if self.selector is None:
            return self.model.coef.copy()
        return self.selector.inverse_transform(self.model.coef)


def fit_pipeline(spec: EstimatorSpec, X, y) -> FittedPipeline:
    X = np.asarray(X, dtype=np.float64)
    selector = None
    if spec.has_selection:
        scores = f_classif(X, y)
        if spec.select_k is not None:
            selector = select_k_best(scores, spec.select_k)
        else:
            selector = select_percentile(scores, spec.select_percentile)
        X = selector.transform(X)
    model = fit_model(spec.kind, X, y, spec.params)
    return FittedPipeline(spec, model, selector)
