"""
Fitted linear model container and the shared predict/classify surface.

Classifier objectives are ``penalty(w) + C * sum(loss)`` (loss summed, not
averaged; larger C = weaker regularization). Regressors use the
``1/(2n) * ||residual||^2 + alpha * penalty`` scaling (larger alpha =
stronger regularization).
"""
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from src.errors import LengthMismatch, MulticlassNotSupported, SingleClass

CLASSIFIER_KINDS = ("svc_hinge_l2", "svc_sqhinge_l2", "svc_sqhinge_l1", "logreg_l1", "logreg_l2")
REGRESSOR_KINDS = ("ridge", "lasso", "lasso_lars")
MODEL_KINDS = CLASSIFIER_KINDS + REGRESSOR_KINDS


@dataclass
class LinearModel:
    """Coefficients (n_targets, n_features) and intercepts (n_targets,)."""
    coef: np.ndarray
    intercept: np.ndarray
    kind: str
    reg: float
    classes: Optional[np.ndarray] = None  # external labels, classes[1] is the +1 side
    converged: bool = True
    n_iter: int = 0
    objective: float = float("nan")
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.coef = np.atleast_2d(np.asarray(self.coef, dtype=np.float64))
        self.intercept = np.atleast_1d(np.asarray(self.intercept, dtype=np.float64))

    @property
    def n_features(self) -> int:
        return self.coef.shape[1]

    @property
    def n_targets(self) -> int:
        return self.coef.shape[0]

    @property
    def is_classifier(self) -> bool:
        return self.kind in CLASSIFIER_KINDS

    @property
    def n_nonzero(self) -> int:
        return int(np.count_nonzero(self.coef))

    def to_dict(self) -> Dict:
        return {
            "kind": self.kind,
            "reg": self.reg,
            "n_features": self.n_features,
            "n_nonzero": self.n_nonzero,
            "converged": self.converged,
            "n_iter": self.n_iter,
            "objective": self.objective,
            "classes": None if self.classes is None else self.classes.tolist(),
        }


def encode_labels(y) -> tuple[np.ndarray, np.ndarray]:
    """Map two external labels onto -1/+1 (sorted order: classes[0] -> -1)."""
    y = np.asarray(y).ravel()
    classes = np.unique(y)
    if classes.size < 2:
        raise SingleClass(f"need two classes, got {classes.tolist()}")
    if classes.size > 2:
        raise MulticlassNotSupported(f"binary classification only, got {classes.size} classes")
    signs = np.where(y == classes[1], 1.0, -1.0)
    return signs, classes


def check_n_features(model: LinearModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[np.newaxis, :]
    if X.shape[1] != model.n_features:
        raise LengthMismatch(f"model has {model.n_features} features, X has {X.shape[1]}")
    return X


def decision_function(model: LinearModel, X) -> np.ndarray:
    """Margins X @ coef.T + intercept; 1D for single-target models."""
    X = check_n_features(model, X)
    values = X @ model.coef.T + model.intercept
    return values[:, 0] if model.n_targets == 1 else values


def predict(model: LinearModel, X) -> np.ndarray:
    """Regression values (same as the margins for every kind)."""
    return decision_function(model, X)


def classify(model: LinearModel, X) -> np.ndarray:
    """External labels from margin signs; a margin of exactly 0 goes to the positive class."""
    if model.classes is None:
        raise ValueError(f"{model.kind} model has no class labels")
    margins = decision_function(model, X)
    return np.where(margins >= 0, model.classes[1], model.classes[0])
