"""Linear support vector classifiers."""
import logging
from typing import Literal

import numpy as np

from src.errors import ConfigError
from src.estimators import _kernels
from src.estimators.linear import LinearModel, encode_labels

logger = logging.getLogger(__name__)

SMO_TOL = 1e-9
PROX_TOL = 1e-6
# pair updates per sample; one "epoch" is n pair updates
MAX_EPOCHS = 2000


def _svc_objective(X, signs, w, b, C, loss, penalty) -> float:
    margins = signs * (X @ w + b)
    slack = np.maximum(0.0, 1.0 - margins)
    data_term = C * (slack ** 2 if loss == "squared_hinge" else slack).sum()
    reg_term = np.abs(w).sum() if penalty == "l1" else 0.5 * float(w @ w)
    return float(reg_term + data_term)


def _fit_dual(X, signs, C, loss):
    """SMO on the dual; squared hinge adds 1/(2C) to the Gram diagonal and lifts the box."""
    n = X.shape[0]
    Q = (X @ X.T) * np.outer(signs, signs)
    if loss == "squared_hinge":
        Q[np.diag_indices(n)] += 0.5 / C
        upper = np.inf
    else:
        upper = C
    alpha, grad, n_iter, converged = _kernels.smo_solve(Q, signs, upper, SMO_TOL, MAX_EPOCHS * max(n, 50))
    w = (alpha * signs) @ X

    free = (alpha > 0) & (alpha < upper)
    if free.any():
        b = float(np.mean(-signs[free] * grad[free]))
    else:
        v = -signs * grad
        up = ((signs > 0) & (alpha < upper)) | ((signs < 0) & (alpha > 0))
        low = ((signs > 0) & (alpha > 0)) | ((signs < 0) & (alpha < upper))
        hi = v[up].max() if up.any() else 0.0
        lo = v[low].min() if low.any() else 0.0
        b = 0.5 * (hi + lo)
    return w, b, int(n_iter), bool(converged), int(np.count_nonzero(alpha))


def fit_linear_svc(X, y, penalty: Literal["l1", "l2"] = "l2",
                   loss: Literal["hinge", "squared_hinge"] = "hinge", C: float = 1.0) -> LinearModel:
    """Fit a binary linear SVM with an unpenalized intercept.

    l2 penalties are solved in the dual by SMO, the l1/squared-hinge
    combination by proximal Newton coordinate descent in the primal.
    Non-convergence is reported on the model (``converged``) with a warning.
    """
    if C <= 0:
        raise ConfigError(f"C must be > 0, got {C}")
    if penalty not in ("l1", "l2") or loss not in ("hinge", "squared_hinge"):
        raise ConfigError(f"unknown penalty/loss {penalty}/{loss}")
    if penalty == "l1" and loss == "hinge":
        raise ConfigError("l1 penalty requires the squared_hinge loss")

    X = np.asarray(X, dtype=np.float64)
    signs, classes = encode_labels(y)

    if penalty == "l2":
        w, b, n_iter, converged, n_sv = _fit_dual(X, signs, C, loss)
        kind = "svc_hinge_l2" if loss == "hinge" else "svc_sqhinge_l2"
        diagnostics = {"n_support": n_sv}
    else:
        w, b, n_iter, _, kkt, converged = _kernels.prox_newton_l1(
            X, signs, C, _kernels.LOSS_SQUARED_HINGE, PROX_TOL, MAX_EPOCHS)
        kind = "svc_sqhinge_l1"
        diagnostics = {"kkt_violation": float(kkt)}

    objective = _svc_objective(X, signs, w, b, C, loss, penalty)
    if not converged:
        logger.warning(f"NoConvergence: {kind} C={C:g} stopped after {n_iter} iterations (objective {objective:.6g})")
    return LinearModel(w[np.newaxis, :], np.array([b]), kind, float(C), classes,
                       converged=bool(converged), n_iter=int(n_iter), objective=objective, diagnostics=diagnostics)
