"""Binary logistic regression with l1 or l2 penalty."""
import logging
from typing import Literal

import numpy as np
from scipy import linalg
from scipy.special import expit, log_expit

from src.errors import ConfigError, SingularSystem
from src.estimators import _kernels
from src.estimators.linear import LinearModel, encode_labels

logger = logging.getLogger(__name__)

GRAD_TOL = 1e-6
# Newton loop target; GRAD_TOL decides the reported converged flag
NEWTON_TOL = 1e-8
NEWTON_MAX_ITER = 100
L1_MAX_OUTER = 2000


def logistic_objective(X, signs, w, b, C, penalty: str = "l2") -> float:
    z = signs * (X @ w + b)
    reg = np.abs(w).sum() if penalty == "l1" else 0.5 * float(w @ w)
    return float(reg - C * log_expit(z).sum())


def logistic_gradient(X, signs, w, b, C) -> np.ndarray:
    """Gradient of the l2 objective in (w, b)."""
    p = expit(-signs * (X @ w + b))
    g_data = -C * (signs * p)
    return np.concatenate([w + X.T @ g_data, [g_data.sum()]])


def _fit_newton_l2(X, signs, C):
    """Full-Hessian Newton with backtracking on 1/2||w||^2 + C sum log(1 + exp(-z))."""
    n, d = X.shape
    Xa = np.hstack([X, np.ones((n, 1))])
    reg = np.ones(d + 1)
    reg[-1] = 0.0
    theta = np.zeros(d + 1)
    f = logistic_objective(X, signs, theta[:d], theta[d], C)
    converged = False
    it = 0
    for it in range(1, NEWTON_MAX_ITER + 1):
        grad = logistic_gradient(X, signs, theta[:d], theta[d], C)
        if np.linalg.norm(grad) <= NEWTON_TOL * (1.0 + np.linalg.norm(theta[:d])):
            converged = True
            break
        p = expit(-signs * (Xa @ theta))
        curvature = C * p * (1.0 - p)
        H = (Xa.T * curvature) @ Xa
        H[np.diag_indices(d + 1)] += reg
        try:
            step = -linalg.cho_solve(linalg.cho_factor(H), grad)
        except linalg.LinAlgError as e:
            raise SingularSystem("logistic Hessian is not positive definite") from e

        slope = float(grad @ step)
        t = 1.0
        for _ in range(50):
            candidate = theta + t * step
            f_new = logistic_objective(X, signs, candidate[:d], candidate[d], C)
            if f_new <= f + 1e-4 * t * slope:
                break
            t *= 0.5
        else:
            # no descent possible at machine precision
            converged = np.linalg.norm(grad) <= GRAD_TOL * (1.0 + np.linalg.norm(theta[:d]))
            break
        theta = candidate
        f = f_new
    else:
        grad = logistic_gradient(X, signs, theta[:d], theta[d], C)
        converged = np.linalg.norm(grad) <= GRAD_TOL * (1.0 + np.linalg.norm(theta[:d]))
    return theta[:d], float(theta[d]), it, bool(converged)


def fit_logistic(X, y, penalty: Literal["l1", "l2"] = "l2", C: float = 1.0) -> LinearModel:
    """Fit penalty(w) + C * sum log(1 + exp(-y_i (w.x_i + b))).

    l2 uses Newton iterations on the full Hessian; l1 uses proximal Newton
    with cyclic coordinate descent and soft-thresholding (KKT tolerance 1e-6).
    """
    if C <= 0:
        raise ConfigError(f"C must be > 0, got {C}")
    if penalty not in ("l1", "l2"):
        raise ConfigError(f"unknown penalty {penalty!r}")

    X = np.asarray(X, dtype=np.float64)
    signs, classes = encode_labels(y)

    if penalty == "l2":
        w, b, n_iter, converged = _fit_newton_l2(X, signs, C)
        diagnostics = {"grad_norm": float(np.linalg.norm(logistic_gradient(X, signs, w, b, C)))}
    else:
        w, b, n_iter, _, kkt, converged = _kernels.prox_newton_l1(
            X, signs, C, _kernels.LOSS_LOGISTIC, GRAD_TOL, L1_MAX_OUTER)
        diagnostics = {"kkt_violation": float(kkt)}

    kind = f"logreg_{penalty}"
    objective = logistic_objective(X, signs, w, b, C, penalty)
    if not converged:
        logger.warning(f"NoConvergence: {kind} C={C:g} stopped after {n_iter} iterations (objective {objective:.6g})")
    return LinearModel(w[np.newaxis, :], np.array([b]), kind, float(C), classes,
                       converged=bool(converged), n_iter=int(n_iter), objective=objective, diagnostics=diagnostics)
