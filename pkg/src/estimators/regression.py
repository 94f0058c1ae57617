"""
Regularized linear regression: ridge, lasso by coordinate descent, the
lasso-modified LARS path and its cross-validated selection.

All solvers center X and y and restore the intercept as
``mean(y) - mean(X) @ w``.
"""
import logging
from dataclasses import dataclass, field
from typing import List

import numpy as np
from scipy import linalg

from src.errors import ConfigError, DegenerateCorrelation, ShapeMismatch, SingularSystem
from src.estimators import _kernels
from src.estimators.linear import LinearModel

logger = logging.getLogger(__name__)

LASSO_TOL = 1e-10
LASSO_MAX_EPOCHS = 100_000
# correlations below this (relative to the first breakpoint) count as zero
LARS_EPS = 1e-12


def _center(X, Y):
    x_mean = X.mean(axis=0)
    y_mean = Y.mean(axis=0)
    return X - x_mean, Y - y_mean, x_mean, y_mean


def _as_2d_targets(Y) -> tuple[np.ndarray, bool]:
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        return Y[:, np.newaxis], True
    return Y, False


# =============================================================================
# RIDGE
# =============================================================================

def fit_ridge(X, Y, alpha: float = 1.0) -> LinearModel:
    """Multi-target ridge: coef = (Xc'Xc + alpha I)^-1 Xc'Yc on centered data.

    The n x n dual system is solved instead when there are fewer samples
    than features.
    """
    if alpha < 0:
        raise ConfigError(f"alpha must be >= 0, got {alpha}")
    X = np.asarray(X, dtype=np.float64)
    Y, _ = _as_2d_targets(Y)
    if X.shape[0] != Y.shape[0]:
        raise ShapeMismatch(f"X has {X.shape[0]} rows, Y has {Y.shape[0]}")
    Xc, Yc, x_mean, y_mean = _center(X, Y)
    n, d = Xc.shape

    if alpha == 0 and np.linalg.matrix_rank(Xc) < d:
        raise SingularSystem(f"alpha=0 with rank-deficient centered X ({n}x{d})")

    try:
        if n >= d or alpha == 0:
            gram = Xc.T @ Xc
            gram[np.diag_indices(d)] += alpha
            coef = linalg.solve(gram, Xc.T @ Yc, assume_a="pos").T
        else:
            kernel = Xc @ Xc.T
            kernel[np.diag_indices(n)] += alpha
            coef = (Xc.T @ linalg.solve(kernel, Yc, assume_a="pos")).T
    except linalg.LinAlgError as e:
        raise SingularSystem(f"ridge system is singular: {e}") from e

    intercept = y_mean - coef @ x_mean
    return LinearModel(coef, intercept, "ridge", float(alpha))


# =============================================================================
# LASSO (COORDINATE DESCENT)
# =============================================================================

def lasso_objective(X, y, w, b, alpha) -> float:
    r = y - X @ w - b
    return float(0.5 * (r @ r) / len(y) + alpha * np.abs(w).sum())


def fit_lasso_cd(X, y, alpha: float, tol: float = LASSO_TOL) -> LinearModel:
    """min (1/2n)||y - Xw - b||^2 + alpha ||w||_1 by cyclic coordinate descent."""
    if alpha <= 0:
        raise ConfigError(f"alpha must be > 0, got {alpha}")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.shape[0] != y.shape[0]:
        raise ShapeMismatch(f"X has {X.shape[0]} rows, y has {y.shape[0]}")
    Xc, yc, x_mean, y_mean = _center(X, y)

    w, n_epochs, kkt, converged = _kernels.lasso_cd(Xc, yc, alpha, tol, LASSO_MAX_EPOCHS)
    b = float(y_mean - x_mean @ w)
    objective = lasso_objective(X, y, w, b, alpha)
    if not converged:
        logger.warning(f"NoConvergence: lasso alpha={alpha:g} KKT violation {kkt:.3g} after {n_epochs} epochs")
    return LinearModel(w[np.newaxis, :], np.array([b]), "lasso", float(alpha),
                       converged=bool(converged), n_iter=int(n_epochs), objective=objective,
                       diagnostics={"kkt_violation": float(kkt)})


# =============================================================================
# LARS
# =============================================================================

@dataclass
class LarsPath:
    """Breakpoints of the lasso path in decreasing alpha, on (1/2n) scaling."""
    alphas: np.ndarray  # (n_breakpoints,)
    coefs: np.ndarray  # (n_breakpoints, n_features)
    x_mean: np.ndarray
    y_mean: float
    active: List[int] = field(default_factory=list)
    n_iter: int = 0

    def coef_at(self, alpha: float) -> np.ndarray:
        """Linear interpolation between breakpoints; clamped at both ends."""
        if alpha >= self.alphas[0]:
            return self.coefs[0].copy()
        if alpha <= self.alphas[-1]:
            return self.coefs[-1].copy()
        xs = self.alphas[::-1]
        return np.array([np.interp(alpha, xs, self.coefs[::-1, j]) for j in range(self.coefs.shape[1])])

    def intercept_at(self, coef: np.ndarray) -> float:
        return float(self.y_mean - self.x_mean @ coef)


def lars_path(X, y, max_iter: int = 500) -> LarsPath:
    """Lasso-modified least angle regression on centered data.

    Each step moves along the equiangular direction of the active set until
    an inactive feature reaches the same absolute correlation (it joins) or an
    active coefficient crosses zero (it leaves). Alphas are the common
    absolute correlation divided by n.
    """
    if max_iter < 1:
        raise ConfigError(f"max_iter must be >= 1, got {max_iter}")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.shape[0] != y.shape[0]:
        raise ShapeMismatch(f"X has {X.shape[0]} rows, y has {y.shape[0]}")
    Xc, yc, x_mean, y_mean = _center(X, y)
    n, d = Xc.shape
    max_active = min(n - 1, d)

    coef = np.zeros(d)
    corr = Xc.T @ yc
    first = int(np.argmax(np.abs(corr)))
    c_max = float(abs(corr[first]))
    alphas = [c_max / n]
    coefs = [coef.copy()]
    eps = LARS_EPS * max(c_max, 1.0)
    active: List[int] = []
    if c_max <= eps or max_active < 1:
        return LarsPath(np.array(alphas), np.array(coefs), x_mean, float(y_mean), active, 0)
    active.append(first)

    n_iter = 0
    while n_iter < max_iter:
        idx = np.array(active)
        signs = np.sign(corr[idx])
        XA = Xc[:, idx] * signs
        gram = XA.T @ XA
        try:
            factor = linalg.cho_factor(gram)
            g1 = linalg.cho_solve(factor, np.ones(len(idx)))
        except linalg.LinAlgError as e:
            raise DegenerateCorrelation(f"active set {active} has a singular Gram matrix") from e
        norm = float(g1.sum())
        if not np.isfinite(norm) or norm <= 0:
            raise DegenerateCorrelation(f"active set {active} has a degenerate equiangular direction")
        A = 1.0 / np.sqrt(norm)
        direction = A * g1
        u = XA @ direction
        a = Xc.T @ u

        # full least-squares step brings every active correlation to zero
        gamma = c_max / A
        joiner = -1
        if len(active) < max_active:
            inactive = np.setdiff1d(np.arange(d), idx)
            best = np.inf
            for j in inactive:
                for num, den in ((c_max - corr[j], A - a[j]), (c_max + corr[j], A + a[j])):
                    if den > eps:
                        g = num / den
                        if eps < g < best:
                            best, joiner = g, int(j)
            if joiner >= 0 and best < gamma:
                gamma = best
            else:
                joiner = -1

        # lasso modification: an active coefficient reaching zero leaves
        leaver = -1
        moves = signs * direction
        with np.errstate(divide="ignore", invalid="ignore"):
            crossing = np.where(moves != 0, -coef[idx] / moves, np.inf)
        crossing[crossing <= eps] = np.inf
        if crossing.size and crossing.min() < gamma:
            k = int(np.argmin(crossing))
            gamma = float(crossing[k])
            leaver = int(idx[k])
            joiner = -1

        coef[idx] += gamma * moves
        c_max -= gamma * A
        n_iter += 1
        corr = Xc.T @ (yc - Xc @ coef)

        if leaver >= 0:
            coef[leaver] = 0.0
            active.remove(leaver)
            logger.debug(f"lars step {n_iter}: feature {leaver} leaves at alpha={max(c_max, 0.0) / n:.6g}")
        elif joiner >= 0:
            active.append(joiner)
            logger.debug(f"lars step {n_iter}: feature {joiner} joins at alpha={c_max / n:.6g}")

        alphas.append(max(c_max, 0.0) / n)
        coefs.append(coef.copy())
        if c_max <= eps or not active:
            break

    return LarsPath(np.array(alphas), np.array(coefs), x_mean, float(y_mean), active, n_iter)


def fit_lasso_lars_cv(X, y, n_folds: int = 5, max_iter: int = 500) -> LinearModel:
    """Pick alpha by k-fold CV over LARS paths, then refit on all samples.

    Every fold path is evaluated on the union of all breakpoints; the alpha
    with the lowest mean held-out squared error wins (ties go to the larger
    alpha).
    """
    from src.evaluation.cross_validation import kfold

    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    plan = kfold(len(y), n_folds)

    paths = [lars_path(X[train], y[train], max_iter) for train, _ in plan.folds]
    grid = np.unique(np.concatenate([p.alphas for p in paths]))[::-1]

    mse = np.empty((len(paths), len(grid)))
    for f, (path, (_, test)) in enumerate(zip(paths, plan.folds)):
        for g, alpha in enumerate(grid):
            w = path.coef_at(alpha)
            residual = y[test] - X[test] @ w - path.intercept_at(w)
            mse[f, g] = float(np.mean(residual ** 2))
    mean_mse = mse.mean(axis=0)
    best = int(np.argmin(mean_mse))
    best_alpha = float(grid[best])

    full = lars_path(X, y, max_iter)
    w = full.coef_at(best_alpha)
    b = full.intercept_at(w)
    logger.debug(f"lasso-lars cv: alpha={best_alpha:.6g}, {np.count_nonzero(w)} nonzeros, cv mse={mean_mse[best]:.6g}")
    return LinearModel(w[np.newaxis, :], np.array([b]), "lasso_lars", best_alpha, n_iter=full.n_iter,
                       objective=float(mean_mse[best]),
                       diagnostics={"alphas": grid, "cv_mse": mean_mse})
