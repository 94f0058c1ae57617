"""
Inner solver loops compiled with numba.

Callers pass C-contiguous float64 arrays. All kernels are deterministic
(cyclic coordinate order, first-index tie breaks) and release the GIL so
per-voxel fits can run on threads.
"""
import numba as nb
import numpy as np

LOSS_LOGISTIC = 0
LOSS_SQUARED_HINGE = 1

# Floor on coordinate curvature; squared hinge has zero curvature once every
# margin is satisfied.
CURVATURE_FLOOR = 1e-12


@nb.njit(cache=True, nogil=True)
def _soft_threshold(z, t):
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


# =============================================================================
# SMO FOR THE L2-PENALIZED SVM DUAL
# =============================================================================

@nb.njit(cache=True, nogil=True)
def _smo(Q, y, upper, tol, max_iter):
    """Maximal-violating-pair SMO on min 1/2 a'Qa - sum(a), 0 <= a <= upper, y'a = 0.

    Q already carries the labels (Q_ij = y_i y_j <x_i, x_j>). ``upper`` may be
    inf (squared hinge). Returns (alpha, grad, n_iter, converged).
    """
    n = y.shape[0]
    alpha = np.zeros(n)
    grad = -np.ones(n)
    it = 0
    converged = False
    while it < max_iter:
        # i: max of -y G over I_up, j: min of -y G over I_low
        i = -1
        j = -1
        g_max = -np.inf
        g_min = np.inf
        for t in range(n):
            v = -y[t] * grad[t]
            if (y[t] > 0 and alpha[t] < upper) or (y[t] < 0 and alpha[t] > 0):
                if v > g_max:
                    g_max = v
                    i = t
            if (y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < upper):
                if v < g_min:
                    g_min = v
                    j = t
        if i < 0 or j < 0 or g_max - g_min < tol:
            converged = True
            break

        old_i = alpha[i]
        old_j = alpha[j]
        if y[i] != y[j]:
            quad = Q[i, i] + Q[j, j] + 2.0 * Q[i, j]
            if quad <= 0:
                quad = 1e-12
            delta = (-grad[i] - grad[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = -diff
            if diff > 0:
                if alpha[i] > upper:
                    alpha[i] = upper
                    alpha[j] = upper - diff
            else:
                if alpha[j] > upper:
                    alpha[j] = upper
                    alpha[i] = upper + diff
        else:
            quad = Q[i, i] + Q[j, j] - 2.0 * Q[i, j]
            if quad <= 0:
                quad = 1e-12
            delta = (grad[i] - grad[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > upper:
                if alpha[i] > upper:
                    alpha[i] = upper
                    alpha[j] = total - upper
            else:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = total
            if total > upper:
                if alpha[j] > upper:
                    alpha[j] = upper
                    alpha[i] = total - upper
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = total

        d_i = alpha[i] - old_i
        d_j = alpha[j] - old_j
        for t in range(n):
            grad[t] += Q[t, i] * d_i + Q[t, j] * d_j
        it += 1
    return alpha, grad, it, converged


def smo_solve(Q: np.ndarray, y: np.ndarray, upper: float, tol: float, max_iter: int):
    return _smo(np.ascontiguousarray(Q, dtype=np.float64), np.ascontiguousarray(y, dtype=np.float64),
                float(upper), float(tol), int(max_iter))


# =============================================================================
# PROXIMAL NEWTON FOR L1-PENALIZED CLASSIFIERS
# =============================================================================

@nb.njit(cache=True, nogil=True)
def _loss_derivatives(z, C, loss, d1, d2):
    """Fill C*l'(z) and C*l''(z); return C*sum l(z)."""
    total = 0.0
    for i in range(z.shape[0]):
        zi = z[i]
        if loss == LOSS_LOGISTIC:
            if zi >= 0:
                e = np.exp(-zi)
                total += np.log1p(e)
                p = e / (1.0 + e)
            else:
                e = np.exp(zi)
                total += -zi + np.log1p(e)
                p = 1.0 / (1.0 + e)
            d1[i] = -C * p
            d2[i] = C * p * (1.0 - p)
        else:
            slack = 1.0 - zi
            if slack > 0:
                total += slack * slack
                d1[i] = -2.0 * C * slack
                d2[i] = 2.0 * C
            else:
                d1[i] = 0.0
                d2[i] = 0.0
    return C * total


@nb.njit(cache=True, nogil=True)
def _l1_objective(Xt, y, w, b, C, loss, z, d1, d2):
    n = y.shape[0]
    for i in range(n):
        z[i] = b
    for j in range(w.shape[0]):
        wj = w[j]
        if wj != 0.0:
            for i in range(n):
                z[i] += wj * Xt[j, i]
    for i in range(n):
        z[i] *= y[i]
    return np.sum(np.abs(w)) + _loss_derivatives(z, C, loss, d1, d2)


@nb.njit(cache=True, nogil=True)
def _prox_newton_l1(Xt, y, C, loss, tol, max_outer, max_inner):
    """min ||w||_1 + C sum l(y_i (x_i.w + b)) with an unpenalized intercept.

    Each outer step builds the second-order model of the loss, minimizes it
    plus the l1 term by cyclic coordinate descent, then backtracks along the
    resulting direction. Stops when the KKT violation drops below ``tol``.
    Returns (w, b, n_iter, objective, kkt, converged).
    """
    d, n = Xt.shape
    w = np.zeros(d)
    b = 0.0
    z = np.empty(n)
    d1 = np.empty(n)
    d2 = np.empty(n)
    z_try = np.empty(n)
    d1_try = np.empty(n)
    d2_try = np.empty(n)
    grad = np.empty(d)
    u = np.empty(n)
    step = np.empty(d)
    w_try = np.empty(d)

    f = _l1_objective(Xt, y, w, b, C, loss, z, d1, d2)
    kkt = np.inf
    converged = False
    it = 0
    while it < max_outer:
        # gradient of the smooth part and KKT violation
        g_b = 0.0
        for i in range(n):
            g_b += d1[i] * y[i]
        kkt = abs(g_b)
        for j in range(d):
            s = 0.0
            for i in range(n):
                s += d1[i] * y[i] * Xt[j, i]
            grad[j] = s
            if w[j] > 0:
                v = abs(s + 1.0)
            elif w[j] < 0:
                v = abs(s - 1.0)
            else:
                v = max(abs(s) - 1.0, 0.0)
            if v > kkt:
                kkt = v
        if kkt < tol:
            converged = True
            break

        # coordinate descent on the quadratic model
        for j in range(d):
            step[j] = 0.0
        step_b = 0.0
        for i in range(n):
            u[i] = 0.0
        for _ in range(max_inner):
            max_move = 0.0
            for j in range(d):
                g = grad[j]
                h = CURVATURE_FLOOR
                for i in range(n):
                    xij = Xt[j, i]
                    g += d2[i] * xij * u[i]
                    h += d2[i] * xij * xij
                current = w[j] + step[j]
                target = _soft_threshold(current - g / h, 1.0 / h)
                delta = target - current
                if delta != 0.0:
                    step[j] += delta
                    for i in range(n):
                        u[i] += delta * Xt[j, i]
                    move = abs(delta) * np.sqrt(h)
                    if move > max_move:
                        max_move = move
            g = g_b
            h = CURVATURE_FLOOR
            for i in range(n):
                g += d2[i] * u[i]
                h += d2[i]
            delta = -g / h
            step_b += delta
            for i in range(n):
                u[i] += delta
            move = abs(delta) * np.sqrt(h)
            if move > max_move:
                max_move = move
            if max_move < 0.1 * kkt:
                break

        # Armijo backtracking on the composite objective
        l1_now = np.sum(np.abs(w))
        decrease = g_b * step_b
        l1_next = 0.0
        for j in range(d):
            decrease += grad[j] * step[j]
            l1_next += abs(w[j] + step[j])
        decrease += l1_next - l1_now
        t = 1.0
        accepted = False
        f_try = f
        b_try = b
        for _ in range(40):
            for j in range(d):
                w_try[j] = w[j] + t * step[j]
            b_try = b + t * step_b
            f_try = _l1_objective(Xt, y, w_try, b_try, C, loss, z_try, d1_try, d2_try)
            if f_try <= f + 0.01 * t * decrease:
                accepted = True
                break
            t *= 0.5
        it += 1
        if not accepted:
            break
        w[:] = w_try
        b = b_try
        z[:] = z_try
        d1[:] = d1_try
        d2[:] = d2_try
        f = f_try
    return w, b, it, f, kkt, converged


def prox_newton_l1(X: np.ndarray, y: np.ndarray, C: float, loss: int,
                   tol: float = 1e-6, max_outer: int = 2000, max_inner: int = 50):
    Xt = np.ascontiguousarray(X.T, dtype=np.float64)
    return _prox_newton_l1(Xt, np.ascontiguousarray(y, dtype=np.float64), float(C), int(loss),
                           float(tol), int(max_outer), int(max_inner))


# =============================================================================
# LASSO COORDINATE DESCENT
# =============================================================================

@nb.njit(cache=True, nogil=True)
def _lasso_cd(Xt, y, alpha, tol, max_epochs):
    """min (1/2n)||y - Xw||^2 + alpha ||w||_1 on centered data.

    Returns (w, n_epochs, kkt, converged).
    """
    d, n = Xt.shape
    w = np.zeros(d)
    r = y.copy()
    norms = np.empty(d)
    for j in range(d):
        s = 0.0
        for i in range(n):
            s += Xt[j, i] * Xt[j, i]
        norms[j] = s / n

    kkt = np.inf
    converged = False
    epoch = 0
    while epoch < max_epochs:
        epoch += 1
        max_move = 0.0
        for j in range(d):
            if norms[j] == 0.0:
                continue
            rho = 0.0
            for i in range(n):
                rho += Xt[j, i] * r[i]
            rho = rho / n + w[j] * norms[j]
            new = _soft_threshold(rho, alpha) / norms[j]
            delta = new - w[j]
            if delta != 0.0:
                for i in range(n):
                    r[i] -= delta * Xt[j, i]
                w[j] = new
                move = abs(delta) * np.sqrt(norms[j])
                if move > max_move:
                    max_move = move
        if max_move > tol:
            continue
        kkt = 0.0
        for j in range(d):
            g = 0.0
            for i in range(n):
                g += Xt[j, i] * r[i]
            g /= n
            if w[j] > 0:
                v = abs(g - alpha)
            elif w[j] < 0:
                v = abs(g + alpha)
            else:
                v = max(abs(g) - alpha, 0.0)
            if v > kkt:
                kkt = v
        if kkt <= tol:
            converged = True
            break
    return w, epoch, kkt, converged


def lasso_cd(Xc: np.ndarray, yc: np.ndarray, alpha: float, tol: float = 1e-10, max_epochs: int = 100_000):
    Xt = np.ascontiguousarray(Xc.T, dtype=np.float64)
    return _lasso_cd(Xt, np.ascontiguousarray(yc, dtype=np.float64), float(alpha), float(tol), int(max_epochs))
