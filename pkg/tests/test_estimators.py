import numpy as np
import pytest
from scipy.special import expit

from src.errors import ConfigError, EmptyClass, LengthMismatch, MulticlassNotSupported, SingleClass, SingularSystem
from src.estimators.feature_selection import (f_classif, select_inverse_transform, select_k_best, select_percentile,
                                              select_transform)
from src.estimators.linear import classify, decision_function, encode_labels
from src.estimators.logistic import fit_logistic, logistic_gradient, logistic_objective
from src.estimators.pipeline import EstimatorSpec, fit_pipeline
from src.estimators.regression import fit_lasso_cd, fit_lasso_lars_cv, fit_ridge, lars_path
from src.estimators.svm import _svc_objective, fit_linear_svc


def _problem(seed, n=30, d=8):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    w = rng.standard_normal(d) * (rng.random(d) > 0.4)
    y = X @ w + 0.5 + 0.3 * rng.standard_normal(n)
    return X, y


def _classification(seed, n=60, d=6, shift=1.0):
    rng = np.random.default_rng(seed)
    y = np.repeat([0, 1], n // 2)
    X = rng.standard_normal((n, d))
    X[y == 1, 0] += shift
    return X, y


# =============================================================================
# RIDGE / LASSO / LARS
# =============================================================================

@pytest.mark.parametrize("seed", range(25))
def test_ridge_matches_normal_equations(seed):
    X, y = _problem(seed)
    alpha = 0.7
    model = fit_ridge(X, y, alpha)

    Xa = np.hstack([X, np.ones((len(y), 1))])
    penalty = np.eye(X.shape[1] + 1) * alpha
    penalty[-1, -1] = 0.0
    theta = np.linalg.solve(Xa.T @ Xa + penalty, Xa.T @ y)
    np.testing.assert_allclose(model.coef[0], theta[:-1], atol=1e-8)
    assert model.intercept[0] == pytest.approx(theta[-1], abs=1e-8)


def test_ridge_matches_sklearn_multi_target_and_dual():
    from sklearn.linear_model import Ridge

    rng = np.random.default_rng(0)
    for n, d in [(40, 10), (12, 30)]:
        X = rng.standard_normal((n, d))
        Y = rng.standard_normal((n, 3))
        model = fit_ridge(X, Y, 2.5)
        oracle = Ridge(alpha=2.5).fit(X, Y)
        np.testing.assert_allclose(model.coef, oracle.coef_, atol=1e-8)
        np.testing.assert_allclose(model.intercept, oracle.intercept_, atol=1e-8)


def test_ridge_alpha_zero_rank_deficient():
    X = np.ones((10, 3))
    with pytest.raises(SingularSystem):
        fit_ridge(X, np.arange(10.0), 0.0)


@pytest.mark.parametrize("seed", range(25))
def test_lasso_kkt(seed):
    X, y = _problem(seed)
    alpha = 0.1
    model = fit_lasso_cd(X, y, alpha)
    w = model.coef[0]
    r = y - X @ w - model.intercept[0]
    assert abs(r.mean()) < 1e-10
    g = X.T @ (r - r.mean()) / len(y)
    active = w != 0
    np.testing.assert_allclose(g[active], alpha * np.sign(w[active]), atol=1e-6)
    assert np.all(np.abs(g[~active]) <= alpha + 1e-6)
    assert model.converged


def test_lasso_matches_sklearn():
    from sklearn.linear_model import Lasso

    X, y = _problem(3, n=50, d=12)
    model = fit_lasso_cd(X, y, 0.05)
    oracle = Lasso(alpha=0.05, tol=1e-12, max_iter=100_000).fit(X, y)
    np.testing.assert_allclose(model.coef[0], oracle.coef_, atol=1e-6)
    assert model.intercept[0] == pytest.approx(oracle.intercept_, abs=1e-6)


@pytest.mark.parametrize("seed", range(10))
def test_lars_path_matches_coordinate_descent(seed):
    X, y = _problem(seed)
    path = lars_path(X, y)
    assert np.all(np.diff(path.alphas) <= 0)
    np.testing.assert_array_equal(path.coefs[0], 0.0)

    probes = list(path.alphas[1:-1]) + list(0.5 * (path.alphas[:-1] + path.alphas[1:]))
    for alpha in probes:
        if alpha <= 1e-8:
            continue
        cd = fit_lasso_cd(X, y, alpha)
        np.testing.assert_allclose(path.coef_at(alpha), cd.coef[0], atol=1e-6)


def test_lasso_lars_cv_picks_a_sparse_model():
    rng = np.random.default_rng(4)
    X = rng.standard_normal((80, 20))
    y = 3.0 * X[:, 2] - 2.0 * X[:, 7] + 0.1 * rng.standard_normal(80)
    model = fit_lasso_lars_cv(X, y, n_folds=5)
    assert model.kind == "lasso_lars"
    top = set(np.argsort(-np.abs(model.coef[0]))[:2])
    assert top == {2, 7}
    assert len(model.diagnostics["alphas"]) == len(model.diagnostics["cv_mse"])


# =============================================================================
# CLASSIFIERS
# =============================================================================

def test_encode_labels():
    signs, classes = encode_labels(["b", "a", "b"])
    np.testing.assert_array_equal(signs, [1, -1, 1])
    np.testing.assert_array_equal(classes, ["a", "b"])
    with pytest.raises(SingleClass):
        encode_labels([1, 1, 1])
    with pytest.raises(MulticlassNotSupported):
        encode_labels([0, 1, 2])


def test_logistic_l2_stationary_and_matches_newton_objective():
    X, y = _classification(0)
    C = 0.8
    model = fit_logistic(X, y, "l2", C)
    signs = np.where(y == 1, 1.0, -1.0)
    grad = logistic_gradient(X, signs, model.coef[0], model.intercept[0], C)
    assert np.linalg.norm(grad) < 1e-6
    assert model.converged

    # no nearby point does better
    f = logistic_objective(X, signs, model.coef[0], model.intercept[0], C)
    rng = np.random.default_rng(1)
    for _ in range(20):
        dw = 1e-3 * rng.standard_normal(X.shape[1])
        assert logistic_objective(X, signs, model.coef[0] + dw, model.intercept[0], C) >= f - 1e-12


def test_logistic_l2_matches_sklearn():
    from sklearn.linear_model import LogisticRegression

    X, y = _classification(2)
    model = fit_logistic(X, y, "l2", 0.5)
    oracle = LogisticRegression(C=0.5, tol=1e-10, max_iter=10_000).fit(X, y)
    np.testing.assert_allclose(model.coef[0], oracle.coef_[0], atol=1e-4)


@pytest.mark.parametrize("C", [0.05, 0.5, 5.0])
def test_logistic_l1_kkt(C):
    X, y = _classification(3, n=80, d=10)
    model = fit_logistic(X, y, "l1", C)
    signs = np.where(y == 1, 1.0, -1.0)
    w, b = model.coef[0], model.intercept[0]
    d1 = -C * expit(-signs * (X @ w + b))
    g = X.T @ (d1 * signs)
    active = w != 0
    np.testing.assert_allclose(g[active], -np.sign(w[active]), atol=1e-5)
    assert np.all(np.abs(g[~active]) <= 1 + 1e-5)
    assert abs((d1 * signs).sum()) < 1e-5


def test_logistic_l1_zero_at_tiny_C():
    X, y = _classification(4)
    model = fit_logistic(X, y, "l1", 1e-4)
    assert model.n_nonzero == 0


def test_svc_separable_data():
    rng = np.random.default_rng(5)
    X = np.vstack([rng.standard_normal((20, 2)) + [4, 0], rng.standard_normal((20, 2)) - [4, 0]])
    y = np.repeat([1, 0], 20)
    for loss in ("hinge", "squared_hinge"):
        model = fit_linear_svc(X, y, "l2", loss, C=1000.0)
        assert np.all(classify(model, X) == y)
        assert model.converged


def test_svc_hinge_not_worse_than_sklearn():
    from sklearn.svm import SVC

    X, y = _classification(6, n=50, d=5, shift=1.5)
    signs = np.where(y == 1, 1.0, -1.0)
    model = fit_linear_svc(X, y, "l2", "hinge", C=0.3)
    oracle = SVC(kernel="linear", C=0.3, tol=1e-8).fit(X, y)
    ours = _svc_objective(X, signs, model.coef[0], model.intercept[0], 0.3, "hinge", "l2")
    theirs = _svc_objective(X, signs, oracle.coef_[0], oracle.intercept_[0], 0.3, "hinge", "l2")
    assert ours <= theirs * (1 + 1e-6) + 1e-6


def test_svc_l1_is_sparse_and_requires_squared_hinge():
    rng = np.random.default_rng(7)
    X = rng.standard_normal((60, 30))
    y = (X[:, 0] + 0.5 * X[:, 1] > 0).astype(int)
    model = fit_linear_svc(X, y, "l1", "squared_hinge", C=0.05)
    assert 0 < model.n_nonzero < 30
    assert model.coef[0, 0] != 0
    with pytest.raises(ConfigError):
        fit_linear_svc(X, y, "l1", "hinge")


def test_classify_zero_margin_goes_positive():
    X, y = _classification(8)
    model = fit_logistic(X, y, "l1", 1e-6)
    np.testing.assert_allclose(decision_function(model, X), model.intercept[0])
    model.intercept[:] = 0.0
    assert np.all(classify(model, X) == 1)


def test_decision_function_checks_features():
    X, y = _classification(9)
    model = fit_logistic(X, y, "l2", 1.0)
    with pytest.raises(LengthMismatch):
        decision_function(model, X[:, :3])


# =============================================================================
# FEATURE SELECTION AND PIPELINES
# =============================================================================

def test_f_classif_hand_case():
    X = np.array([[1.0], [2.0], [3.0], [2.0], [3.0], [4.0]])
    y = [0, 0, 0, 1, 1, 1]
    assert f_classif(X, y)[0] == pytest.approx(1.5, abs=1e-12)


def test_f_classif_matches_sklearn():
    from sklearn.feature_selection import f_classif as sk_f_classif

    rng = np.random.default_rng(10)
    X = rng.standard_normal((40, 100))
    y = rng.integers(0, 3, size=40)
    y[:3] = [0, 1, 2]
    np.testing.assert_allclose(f_classif(X, y), sk_f_classif(X, y)[0], rtol=1e-10)


def test_f_classif_degenerate_columns():
    X = np.array([[1.0, 5.0], [1.0, 5.0], [2.0, 5.0], [2.0, 5.0]])
    F = f_classif(X, [0, 0, 1, 1])
    assert F[0] == np.inf
    assert F[1] == 0.0
    with pytest.raises(SingleClass):
        f_classif(X, [0, 0, 0, 0])
    with pytest.raises(EmptyClass):
        f_classif(X[:2], [0, 1])


def test_select_k_best_ties_and_inverse():
    sel = select_k_best([3.0, 1.0, 3.0, 2.0], 2)
    np.testing.assert_array_equal(sel.indices, [0, 2])
    X = np.arange(8.0).reshape(2, 4)
    np.testing.assert_array_equal(select_transform(sel, X), X[:, [0, 2]])
    np.testing.assert_array_equal(select_inverse_transform(sel, np.array([[7.0, 9.0]])), [[7.0, 0.0, 9.0, 0.0]])


def test_select_percentile_rounds_up():
    assert select_percentile(np.arange(10.0), 25).k == 3


def test_pipeline_weights_live_on_selected_features():
    rng = np.random.default_rng(11)
    X = rng.standard_normal((40, 50))
    y = np.tile([0, 1], 20)
    X[y == 1, :5] += 3.0
    spec = EstimatorSpec("svc_hinge_l2", {"C": 1.0}, select_k=10)
    fitted = fit_pipeline(spec, X, y)
    coef = fitted.full_coef()[0]
    assert np.count_nonzero(coef) <= 10
    assert not coef[~fitted.selector.support].any()
    assert np.mean(fitted.predict(X) == y) == 1.0


def test_estimator_spec_validation():
    with pytest.raises(ConfigError):
        EstimatorSpec("random_forest")
    with pytest.raises(ConfigError):
        EstimatorSpec("ridge", select_k=3, select_percentile=10)
    spec = EstimatorSpec("logreg_l1", {"C": 1.0}).with_params(C=0.1, select_k=5)
    assert spec.params == {"C": 0.1} and spec.select_k == 5
