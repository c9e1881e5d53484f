import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from coverloop.errors import ConfigError, DataError
from coverloop.ml import fit_lasso, fit_ols, fit_ridge
from coverloop.ml.linear import soft_threshold
from oracles import gd_least_squares, ols_objective


def test_exact_line():
    m = fit_ols([[0], [1], [2]], [1, 3, 5])
    assert m.coef[0] == pytest.approx(2.0, abs=1e-12)
    assert m.intercept == pytest.approx(1.0, abs=1e-12)


def test_no_features_predicts_mean():
    m = fit_ols(np.zeros((4, 0)), [1.0, 2.0, 3.0, 6.0])
    assert m.predict(np.zeros((2, 0))).tolist() == [3.0, 3.0]


def test_ols_not_worse_than_gradient_descent():
    rnd = np.random.default_rng(1)
    for _ in range(10):
        X = rnd.normal(size=(20, 3))
        y = X @ rnd.normal(size=3) + rnd.normal(size=20)
        m = fit_ols(X, y)
        w, b = gd_least_squares(X, y)
        assert ols_objective(X, y, m.coef, m.intercept) <= ols_objective(X, y, w, b) + 1e-6


def test_rank_deficient_gives_min_norm():
    rnd = np.random.default_rng(2)
    x = rnd.normal(size=30)
    X = np.column_stack([x, x])
    m = fit_ols(X, 3 * x + 1)
    assert m.coef == pytest.approx([1.5, 1.5], abs=1e-9)


@given(st.integers(0, 10_000))
def test_residuals_orthogonal(seed):
    rnd = np.random.default_rng(seed)
    X = rnd.normal(size=(25, 4))
    y = rnd.normal(size=25)
    m = fit_ols(X, y)
    r = m.predict(X) - y
    assert np.abs(X.T @ r).max() < 1e-8
    assert abs(r.sum()) < 1e-8


def test_non_finite_rejected():
    with pytest.raises(DataError):
        fit_ols([[np.nan]], [1.0])


def test_ridge_zero_is_ols():
    rnd = np.random.default_rng(3)
    X, y = rnd.normal(size=(30, 3)), rnd.normal(size=30)
    assert np.abs(fit_ridge(X, y, 0.0).coef - fit_ols(X, y).coef).max() <= 1e-8


@given(st.integers(0, 10_000), st.floats(0.0, 50.0))
def test_ridge_one_feature_closed_form(seed, lam):
    rnd = np.random.default_rng(seed)
    x = rnd.normal(size=15) * 3
    x -= x.mean()
    y = 2 * x + rnd.normal(size=15)
    w = fit_ridge(x.reshape(-1, 1), y, lam).coef[0]
    assert w == pytest.approx((x @ (y - y.mean())) / (x @ x + lam), rel=1e-9, abs=1e-12)


def test_ridge_huge_penalty_shrinks_to_mean():
    rnd = np.random.default_rng(4)
    X, y = rnd.normal(size=(40, 3)), rnd.normal(size=40)
    m = fit_ridge(X, y, 1e9)
    assert np.linalg.norm(m.coef) < 1e-3
    assert m.intercept == pytest.approx(y.mean(), abs=1e-3)


def test_negative_penalty_rejected():
    with pytest.raises(ConfigError):
        fit_ridge([[1.0], [2.0]], [1.0, 2.0], -1)
    with pytest.raises(ConfigError):
        fit_lasso([[1.0], [2.0]], [1.0, 2.0], -1)


def test_lasso_zero_matches_ols():
    rnd = np.random.default_rng(5)
    X = rnd.normal(size=(50, 3))
    y = X @ [1.0, -2.0, 0.5] + 0.1 * rnd.normal(size=50)
    assert np.abs(fit_lasso(X, y, 0.0).coef - fit_ols(X, y).coef).max() < 1e-4


def _standardized(rnd, n):
    x = rnd.normal(size=n)
    return (x - x.mean()) / x.std()


@given(st.integers(0, 10_000), st.floats(0.0, 2.0))
def test_lasso_one_feature_closed_form(seed, lam):
    rnd = np.random.default_rng(seed)
    x = _standardized(rnd, 40)
    y = 0.7 * x + rnd.normal(size=40)
    n = len(x)
    expected = soft_threshold(x @ (y - y.mean()) / n, lam) / (x @ x / n)
    assert abs(fit_lasso(x.reshape(-1, 1), y, lam).coef[0] - expected) <= 1e-6


def test_lasso_all_zero_at_lambda_max():
    rnd = np.random.default_rng(6)
    X = rnd.normal(size=(60, 4))
    y = X @ [1.0, 0.0, -1.0, 2.0] + rnd.normal(size=60)
    Z = (X - X.mean(0)) / X.std(0)
    lam_max = np.abs(Z.T @ (y - y.mean())).max() / len(y)
    assert np.all(fit_lasso(X, y, lam_max).coef == 0.0)
    assert np.all(fit_lasso(X, y, 1.5 * lam_max).coef == 0.0)
    assert np.any(fit_lasso(X, y, 0.9 * lam_max).coef != 0.0)
