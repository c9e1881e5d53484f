import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from coverloop.errors import ConfigError
from coverloop.ml import fit_adaboost_r2, fit_tree, weighted_median
from coverloop.ml.boost import AdaBoostModel


def test_single_estimator_equals_base_tree():
    rnd = np.random.default_rng(0)
    X, y = rnd.normal(size=(40, 2)), rnd.normal(size=40)
    m = fit_adaboost_r2(X, y, n_estimators=1, max_depth=3)
    # uniform 1/n weights give the plain leaf means up to rounding
    assert np.allclose(m.predict(X), fit_tree(X, y, 3, 1).predict(X), rtol=0, atol=1e-12)


def test_exact_depth2_fit_stops_after_first_round():
    X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]] * 3)
    y = np.array([1.0, 2.0, 3.0, 4.0] * 3)
    m = fit_adaboost_r2(X, y, n_estimators=10, max_depth=2)
    assert len(m.trees) == 1
    assert np.array_equal(m.predict(X), y)


@given(st.lists(st.floats(-100, 100), min_size=1, max_size=21))
def test_weighted_median_equal_weights_is_median(v):
    v = np.array(v)
    s = np.sort(v)
    assert weighted_median(v, np.ones(len(v))) == s[(len(v) - 1) // 2]
    if len(v) % 2:
        assert weighted_median(v, np.ones(len(v))) == np.median(v)


def test_weighted_median_heavy_weight_wins():
    assert weighted_median([1.0, 2.0, 3.0], [0.1, 0.1, 5.0]) == 3.0


@given(st.integers(0, 10_000))
def test_predictions_within_label_range_and_deterministic(seed):
    rnd = np.random.default_rng(seed)
    X, y = rnd.normal(size=(30, 3)), rnd.normal(size=30)
    m = fit_adaboost_r2(X, y, 8, 2)
    p = m.predict(rnd.normal(size=(10, 3)) * 4)
    assert p.min() >= y.min() - 1e-12 and p.max() <= y.max() + 1e-12
    again = AdaBoostModel.from_params("adaboost", m.params())
    assert np.array_equal(again.predict(X), m.predict(X))
    assert np.array_equal(fit_adaboost_r2(X, y, 8, 2).predict(X), m.predict(X))


def test_vectorized_predict_matches_per_row_median():
    rnd = np.random.default_rng(2)
    X, y = rnd.normal(size=(50, 2)), rnd.normal(size=50)
    m = fit_adaboost_r2(X, y, 10, 2)
    preds = np.array([t.predict(X) for t in m.trees])
    ref = [weighted_median(preds[:, i], m.weights) for i in range(len(X))]
    assert m.predict(X).tolist() == ref


def test_needs_an_estimator():
    with pytest.raises(ConfigError):
        fit_adaboost_r2([[1.0]], [1.0], n_estimators=0)
