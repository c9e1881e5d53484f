import numpy as np
import pytest

from coverloop.errors import ConfigError
from coverloop.ml import fit_knn
from oracles import knn_sort_oracle


def test_k1_returns_training_label():
    X = np.array([[0.0, 0.0], [1.0, 5.0], [3.0, 3.0]])
    y = np.array([10.0, 20.0, 30.0])
    assert fit_knn(X, y, 1).predict(X).tolist() == y.tolist()


def test_k_equals_n_is_mean():
    X = np.arange(6.0).reshape(-1, 1)
    y = np.array([1.0, 2.0, 3.0, 4.0, 5.0, 9.0])
    assert fit_knn(X, y, 6).predict([[100.0]])[0] == pytest.approx(y.mean())


def test_matches_sort_oracle():
    rnd = np.random.default_rng(0)
    for _ in range(200):
        X = rnd.integers(0, 5, size=(10, 2)).astype(float)
        y = rnd.normal(size=10)
        q = rnd.integers(0, 5, size=2).astype(float)
        assert fit_knn(X, y, 3).predict(q.reshape(1, -1))[0] == knn_sort_oracle(X, y, q, 3)


def test_distance_ties_take_lower_row():
    X = np.array([[1.0], [-1.0], [1.0]])
    y = np.array([1.0, 2.0, 3.0])
    assert fit_knn(X, y, 1).predict([[0.0]])[0] == 1.0


@pytest.mark.parametrize("k", [0, 4])
def test_k_out_of_range(k):
    with pytest.raises(ConfigError):
        fit_knn(np.zeros((3, 1)), np.zeros(3), k)
