import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from level_screen.errors import ConfigError
from level_screen.ml.knn import knn_fit, knn_predict, knn_score


def brute_force(X, y, k, q):
    d = [(float(np.sum((X[i] - q) ** 2)), i) for i in range(len(X))]
    d.sort()  # distance, then lower row index
    nn = [i for _, i in d[:k]]
    score = sum(y[i] for i in nn) / k
    if score == 0.5:
        return score, int(y[nn[0]])
    return score, int(score >= 0.5)


def test_self_match():
    X = np.array([[0.0, 0.0], [1.0, 1.0], [5.0, 5.0]])
    m = knn_fit(X, [0, 1, 0], 1)
    assert knn_predict(m, X).tolist() == [0, 1, 0]
    assert knn_score(m, X).tolist() == [0.0, 1.0, 0.0]


def test_majority_of_three():
    m = knn_fit(np.array([[0.0], [1.0], [2.0]]), [1, 1, 0], 3)
    assert knn_score(m, np.array([[100.0]]))[0] == pytest.approx(2 / 3)
    assert knn_predict(m, np.array([[100.0]]))[0] == 1


def test_even_k_tie_goes_to_nearest():
    m = knn_fit(np.array([[0.0], [3.0]]), [0, 1], 2)
    assert knn_predict(m, np.array([[2.0], [1.0]])).tolist() == [1, 0]
    assert knn_score(m, np.array([[2.0]]))[0] == 0.5


def test_equal_distance_lower_index():
    m = knn_fit(np.array([[-1.0], [1.0]]), [1, 0], 1)
    assert knn_predict(m, np.array([[0.0]]))[0] == 1


def test_k_too_large():
    with pytest.raises(ConfigError):
        knn_fit(np.zeros((3, 1)), [0, 1, 0], 4)
    with pytest.raises(ConfigError):
        knn_fit(np.zeros((3, 1)), [0, 1, 0], 0)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 40), st.integers(1, 5), st.data())
def test_matches_brute_force(seed, n, d, data):
    rng = np.random.default_rng(seed)
    # small integer grid so equal distances actually happen
    X = rng.integers(-2, 3, size=(n, d)).astype(float)
    y = rng.integers(0, 2, n)
    k = data.draw(st.integers(1, n))
    m = knn_fit(X, y, k)
    Q = rng.integers(-2, 3, size=(8, d)).astype(float)
    scores, preds = knn_score(m, Q), knn_predict(m, Q)
    for i, q in enumerate(Q):
        s, p = brute_force(X, y, k, q)
        assert scores[i] == pytest.approx(s)
        assert preds[i] == p
        if k % 2:
            assert preds[i] == int(scores[i] >= 0.5)


def test_brute_force_at_200_rows():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(200, 6))
    y = rng.integers(0, 2, 200)
    Q = rng.normal(size=(20, 6))
    for k in (1, 5, 15):
        m = knn_fit(X, y, k)
        got = knn_predict(m, Q)
        assert got.tolist() == [brute_force(X, y, k, q)[1] for q in Q]
