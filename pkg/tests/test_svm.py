import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from level_screen.errors import ConfigError, ConvergenceError, DataError
from level_screen.ml.svm import SvmModel, svm_fit, svm_predict, svm_score


def test_two_point_max_margin():
    X = np.array([[-1.0], [1.0]])
    m = svm_fit(X, [0, 1], C=10, kernel="linear")
    assert abs(svm_score(m, np.array([[0.0]]))[0]) < 1e-3
    # analytic solution: w = 1, b = 0, alpha = 1/2 for both points
    assert np.allclose(m.alpha, [0.5, 0.5], atol=1e-3)
    assert svm_score(m, np.array([[2.0]]))[0] == pytest.approx(2.0, abs=1e-3)
    assert svm_predict(m, X).tolist() == [0, 1]


def test_separable_blobs_rbf():
    rng = np.random.default_rng(0)
    X = np.vstack([rng.normal(-3, 0.5, size=(30, 2)), rng.normal(3, 0.5, size=(30, 2))])
    y = np.repeat([0, 1], 30)
    m = svm_fit(X, y, C=10, kernel="rbf", gamma=1.0)
    assert (svm_predict(m, X) == y).all()


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(4, 40), st.sampled_from([0.1, 1.0, 10.0]), st.sampled_from(["linear", "rbf"]))
def test_dual_constraints(seed, n, C, kernel):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 3))
    y = np.r_[0, 1, rng.integers(0, 2, n - 2)]
    m = svm_fit(X, y, C=C, kernel=kernel)
    assert np.all(m.alpha >= 0) and np.all(m.alpha <= C)
    assert abs(np.sum(m.alpha * m.y)) < 1e-6
    assert np.array_equal(svm_predict(m, X), (svm_score(m, X) > 0).astype(int))


def test_bitwise_deterministic_and_round_trip():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(40, 4))
    y = rng.integers(0, 2, 40)
    a, b = svm_fit(X, y, C=1.0), svm_fit(X, y, C=1.0)
    assert a.to_dict() == b.to_dict()
    back = SvmModel.from_dict(a.to_dict())
    assert np.array_equal(back.score(X), a.score(X))


def test_errors():
    X = np.random.default_rng(0).normal(size=(30, 2))
    y = np.r_[np.zeros(15, int), np.ones(15, int)]
    with pytest.raises(ConvergenceError) as info:
        svm_fit(X, np.random.default_rng(1).permutation(y), C=100, max_passes=0)
    assert info.value.violation > 0
    with pytest.raises(ConfigError):
        svm_fit(X, y, C=0)
    with pytest.raises(DataError):
        svm_fit(X, np.zeros(30, int))
