import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from level_screen.errors import ConfigError
from level_screen.evaluation.splits import StratificationWarning, stratified_kfold, train_test_pairs


def test_ten_rows_five_folds():
    y = np.array([1] * 5 + [0] * 5)
    for fold in stratified_kfold(y, 5, 0):
        assert sorted(y[fold].tolist()) == [0, 1]


def test_deterministic():
    y = np.random.default_rng(0).integers(0, 2, 50)
    a, b = stratified_kfold(y, 5, 11), stratified_kfold(y, 5, 11)
    assert all(np.array_equal(p, q) for p, q in zip(a, b))


def test_default_regime_positive_counts():
    y = np.array([1] * 44 + [0] * 76)
    for seed in range(20):
        assert {int(y[f].sum()) for f in stratified_kfold(y, 5, seed)} <= {8, 9}


def test_errors_and_warning():
    with pytest.raises(ConfigError):
        stratified_kfold([0, 1, 0], 4, 0)
    with pytest.raises(ConfigError):
        stratified_kfold([0, 1, 0], 1, 0)
    with pytest.warns(StratificationWarning):
        stratified_kfold([1, 0, 0, 0, 0, 0], 3, 0)


@settings(max_examples=100, deadline=None)
@given(st.integers(4, 80), st.integers(2, 6), st.integers(0, 2**32), st.floats(0.05, 0.95))
def test_partition_and_balance(n, k, seed, rate):
    if k > n:
        return
    y = (np.random.default_rng(seed).random(n) < rate).astype(int)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", StratificationWarning)
        folds = stratified_kfold(y, k, seed)
    allidx = np.sort(np.concatenate(folds))
    assert np.array_equal(allidx, np.arange(n))
    sizes = [len(f) for f in folds]
    assert max(sizes) - min(sizes) <= 1
    for c in (0, 1):
        share = np.sum(y == c) / k
        for f in folds:
            assert abs(np.sum(y[f] == c) - share) < 1 + 1e-9
    for tr, te in train_test_pairs(folds):
        assert len(np.intersect1d(tr, te)) == 0 and len(tr) + len(te) == n
