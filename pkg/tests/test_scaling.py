import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from level_screen.errors import DataError
from level_screen.ml.scaling import ScalerState, standardize_apply, standardize_fit


def test_simple_column():
    state = standardize_fit(np.array([[1.0], [2.0], [3.0]]))
    assert state.means[0] == 2.0
    assert state.stds[0] == pytest.approx(np.sqrt(2 / 3))  # population std
    assert standardize_apply(state, np.array([[1.0], [2.0], [3.0]])).mean() == pytest.approx(0.0)


def test_constant_column_flagged_and_zeroed():
    state = standardize_fit(np.array([[5.0, 1.0], [5.0, 2.0], [5.0, 3.0]]))
    assert state.zero_variance_flags.tolist() == [True, False]
    assert state.stds[0] == 1.0
    out = standardize_apply(state, np.array([[5.0, 1.0], [5.0, 2.0], [5.0, 3.0]]))
    assert np.all(out[:, 0] == 0.0)


def test_held_out_rows_use_training_statistics():
    state = standardize_fit(np.array([[0.0], [2.0]]))
    # a test row far from training data is not recentred on itself
    assert standardize_apply(state, np.array([[11.0]]))[0, 0] == pytest.approx(10.0)


def test_errors():
    with pytest.raises(DataError):
        standardize_fit(np.zeros((0, 3)))
    with pytest.raises(DataError):
        standardize_fit(np.array([[np.nan, 1.0]]))
    state = standardize_fit(np.ones((2, 2)))
    with pytest.raises(DataError):
        standardize_apply(state, np.ones((2, 3)))


def test_state_round_trip():
    state = standardize_fit(np.array([[1.0, 4.0], [3.0, 4.0]]))
    back = ScalerState.from_dict(state.to_dict())
    for a, b in zip((state.means, state.stds, state.zero_variance_flags), (back.means, back.stds, back.zero_variance_flags)):
        assert np.array_equal(a, b)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(2, 30), st.integers(1, 6)), elements=st.floats(-50, 50)))
def test_fitted_columns_are_standard(X):
    state = standardize_fit(X)
    Z = standardize_apply(state, X)
    assert np.allclose(Z.mean(axis=0), 0.0, atol=1e-9)
    live = ~state.zero_variance_flags
    assert np.allclose(Z[:, live].std(axis=0), 1.0, atol=1e-6)
    assert np.all(state.stds > 0)
