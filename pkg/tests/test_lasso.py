import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from level_screen.errors import ConvergenceError
from level_screen.features import build_matrix, impute_and_encode
from level_screen.ml.lasso import (
    KKT_TOL,
    kkt_violation,
    lambda_grid,
    lambda_max,
    lasso_fit,
    lasso_path,
    lasso_select,
)
from level_screen.ml.pipeline import LassoSettings, choose_lambda, fit_preprocessor
from level_screen.ml.scaling import standardize_apply, standardize_fit
from level_screen.synth import SynthConfig, generate_corpus

# Fixture with a hand-computed lambda_max:
# column 0 centred is (-1.5,-0.5,0.5,1.5), y centred (-0.5,-0.5,0.5,0.5): dot 2, /n = 0.5
# column 1 centred is (0.5,-0.5,0.5,-0.5): dot 0
FIX_X = np.array([[1.0, 1.0], [2.0, 0.0], [3.0, 1.0], [4.0, 0.0]])
FIX_Y = np.array([0.0, 0.0, 1.0, 1.0])
FIX_LAMBDA_MAX = 0.5


def test_lambda_max_frozen():
    assert lambda_max(FIX_X, FIX_Y) == pytest.approx(FIX_LAMBDA_MAX)


@pytest.mark.parametrize("lam", [FIX_LAMBDA_MAX, FIX_LAMBDA_MAX * 1.5, 10.0])
def test_at_or_above_lambda_max_all_zero(lam):
    m = lasso_fit(FIX_X, FIX_Y, lam)
    assert np.all(m.coefficients == 0.0)
    assert m.intercept == pytest.approx(0.5)


def test_just_below_lambda_max_is_nonzero():
    m = lasso_fit(FIX_X, FIX_Y, 0.99 * FIX_LAMBDA_MAX)
    assert m.coefficients[0] > 0 and m.coefficients[1] == 0


def test_zero_columns():
    y = np.array([0.0, 1.0, 1.0, 1.0])
    m = lasso_fit(np.zeros((4, 3)), y, 0.1)
    assert np.all(m.coefficients == 0)
    assert m.intercept == pytest.approx(0.75)


def test_univariate_ols_at_zero_penalty():
    rng = np.random.default_rng(0)
    x = rng.normal(size=40)
    y = (x + rng.normal(scale=0.5, size=40) > 0).astype(float)
    z = (x - x.mean()) / x.std()
    slope = np.sum(z * (y - y.mean())) / np.sum(z * z)  # closed form
    m = lasso_fit(z[:, None], y, 0.0)
    assert m.coefficients[0] == pytest.approx(slope, abs=1e-7)
    assert m.intercept == pytest.approx(y.mean())


def test_multivariate_ols_at_zero_penalty():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(50, 4))
    y = rng.normal(size=50)
    A = np.column_stack([np.ones(50), X])
    ref = np.linalg.lstsq(A, y, rcond=None)[0]
    m = lasso_fit(X, y, 0.0)
    assert np.allclose(m.coefficients, ref[1:], atol=1e-5)
    assert m.intercept == pytest.approx(ref[0], abs=1e-5)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(10, 40), st.integers(1, 12), st.floats(0.02, 1.2))
def test_kkt_holds_for_every_fit(seed, n, p, ratio):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    y = rng.integers(0, 2, n).astype(float)
    state = standardize_fit(X)
    Z = standardize_apply(state, X)
    lam = ratio * max(lambda_max(Z, y), 1e-3)
    m = lasso_fit(Z, y, lam)
    assert kkt_violation(Z, y, m) <= KKT_TOL
    assert m.kkt_residual <= KKT_TOL


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_selection_shrinks_as_penalty_grows(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(60, 8))
    y = (X[:, 0] + X[:, 1] + rng.normal(size=60) > 0).astype(float)
    Z = standardize_apply(standardize_fit(X), X)
    grid = lambda_grid(lambda_max(Z, y), 15, 0.05)
    sizes = [len(m.selected) for m in lasso_path(Z, y, grid)]
    # grid is decreasing, so selection size is non-decreasing along it
    assert all(a <= b for a, b in zip(sizes, sizes[1:]))
    assert sizes[0] == 0


def test_select_ordering_and_thresholds():
    m = lasso_fit(FIX_X, FIX_Y, 0.0)
    sel = lasso_select(m)
    assert [c.index for c in sel] == sorted(range(2), key=lambda j: (-abs(m.coefficients[j]), j))
    assert lasso_select(m, float("inf")) == []
    assert lasso_select(lasso_fit(FIX_X, FIX_Y, 1.0)) == []


def test_convergence_error_carries_iterate():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(20, 5))
    y = rng.normal(size=20)
    with pytest.raises(ConvergenceError) as info:
        lasso_fit(X, y, 0.0, max_sweeps=1, tol=1e-300)
    assert info.value.iterations == 1
    assert info.value.iterate.coefficients.shape == (5,)


def test_choose_lambda_rules():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(80, 6))
    y = (X[:, 0] + 0.3 * rng.normal(size=80) > 0).astype(float)
    Z = standardize_apply(standardize_fit(X), X)
    lm = lambda_max(Z, y)
    assert choose_lambda(Z, y, LassoSettings(lam=0.123)) == 0.123
    assert choose_lambda(Z, y, LassoSettings(rule="ratio", lambda_ratio=0.3)) == pytest.approx(0.3 * lm)
    one_se = choose_lambda(Z, y, LassoSettings())
    best = choose_lambda(Z, y, LassoSettings(rule="cv-min"))
    assert 0.05 * lm - 1e-12 <= best <= one_se <= lm
    assert choose_lambda(Z, y, LassoSettings()) == one_se


def test_planted_columns_survive_selection(schema):
    c = generate_corpus(SynthConfig(n_levels=120, seed=0))
    m = impute_and_encode(build_matrix(c.levels, schema))
    pre = fit_preprocessor(m.values, m.labels, LassoSettings(), m.schema.names)
    chosen = {m.schema.names[j] for j in pre.selected}
    assert set(c.config.rule.weights) <= chosen
    assert not pre.fallback_all
