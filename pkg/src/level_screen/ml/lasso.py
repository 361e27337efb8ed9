"""L1-penalized least squares by cyclic coordinate descent.

Minimizes ``(1/2n) * ||y - b0 - X b||^2 + lam * ||b||_1``. The intercept is
left unpenalized and handled by centering. Labels in {0, 1} are regressed
as plain reals; the fit is used to pick columns, not to predict.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from ..errors import ConvergenceError, DataError
from .scaling import as_array

TOL = 1e-7
MAX_SWEEPS = 10_000
KKT_TOL = 1e-5


@dataclass(frozen=True)
class LassoModel:
    coefficients: np.ndarray
    intercept: float
    lam: float
    n_sweeps: int = 0
    kkt_residual: float = 0.0
    column_names: tuple[str, ...] | None = None

    @property
    def selected(self) -> frozenset[int]:
        return frozenset(int(j) for j in np.flatnonzero(self.coefficients))

    def predict(self, X) -> np.ndarray:
        return as_array(X) @ self.coefficients + self.intercept


@numba.njit(cache=True)
def _cd(Xc, yc, lam, beta, tol, max_sweeps):
    n, p = Xc.shape
    sq = np.zeros(p)
    for j in range(p):
        s = 0.0
        for i in range(n):
            s += Xc[i, j] * Xc[i, j]
        sq[j] = s / n
    r = yc.copy()
    for j in range(p):
        if beta[j] != 0.0:
            for i in range(n):
                r[i] -= Xc[i, j] * beta[j]
    for sweep in range(1, max_sweeps + 1):
        max_delta = 0.0
        for j in range(p):
            if sq[j] == 0.0:
                beta[j] = 0.0
                continue
            old = beta[j]
            rho = 0.0
            for i in range(n):
                rho += Xc[i, j] * r[i]
            rho = rho / n + sq[j] * old
            if rho > lam:
                new = (rho - lam) / sq[j]
            elif rho < -lam:
                new = (rho + lam) / sq[j]
            else:
                new = 0.0
            delta = new - old
            if delta != 0.0:
                for i in range(n):
                    r[i] -= Xc[i, j] * delta
                beta[j] = new
                if abs(delta) > max_delta:
                    max_delta = abs(delta)
        if max_delta < tol:
            return sweep
    return -1


def lambda_max(X, y) -> float:
    """Smallest penalty at which every coefficient is zero."""
    X = as_array(X)
    y = np.asarray(y, dtype=float)
    Xc = X - X.mean(axis=0)
    return float(np.max(np.abs(Xc.T @ (y - y.mean()))) / len(y)) if X.shape[1] else 0.0


def kkt_violation(X, y, model: LassoModel) -> float:
    """Largest breach of the subgradient optimality conditions.

    For zero coefficients ``|x_j' r / n| <= lam``; for the rest
    ``x_j' r / n == lam * sign(b_j)``.
    """
    X = as_array(X)
    y = np.asarray(y, dtype=float)
    r = y - model.intercept - X @ model.coefficients
    grad = X.T @ r / len(y)
    b = model.coefficients
    zero = b == 0
    worst = 0.0
    if zero.any():
        worst = max(worst, float(np.max(np.abs(grad[zero]) - model.lam)))
    if (~zero).any():
        worst = max(worst, float(np.max(np.abs(grad[~zero] - model.lam * np.sign(b[~zero])))))
    return max(worst, 0.0)


def lasso_fit(
    X,
    y,
    lam: float,
    *,
    tol: float = TOL,
    max_sweeps: int = MAX_SWEEPS,
    warm_start: np.ndarray | None = None,
    column_names=None,
) -> LassoModel:
    X = as_array(X)
    y = np.asarray(y, dtype=float)
    if X.shape[0] != y.shape[0]:
        raise DataError(f"{X.shape[0]} rows but {y.shape[0]} labels")
    if X.shape[0] == 0:
        raise DataError("cannot fit Lasso on an empty matrix")
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    x_mean = X.mean(axis=0)
    y_mean = float(y.mean())
    Xc = np.ascontiguousarray(X - x_mean)
    beta = np.zeros(X.shape[1]) if warm_start is None else np.array(warm_start, dtype=float)
    names = tuple(column_names) if column_names is not None else None
    if X.shape[1] and lam >= float(np.max(np.abs(Xc.T @ (y - y_mean))) / len(y)):
        # all-zero solution is exact here; CD could leak rounding noise past the threshold
        zero = LassoModel(np.zeros(X.shape[1]), y_mean, float(lam), 0, column_names=names)
        return LassoModel(zero.coefficients, y_mean, float(lam), 0, kkt_violation(X, y, zero), names)
    sweeps = _cd(Xc, y - y_mean, float(lam), beta, float(tol), int(max_sweeps))
    intercept = y_mean - float(x_mean @ beta)
    if sweeps < 0:
        partial = LassoModel(beta, intercept, float(lam), max_sweeps, column_names=names)
        raise ConvergenceError(
            f"coordinate descent did not converge in {max_sweeps} sweeps", iterate=partial, iterations=max_sweeps
        )
    model = LassoModel(beta, intercept, float(lam), sweeps, column_names=names)
    return LassoModel(beta, intercept, float(lam), sweeps, kkt_violation(X, y, model), names)


@dataclass(frozen=True)
class SelectedColumn:
    index: int
    name: str | None
    coefficient: float


def lasso_select(model: LassoModel, min_abs_coef: float = 0.0) -> list[SelectedColumn]:
    """Columns with ``|b| > min_abs_coef``, strongest first (ties by column index)."""
    b = model.coefficients
    keep = [j for j in range(len(b)) if abs(b[j]) > min_abs_coef]
    keep.sort(key=lambda j: (-abs(b[j]), j))
    names = model.column_names
    return [SelectedColumn(j, names[j] if names else None, float(b[j])) for j in keep]


def lambda_grid(lam_max: float, n: int = 25, min_ratio: float = 0.01) -> np.ndarray:
    """Geometric grid from ``lam_max`` down to ``min_ratio * lam_max``."""
    if lam_max <= 0:
        return np.zeros(1)
    return lam_max * np.geomspace(1.0, min_ratio, n)


def lasso_path(X, y, lambdas, *, column_names=None, stop_on_failure: bool = False) -> list[LassoModel]:
    """Fits along ``lambdas`` in the given order, each warm-started from the last.

    With ``stop_on_failure`` the path ends at the first penalty that does not
    converge instead of raising, so the result may be shorter than ``lambdas``.
    """
    models, beta = [], None
    for lam in lambdas:
        try:
            model = lasso_fit(X, y, float(lam), warm_start=beta, column_names=column_names)
        except ConvergenceError:
            if stop_on_failure:
                break
            raise
        beta = model.coefficients
        models.append(model)
    return models
