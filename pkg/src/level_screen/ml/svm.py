"""Soft-margin SVM trained by sequential minimal optimization.

Dual problem, with ``Q_ij = y_i y_j K(x_i, x_j)``::

    min  0.5 a'Qa - sum(a)   s.t.  0 <= a_i <= C,  y'a = 0

Each step picks the maximal violating pair (first-order working set
selection) and solves the two-variable subproblem in closed form, clipped
to the box. Labels 0/1 are mapped to -1/+1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from ..errors import ConfigError, ConvergenceError, DataError
from .scaling import as_array

KKT_TOL = 1e-3
# one pass = as many pair updates as there are training rows
MAX_PASSES = 10_000
_TAU = 1e-12


def kernel_matrix(A, B, kernel: str, gamma: float | None) -> np.ndarray:
    if kernel == "linear":
        return A @ B.T
    if kernel == "rbf":
        d2 = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2.0 * (A @ B.T)
        return np.exp(-gamma * np.maximum(d2, 0.0))
    raise ConfigError(f"unknown kernel {kernel!r}")


@numba.njit(cache=True)
def _smo(K, y, C, tol, max_iter):
    n = y.shape[0]
    alpha = np.zeros(n)
    G = -np.ones(n)
    it = 0
    gap = np.inf
    while True:
        # i: maximal -y*G over I_up, j: minimal -y*G over I_low
        i = -1
        j = -1
        gmax = -np.inf
        gmin = np.inf
        for t in range(n):
            v = -y[t] * G[t]
            if (y[t] > 0 and alpha[t] < C) or (y[t] < 0 and alpha[t] > 0):
                if v > gmax:
                    gmax = v
                    i = t
            if (y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < C):
                if v < gmin:
                    gmin = v
                    j = t
        gap = gmax - gmin
        if i < 0 or j < 0 or gap < tol:
            break
        if it >= max_iter:
            break
        it += 1

        Qij = y[i] * y[j] * K[i, j]
        old_i = alpha[i]
        old_j = alpha[j]
        if y[i] != y[j]:
            quad = K[i, i] + K[j, j] + 2.0 * Qij
            if quad <= 0.0:
                quad = _TAU
            delta = (-G[i] - G[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            else:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = C + diff
        else:
            quad = K[i, i] + K[j, j] - 2.0 * Qij
            if quad <= 0.0:
                quad = _TAU
            delta = (G[i] - G[j]) / quad
            s = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if s > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = s - C
            else:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = s
            if s > C:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = s - C
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = s

        di = alpha[i] - old_i
        dj = alpha[j] - old_j
        for t in range(n):
            G[t] += y[t] * (y[i] * K[t, i] * di + y[j] * K[t, j] * dj)

    # bias from free vectors, else the midpoint of the feasible interval
    n_free = 0
    s_free = 0.0
    ub = np.inf
    lb = -np.inf
    for t in range(n):
        yg = y[t] * G[t]
        if 0.0 < alpha[t] < C:
            n_free += 1
            s_free += yg
        elif (alpha[t] >= C and y[t] < 0) or (alpha[t] <= 0 and y[t] > 0):
            ub = min(ub, yg)
        else:
            lb = max(lb, yg)
    if n_free > 0:
        rho = s_free / n_free
    else:
        rho = 0.5 * (ub + lb)
    return alpha, -rho, it, gap


@dataclass(frozen=True)
class SvmModel:
    support_vectors: np.ndarray
    dual_coef: np.ndarray  # alpha_i * y_i for the support vectors
    alpha: np.ndarray  # all training multipliers, kept for audit
    y: np.ndarray  # training labels as -1/+1
    bias: float
    C: float
    kernel: str
    gamma: float | None
    iterations: int = 0
    kkt_gap: float = 0.0

    threshold = 0.0

    def decision_function(self, X) -> np.ndarray:
        X = as_array(X)
        if len(self.dual_coef) == 0:
            return np.full(X.shape[0], self.bias)
        return kernel_matrix(X, self.support_vectors, self.kernel, self.gamma) @ self.dual_coef + self.bias

    def score(self, X) -> np.ndarray:
        return self.decision_function(X)

    def predict(self, X) -> np.ndarray:
        return (self.decision_function(X) > 0).astype(np.int64)

    def to_dict(self) -> dict:
        return {
            "n_features": int(self.support_vectors.shape[1]),
            "support_vectors": self.support_vectors.tolist(),
            "dual_coef": self.dual_coef.tolist(),
            "alpha": self.alpha.tolist(),
            "y": self.y.tolist(),
            "bias": self.bias,
            "C": self.C,
            "kernel": self.kernel,
            "gamma": self.gamma,
            "iterations": self.iterations,
            "kkt_gap": self.kkt_gap,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SvmModel":
        n_feat = doc.get("n_features")
        sv = np.array(doc["support_vectors"], float)
        if sv.size == 0:
            sv = sv.reshape(0, n_feat or 0)
        return cls(
            sv,
            np.array(doc["dual_coef"], float),
            np.array(doc["alpha"], float),
            np.array(doc["y"], float),
            float(doc["bias"]),
            float(doc["C"]),
            doc["kernel"],
            doc["gamma"],
            int(doc["iterations"]),
            float(doc["kkt_gap"]),
        )


def svm_fit(
    X,
    y,
    C: float = 1.0,
    kernel: str = "rbf",
    gamma: float | None = None,
    *,
    tol: float = KKT_TOL,
    max_passes: int = MAX_PASSES,
) -> SvmModel:
    X = np.ascontiguousarray(as_array(X))
    y01 = np.asarray(y)
    if X.shape[0] != y01.shape[0]:
        raise DataError(f"{X.shape[0]} rows but {y01.shape[0]} labels")
    if C <= 0:
        raise ConfigError("C must be positive")
    if kernel == "rbf":
        if gamma is None:
            gamma = 1.0 / max(X.shape[1], 1)
        gamma = float(gamma)
        if gamma <= 0:
            raise ConfigError("gamma must be positive")
    elif kernel == "linear":
        gamma = None
    if not np.isin(y01, (0, 1)).all():
        raise DataError("labels must be 0 or 1")
    if len(np.unique(y01)) < 2:
        raise DataError("SVM training needs both classes")
    ys = np.where(y01 == 1, 1.0, -1.0)
    K = np.ascontiguousarray(kernel_matrix(X, X, kernel, gamma))
    max_iter = int(max_passes) * X.shape[0]
    alpha, bias, iters, gap = _smo(K, ys, float(C), float(tol), max_iter)
    if gap >= tol and iters >= max_iter:
        raise ConvergenceError(
            f"SMO stopped after {max_passes} passes ({max_iter} updates) with KKT violation {gap:.3g}",
            iterate=alpha,
            iterations=iters,
            violation=float(gap),
        )
    sv = alpha > 0
    return SvmModel(
        X[sv].copy(),
        alpha[sv] * ys[sv],
        alpha,
        ys,
        float(bias),
        float(C),
        kernel,
        gamma,
        int(iters),
        float(max(gap, 0.0)) if np.isfinite(gap) else 0.0,
    )


def svm_score(model: SvmModel, X) -> np.ndarray:
    return model.decision_function(X)


def svm_predict(model: SvmModel, X) -> np.ndarray:
    return model.predict(X)
