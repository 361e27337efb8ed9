"""k-nearest-neighbour classifier on standardized features."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, DataError
from .scaling import as_array


@dataclass(frozen=True)
class KnnModel:
    k: int
    X: np.ndarray
    y: np.ndarray

    threshold = 0.5

    def neighbours(self, Q) -> np.ndarray:
        """Indices of the k nearest training rows per query, nearest first.

        Equal distances resolve to the lower training index (stable sort).
        """
        Q = as_array(Q)
        d2 = ((Q[:, None, :] - self.X[None, :, :]) ** 2).sum(axis=2)
        return np.argsort(d2, axis=1, kind="stable")[:, : self.k]

    def score(self, Q) -> np.ndarray:
        return self.y[self.neighbours(Q)].mean(axis=1)

    def predict(self, Q) -> np.ndarray:
        nn = self.neighbours(Q)
        votes = self.y[nn]
        score = votes.mean(axis=1)
        pred = (score >= 0.5).astype(np.int64)
        tie = score == 0.5
        # an even k can split evenly; the single nearest neighbour decides
        pred[tie] = votes[tie, 0]
        return pred


def knn_fit(X, y, k: int) -> KnnModel:
    X = as_array(X)
    y = np.asarray(y, dtype=np.int64)
    if X.shape[0] != y.shape[0]:
        raise DataError(f"{X.shape[0]} rows but {y.shape[0]} labels")
    if k < 1:
        raise ConfigError("k must be positive")
    if k > X.shape[0]:
        raise ConfigError(f"k={k} exceeds the {X.shape[0]} training rows")
    return KnnModel(int(k), X.copy(), y.copy())


def knn_score(model: KnnModel, Q) -> np.ndarray:
    return model.score(Q)


def knn_predict(model: KnnModel, Q) -> np.ndarray:
    return model.predict(Q)
