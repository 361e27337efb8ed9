"""Column standardization fitted on training rows only."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError

# population std below this counts as a constant column
ZERO_VARIANCE_TOL = 1e-12


def as_array(data) -> np.ndarray:
    values = getattr(data, "values", data)
    X = np.asarray(values, dtype=float)
    if X.ndim != 2:
        raise DataError(f"expected a 2-D matrix, got shape {X.shape}")
    return X


@dataclass(frozen=True)
class ScalerState:
    means: np.ndarray
    stds: np.ndarray
    zero_variance_flags: np.ndarray

    def to_dict(self) -> dict:
        return {
            "means": self.means.tolist(),
            "stds": self.stds.tolist(),
            "zero_variance_flags": self.zero_variance_flags.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ScalerState":
        return cls(
            np.array(doc["means"], dtype=float),
            np.array(doc["stds"], dtype=float),
            np.array(doc["zero_variance_flags"], dtype=bool),
        )


def standardize_fit(data) -> ScalerState:
    """Per-column mean and population std (ddof=0)."""
    X = as_array(data)
    if X.shape[0] == 0:
        raise DataError("cannot standardize an empty matrix")
    if np.isnan(X).any():
        raise DataError("matrix still has missing values; impute before standardizing")
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    flags = stds < ZERO_VARIANCE_TOL
    return ScalerState(means, np.where(flags, 1.0, stds), flags)


def standardize_apply(state: ScalerState, data) -> np.ndarray:
    """Center every column, scale the unflagged ones; flagged columns are only centered."""
    X = as_array(data)
    if X.shape[1] != state.means.shape[0]:
        raise DataError(f"scaler fitted on {state.means.shape[0]} columns, got {X.shape[1]}")
    return (X - state.means) / state.stds
