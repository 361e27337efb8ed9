"""Deterministic stratified k-fold assignment."""

from __future__ import annotations

import warnings

import numpy as np

from ..errors import ConfigError


class StratificationWarning(UserWarning):
    pass


def stratified_kfold(labels, k: int, seed: int, *, stratified: bool = True) -> list[np.ndarray]:
    """Split row indices into ``k`` disjoint folds.

    Each class is shuffled with ``seed`` and dealt round-robin; the negative
    class continues where the positive class stopped, which keeps fold sizes
    within one row of each other. Per-fold class counts then differ from the
    global proportion by at most one row. Returned folds are sorted.
    """
    y = np.asarray(labels)
    n = len(y)
    if k < 2:
        raise ConfigError("need at least 2 folds")
    if k > n:
        raise ConfigError(f"{k} folds requested for {n} rows")
    rng = np.random.default_rng(seed)
    if stratified:
        groups = [np.flatnonzero(y == c) for c in (1, 0)]
        small = [len(g) for g in groups if 0 < len(g) < k]
        if small:
            warnings.warn(
                f"a class has only {min(small)} members for {k} folds; some folds will lack it",
                StratificationWarning,
                stacklevel=2,
            )
    else:
        groups = [np.arange(n)]
    assignment = np.empty(n, dtype=np.int64)
    offset = 0
    for g in groups:
        perm = rng.permutation(g)
        assignment[perm] = (offset + np.arange(len(perm))) % k
        offset = (offset + len(perm)) % k
    return [np.flatnonzero(assignment == f) for f in range(k)]


def train_test_pairs(folds: list[np.ndarray]) -> list[tuple[np.ndarray, np.ndarray]]:
    n = sum(len(f) for f in folds)
    pairs = []
    for test in folds:
        mask = np.ones(n, dtype=bool)
        mask[test] = False
        pairs.append((np.flatnonzero(mask), test))
    return pairs
