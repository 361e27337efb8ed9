"""Random forest: bootstrap-resampled CART trees with per-split feature subsets."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DataError
from .scaling import as_array
from .tree import TreeModel, tree_fit


def resolve_max_features(spec, d: int) -> int:
    """Turn ``"sqrt"``, ``"third"``, ``"all"``/None or an int into a subset size."""
    if d == 0:
        return 0
    if spec is None or spec == "all":
        return d
    if spec == "sqrt":
        return max(1, int(math.sqrt(d)))
    if spec == "third":
        return max(1, d // 3)
    if isinstance(spec, float) and 0 < spec <= 1:
        return max(1, int(spec * d))
    return max(1, min(int(spec), d))


def tree_seeds(seed: int, n_trees: int) -> list[int]:
    """Per-tree seeds; tree t depends only on (seed, t), so a forest of
    n trees is a prefix of any larger forest with the same seed."""
    ss = np.random.SeedSequence(seed)
    return [int(c.generate_state(2, np.uint32).view(np.uint64)[0]) for c in ss.spawn(n_trees)]


@dataclass(frozen=True)
class ForestModel:
    trees: tuple[TreeModel, ...]
    max_features: int
    seeds: tuple[int, ...]
    bootstrap: bool = True

    threshold = 0.5

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def score(self, X) -> np.ndarray:
        X = np.ascontiguousarray(as_array(X))
        total = np.zeros(X.shape[0])
        for t in self.trees:
            total += t.score(X)
        return total / len(self.trees)

    def predict(self, X) -> np.ndarray:
        return (self.score(X) >= self.threshold).astype(np.int64)

    def to_dict(self) -> dict:
        return {
            "max_features": self.max_features,
            "seeds": list(self.seeds),
            "bootstrap": self.bootstrap,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ForestModel":
        return cls(
            tuple(TreeModel.from_dict(t) for t in doc["trees"]),
            int(doc["max_features"]),
            tuple(int(s) for s in doc["seeds"]),
            bool(doc["bootstrap"]),
        )


def fit_one_tree(X, y, seed: int, max_features: int, max_depth, min_samples_leaf: int, bootstrap: bool) -> TreeModel:
    rng = np.random.default_rng(seed)
    n = X.shape[0]
    sample = rng.integers(0, n, size=n) if bootstrap else None
    return tree_fit(X, y, max_depth, min_samples_leaf, max_features=max_features, rng=rng, sample_idx=sample)


def forest_fit(
    X,
    y,
    n_trees: int = 100,
    max_features="sqrt",
    max_depth: int | None = None,
    min_samples_leaf: int = 1,
    seed: int = 0,
    *,
    bootstrap: bool = True,
) -> ForestModel:
    X = np.ascontiguousarray(as_array(X))
    y = np.asarray(y, dtype=np.int64)
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    if X.shape[0] == 0:
        raise DataError("cannot fit a forest on zero rows")
    mf = resolve_max_features(max_features, X.shape[1])
    seeds = tree_seeds(seed, n_trees)
    trees = tuple(fit_one_tree(X, y, s, mf, max_depth, min_samples_leaf, bootstrap) for s in seeds)
    return ForestModel(trees, mf, tuple(seeds), bootstrap)


def forest_score(model: ForestModel, X) -> np.ndarray:
    return model.score(X)


def forest_predict(model: ForestModel, X) -> np.ndarray:
    return model.predict(X)
