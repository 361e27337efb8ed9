"""CART classification tree (binary labels, Gini impurity).

Nodes are stored in flat arrays. A row goes left when
``x[feature] <= threshold``. Candidate thresholds are midpoints between
consecutive distinct sorted values; among splits of equal gain the lower
column index wins, then the lower threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from ..errors import DataError
from .scaling import as_array

# gains closer than this are treated as equal so the tie rule applies
GAIN_TIE_EPS = 1e-12


@numba.njit(cache=True)
def _build(X, y, order, max_depth, min_leaf, max_features, feature_keys):
    n_samples = order.shape[0]
    d = X.shape[1]
    cap = 2 * n_samples + 1
    feature = np.full(cap, -1, np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    counts = np.zeros((cap, 2), np.int64)
    gain_out = np.zeros(cap)

    stack_node = np.empty(cap, np.int64)
    stack_start = np.empty(cap, np.int64)
    stack_end = np.empty(cap, np.int64)
    stack_depth = np.empty(cap, np.int64)
    top = 0
    stack_node[0] = 0
    stack_start[0] = 0
    stack_end[0] = n_samples
    stack_depth[0] = 0
    top = 1
    n_nodes = 1
    n_draws = 0

    all_features = np.arange(d)
    vals = np.empty(n_samples)
    labs = np.empty(n_samples, np.int64)
    tmp = np.empty(n_samples, np.int64)

    while top > 0:
        top -= 1
        node = stack_node[top]
        start = stack_start[top]
        end = stack_end[top]
        depth = stack_depth[top]
        m = end - start
        pos = 0
        for k in range(start, end):
            pos += y[order[k]]
        counts[node, 0] = m - pos
        counts[node, 1] = pos
        if pos == 0 or pos == m:
            continue
        if max_depth >= 0 and depth >= max_depth:
            continue
        if m < 2 * min_leaf:
            continue

        if max_features >= d:
            feats = all_features
        else:
            feats = np.sort(np.argsort(feature_keys[n_draws])[:max_features])
            n_draws += 1

        p = pos / m
        parent = 1.0 - p * p - (1.0 - p) * (1.0 - p)
        best_gain = -1.0
        best_f = -1
        best_t = 0.0
        for fi in range(feats.shape[0]):
            f = feats[fi]
            for k in range(m):
                vals[k] = X[order[start + k], f]
                labs[k] = y[order[start + k]]
            srt = np.argsort(vals[:m], kind="mergesort")
            pos_left = 0
            for i in range(m - 1):
                pos_left += labs[srt[i]]
                a = vals[srt[i]]
                b = vals[srt[i + 1]]
                if a == b:
                    continue
                n_left = i + 1
                n_right = m - n_left
                if n_left < min_leaf or n_right < min_leaf:
                    continue
                pl = pos_left / n_left
                pr = (pos - pos_left) / n_right
                gl = 1.0 - pl * pl - (1.0 - pl) * (1.0 - pl)
                gr = 1.0 - pr * pr - (1.0 - pr) * (1.0 - pr)
                g = parent - (n_left * gl + n_right * gr) / m
                if g > best_gain + GAIN_TIE_EPS:
                    best_gain = g
                    best_f = f
                    t = 0.5 * (a + b)
                    if t >= b:
                        t = a
                    best_t = t
        if best_f < 0:
            continue

        # stable partition of the node's rows around the threshold
        nl = 0
        for k in range(start, end):
            if X[order[k], best_f] <= best_t:
                tmp[nl] = order[k]
                nl += 1
        nr = nl
        for k in range(start, end):
            if X[order[k], best_f] > best_t:
                tmp[nr] = order[k]
                nr += 1
        for k in range(m):
            order[start + k] = tmp[k]

        feature[node] = best_f
        threshold[node] = best_t
        gain_out[node] = best_gain
        lc = n_nodes
        rc = n_nodes + 1
        n_nodes += 2
        left[node] = lc
        right[node] = rc
        # push right first so the left subtree is grown first
        stack_node[top] = rc
        stack_start[top] = start + nl
        stack_end[top] = end
        stack_depth[top] = depth + 1
        top += 1
        stack_node[top] = lc
        stack_start[top] = start
        stack_end[top] = start + nl
        stack_depth[top] = depth + 1
        top += 1

    return (
        feature[:n_nodes],
        threshold[:n_nodes],
        left[:n_nodes],
        right[:n_nodes],
        counts[:n_nodes],
        gain_out[:n_nodes],
    )


@numba.njit(cache=True)
def _apply(X, feature, threshold, left, right):
    out = np.empty(X.shape[0], np.int64)
    for i in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out


@dataclass(frozen=True)
class TreeModel:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray  # (n_nodes, 2): negatives, positives reaching each node
    gain: np.ndarray
    max_depth: int | None
    min_samples_leaf: int

    threshold_score = 0.5

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        depths = np.zeros(self.n_nodes, np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depths[self.left[i]] = depths[self.right[i]] = depths[i] + 1
        return int(depths.max())

    def is_leaf(self, node: int) -> bool:
        return self.feature[node] < 0

    def apply(self, X) -> np.ndarray:
        X = np.ascontiguousarray(as_array(X))
        return _apply(X, self.feature, self.threshold, self.left, self.right)

    def score(self, X) -> np.ndarray:
        c = self.counts[self.apply(X)]
        return c[:, 1] / c.sum(axis=1)

    def predict(self, X) -> np.ndarray:
        return (self.score(X) >= self.threshold_score).astype(np.int64)

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "counts": self.counts.tolist(),
            "gain": self.gain.tolist(),
            "max_depth": self.max_depth,
            "min_samples_leaf": self.min_samples_leaf,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TreeModel":
        return cls(
            np.array(doc["feature"], np.int64),
            np.array(doc["threshold"], float),
            np.array(doc["left"], np.int64),
            np.array(doc["right"], np.int64),
            np.array(doc["counts"], np.int64).reshape(-1, 2),
            np.array(doc["gain"], float),
            doc["max_depth"],
            int(doc["min_samples_leaf"]),
        )


def gini(n_neg: int, n_pos: int) -> float:
    n = n_neg + n_pos
    if n == 0:
        return 0.0
    p = n_pos / n
    return 1.0 - p * p - (1.0 - p) * (1.0 - p)


def tree_fit(
    X,
    y,
    max_depth: int | None = None,
    min_samples_leaf: int = 1,
    *,
    max_features: int | None = None,
    rng: np.random.Generator | None = None,
    sample_idx=None,
) -> TreeModel:
    """Grow a tree greedily.

    ``sample_idx`` (row indices, repeats allowed) restricts and reweights the
    training rows, as bootstrap resampling does. When ``max_features`` is
    smaller than the column count, each split considers a uniform random
    subset of that size drawn from ``rng``.
    """
    X = np.ascontiguousarray(as_array(X))
    y = np.asarray(y, dtype=np.int64)
    if X.shape[0] != y.shape[0]:
        raise DataError(f"{X.shape[0]} rows but {y.shape[0]} labels")
    if X.shape[0] == 0:
        raise DataError("cannot fit a tree on zero rows")
    if min_samples_leaf < 1:
        raise ValueError("min_samples_leaf must be >= 1")
    order = np.arange(X.shape[0], dtype=np.int64) if sample_idx is None else np.array(sample_idx, dtype=np.int64)
    d = X.shape[1]
    if max_features is not None and max_features < 1:
        raise ValueError("max_features must be >= 1")
    mf = d if max_features is None else int(max_features)
    if mf < d:
        if rng is None:
            raise ValueError("feature subsampling needs an rng")
        # one row of sort keys per split attempt; a tree attempts fewer than 2n
        keys = rng.random((2 * len(order), d))
    else:
        keys = np.zeros((1, max(d, 1)))
    depth_arg = -1 if max_depth is None else int(max_depth)
    parts = _build(X, y, order, depth_arg, int(min_samples_leaf), mf, keys)
    return TreeModel(*parts, max_depth=max_depth, min_samples_leaf=int(min_samples_leaf))


def tree_score(model: TreeModel, X) -> np.ndarray:
    return model.score(X)


def tree_predict(model: TreeModel, X) -> np.ndarray:
    return model.predict(X)
