"""Inner-loop grid search and nested cross-validation.

All preprocessing (standardization, Lasso selection) is refit inside every
training split. Outer-test rows are only ever passed to ``score``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, DataError
from ..ml.pipeline import FAMILIES, LassoSettings, Preprocessor, TrainedClassifier, fit_model, fit_pipeline, fit_preprocessor
from .metrics import METRIC_NAMES, ConfusionMatrix, MetricSet, compute_metrics, roc_points
from .splits import stratified_kfold, train_test_pairs

PLAN_FORMAT_VERSION = 1
_TIE = 1e-12

DEFAULT_GRIDS = {
    "knn": {"k": [1, 3, 5, 7, 9, 11]},
    "dt": {"max_depth": [2, 3, 4, 6, 8, 10], "min_samples_leaf": [1, 2, 5]},
    "svm": {"kernel": ["rbf"], "C": [0.1, 1, 10, 100], "gamma": [0.01, 0.1, "1/d", 1]},
    "rf": {"n_trees": [100, 300], "max_features": ["sqrt", "third"], "max_depth": [None, 8]},
}


def expand_grid(grid: dict | list) -> list[dict]:
    """Cartesian product in declaration order (first key varies slowest).

    A list of dicts is taken as an explicit grid.
    """
    if isinstance(grid, list):
        return [dict(p) for p in grid]
    keys = list(grid)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


@dataclass(frozen=True)
class CvPlan:
    outer_folds: int = 5
    inner_folds: int = 5
    stratified: bool = True
    seed: int = 0
    grids: dict = field(default_factory=lambda: {k: dict(v) for k, v in DEFAULT_GRIDS.items()})
    lasso: LassoSettings = LassoSettings()
    families: tuple[str, ...] = FAMILIES

    def __post_init__(self):
        if self.outer_folds < 2 or self.inner_folds < 2:
            raise ConfigError("outer and inner fold counts must be at least 2")
        for fam in self.families:
            if fam not in FAMILIES:
                raise ConfigError(f"unknown model family {fam!r}")
            if fam not in self.grids or not expand_grid(self.grids[fam]):
                raise ConfigError(f"empty hyperparameter grid for {fam}")

    def grid_points(self, family: str) -> list[dict]:
        return expand_grid(self.grids[family])

    def inner_seed(self, outer_fold: int) -> int:
        ss = np.random.SeedSequence(self.seed, spawn_key=(outer_fold,))
        return int(ss.generate_state(1)[0])

    def to_dict(self) -> dict:
        return {
            "format_version": PLAN_FORMAT_VERSION,
            "outer_folds": self.outer_folds,
            "inner_folds": self.inner_folds,
            "stratified": self.stratified,
            "seed": self.seed,
            "grids": self.grids,
            "lasso": self.lasso.to_dict(),
            "families": list(self.families),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "CvPlan":
        doc = dict(doc)
        fmt = doc.pop("format_version", PLAN_FORMAT_VERSION)
        if fmt != PLAN_FORMAT_VERSION:
            raise ConfigError(f"unsupported plan format_version {fmt!r}")
        grids = {k: dict(v) if isinstance(v, dict) else list(v) for k, v in DEFAULT_GRIDS.items()}
        grids.update(doc.pop("grids", {}))
        lasso = LassoSettings.from_dict(doc.pop("lasso", None))
        families = tuple(doc.pop("families", FAMILIES))
        try:
            return cls(grids=grids, lasso=lasso, families=families, **doc)
        except TypeError as exc:
            raise ConfigError(f"bad plan: {exc}") from None


# -- inner loop -------------------------------------------------------------

@dataclass(frozen=True)
class PreparedSplit:
    train_idx: np.ndarray
    val_idx: np.ndarray
    preprocessor: Preprocessor
    Z_train: np.ndarray
    Z_val: np.ndarray


def prepare_splits(
    X, y, n_folds: int, seed: int, lasso: LassoSettings, stratified: bool = True, fixed_selection=None
) -> list[PreparedSplit]:
    """Fold the rows and fit preprocessing on each training part.

    The result depends on the model family not at all, so one set serves
    every family's grid search.
    """
    out = []
    for train, val in train_test_pairs(stratified_kfold(y, n_folds, seed, stratified=stratified)):
        pre = fit_preprocessor(X[train], y[train], lasso, fixed_selection=fixed_selection)
        out.append(PreparedSplit(train, val, pre, pre.transform(X[train]), pre.transform(X[val])))
    return out


def _aggregate(sets: list[MetricSet]) -> tuple[dict, dict]:
    mean, std = {}, {}
    for name in METRIC_NAMES:
        vals = np.array([getattr(m, name) for m in sets], dtype=float)
        vals = vals[~np.isnan(vals)]
        if vals.size == 0:
            mean[name], std[name] = float("nan"), float("nan")
        else:
            mean[name] = float(vals.mean())
            std[name] = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
    return mean, std


@dataclass(frozen=True)
class GridPointResult:
    params: dict
    fold_metrics: tuple[MetricSet, ...]
    mean: dict
    std: dict

    @property
    def auc_skipped(self) -> int:
        return sum(1 for m in self.fold_metrics if "roc_auc" in m.degenerate)


@dataclass(frozen=True)
class GridSearchResult:
    best_index: int
    points: tuple[GridPointResult, ...]

    @property
    def best(self) -> GridPointResult:
        return self.points[self.best_index]

    @property
    def best_params(self) -> dict:
        return self.best.params

    @property
    def flags(self) -> list[str]:
        return [f"grid point {i}: {p.auc_skipped} fold(s) without AUC" for i, p in enumerate(self.points) if p.auc_skipped]


def _beats(a: GridPointResult, b: GridPointResult) -> bool:
    auc_a = -np.inf if np.isnan(a.mean["roc_auc"]) else a.mean["roc_auc"]
    auc_b = -np.inf if np.isnan(b.mean["roc_auc"]) else b.mean["roc_auc"]
    if auc_a > auc_b + _TIE:
        return True
    if abs(auc_a - auc_b) <= _TIE or auc_a == auc_b:
        return a.mean["f1"] > b.mean["f1"] + _TIE
    return False


def inner_grid_search(
    X,
    y,
    family: str,
    grid,
    inner_folds: int = 5,
    seed: int = 0,
    *,
    lasso: LassoSettings = LassoSettings(),
    stratified: bool = True,
    model_seed: int = 0,
    splits: list[PreparedSplit] | None = None,
) -> GridSearchResult:
    """Pick the grid point with the best mean inner ROC-AUC.

    Ties go to the higher mean F1, then to the earlier grid point.
    """
    points_params = expand_grid(grid)
    if not points_params:
        raise ConfigError("empty hyperparameter grid")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if splits is None:
        splits = prepare_splits(X, y, inner_folds, seed, lasso, stratified)
    results = []
    for params in points_params:
        fold_metrics = []
        for sp in splits:
            y_tr, y_val = y[sp.train_idx], y[sp.val_idx]
            model = fit_model(family, sp.Z_train, y_tr, params, model_seed)
            m, _ = compute_metrics(y_val, model.predict(sp.Z_val), model.score(sp.Z_val))
            fold_metrics.append(m)
        mean, std = _aggregate(fold_metrics)
        results.append(GridPointResult(dict(params), tuple(fold_metrics), mean, std))
    best = 0
    for i in range(1, len(results)):
        if _beats(results[i], results[best]):
            best = i
    return GridSearchResult(best, tuple(results))


# -- outer loop -------------------------------------------------------------

@dataclass(frozen=True)
class OuterFoldResult:
    fold: int
    best_params: dict
    inner_mean: dict
    inner_std: dict
    metrics: MetricSet
    confusion: ConfusionMatrix
    test_indices: tuple[int, ...]
    labels: tuple[int, ...]
    scores: tuple[float, ...]
    predictions: tuple[int, ...]
    selected_columns: tuple[str, ...]
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class ModelEvaluation:
    family: str
    folds: tuple[OuterFoldResult, ...]

    @property
    def inner(self) -> tuple[dict, dict]:
        """Mean and std over outer folds of each fold's best inner-loop mean."""
        mean, std = {}, {}
        for name in METRIC_NAMES:
            vals = np.array([f.inner_mean[name] for f in self.folds], dtype=float)
            vals = vals[~np.isnan(vals)]
            mean[name] = float(vals.mean()) if vals.size else float("nan")
            std[name] = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
        return mean, std

    @property
    def outer(self) -> tuple[dict, dict]:
        return _aggregate([f.metrics for f in self.folds])

    @property
    def confusion(self) -> ConfusionMatrix:
        total = ConfusionMatrix(0, 0, 0, 0)
        for f in self.folds:
            total = total + f.confusion
        return total

    @property
    def roc_points(self) -> list[tuple[float, float, float]]:
        labels = [l for f in self.folds for l in f.labels]
        scores = [s for f in self.folds for s in f.scores]
        return roc_points(labels, scores)


@dataclass(frozen=True)
class EvaluationReport:
    plan: CvPlan
    models: dict
    n_rows: int
    n_positive: int
    registry_version: int
    corpus_fingerprint: str
    imputation: str | None = None

    @property
    def families(self) -> list[str]:
        return list(self.models)


def fit_outer_fold(
    X,
    y,
    train_idx,
    family: str,
    plan: CvPlan,
    fold: int,
    *,
    inner_splits: list[PreparedSplit] | None = None,
    outer_preprocessor: Preprocessor | None = None,
    column_names=None,
    fixed_selection=None,
) -> tuple[TrainedClassifier, GridSearchResult]:
    """Inner search on the outer-training rows, then refit the winner on all of them.

    Only rows in ``train_idx`` are read.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    X_tr, y_tr = X[train_idx], y[train_idx]
    if inner_splits is None:
        inner_splits = prepare_splits(
            X_tr, y_tr, plan.inner_folds, plan.inner_seed(fold), plan.lasso, plan.stratified, fixed_selection
        )
    if outer_preprocessor is None and fixed_selection is not None:
        outer_preprocessor = fit_preprocessor(X_tr, y_tr, plan.lasso, column_names, fixed_selection)
    search = inner_grid_search(
        X_tr,
        y_tr,
        family,
        plan.grids[family],
        plan.inner_folds,
        plan.inner_seed(fold),
        lasso=plan.lasso,
        stratified=plan.stratified,
        model_seed=plan.seed,
        splits=inner_splits,
    )
    pipe = fit_pipeline(
        X_tr,
        y_tr,
        family,
        search.best_params,
        lasso=plan.lasso,
        seed=plan.seed,
        column_names=column_names,
        preprocessor=outer_preprocessor,
    )
    return pipe, search


def _run_outer_fold(X, y, train_idx, test_idx, fold: int, plan: CvPlan, column_names, fixed_selection=None) -> dict:
    X_tr, y_tr = X[train_idx], y[train_idx]
    inner_splits = prepare_splits(
        X_tr, y_tr, plan.inner_folds, plan.inner_seed(fold), plan.lasso, plan.stratified, fixed_selection
    )
    outer_pre = fit_preprocessor(X_tr, y_tr, plan.lasso, column_names, fixed_selection)
    out = {}
    for family in plan.families:
        pipe, search = fit_outer_fold(
            X, y, train_idx, family, plan, fold,
            inner_splits=inner_splits, outer_preprocessor=outer_pre, column_names=column_names,
        )
        X_te, y_te = X[test_idx], y[test_idx]
        scores = pipe.score(X_te)
        preds = pipe.predict(X_te)
        metrics, cm = compute_metrics(y_te, preds, scores)
        out[family] = OuterFoldResult(
            fold=fold,
            best_params=search.best_params,
            inner_mean=search.best.mean,
            inner_std=search.best.std,
            metrics=metrics,
            confusion=cm,
            test_indices=tuple(int(i) for i in test_idx),
            labels=tuple(int(v) for v in y_te),
            scores=tuple(float(s) for s in scores),
            predictions=tuple(int(p) for p in preds),
            selected_columns=tuple(pipe.selected_columns),
            flags=tuple(search.flags),
        )
    return out


def nested_cv(matrix, plan: CvPlan = CvPlan(), *, n_jobs: int = 1, corpus_fingerprint: str = "") -> EvaluationReport:
    """Nested cross-validation of every family in the plan.

    ``matrix`` must be imputed and labeled. Outer folds may run in parallel
    (``n_jobs``); results are assembled in fold order so the report does not
    depend on scheduling.
    """
    if matrix.labels is None:
        raise DataError("nested cross-validation needs a labeled matrix")
    X = np.asarray(matrix.values, dtype=float)
    if np.isnan(X).any():
        raise DataError("matrix has missing values; impute first")
    y = np.asarray(matrix.labels, dtype=np.int64)
    if len(np.unique(y)) < 2:
        raise DataError("labels contain a single class")
    names = tuple(matrix.column_names)
    pairs = train_test_pairs(stratified_kfold(y, plan.outer_folds, plan.seed, stratified=plan.stratified))

    fixed = None
    if plan.lasso.leaky:
        # deliberately leaky mode, kept for comparison and flagged in reports
        fixed = fit_preprocessor(X, y, plan.lasso, names).selected
    jobs = [(X, y, tr, te, f, plan, names, fixed) for f, (tr, te) in enumerate(pairs)]
    if n_jobs == 1:
        per_fold = [_run_outer_fold(*job) for job in jobs]
    else:
        from joblib import Parallel, delayed

        per_fold = Parallel(n_jobs=n_jobs)(delayed(_run_outer_fold)(*job) for job in jobs)

    models = {
        fam: ModelEvaluation(fam, tuple(fold_out[fam] for fold_out in per_fold)) for fam in plan.families
    }
    return EvaluationReport(
        plan=plan,
        models=models,
        n_rows=len(y),
        n_positive=int(y.sum()),
        registry_version=matrix.schema.registry_version,
        corpus_fingerprint=corpus_fingerprint,
        imputation=matrix.imputation,
    )
