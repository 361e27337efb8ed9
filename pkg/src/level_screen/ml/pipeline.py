"""Fit-time preprocessing plus one classifier, as a single serializable unit.

The chain is: standardize -> Lasso column selection -> classifier. Every
statistic is computed from the rows handed to :func:`fit_preprocessor`,
so fitting on a training split never looks at held-out rows.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, DataError, VersionError
from .forest import ForestModel, forest_fit
from .knn import KnnModel, knn_fit
from .lasso import LassoModel, lambda_grid, lambda_max, lasso_fit, lasso_path, lasso_select
from .scaling import ScalerState, as_array, standardize_apply, standardize_fit
from .svm import SvmModel, svm_fit
from .tree import TreeModel, tree_fit

MODEL_FORMAT_VERSION = 1
FAMILIES = ("knn", "dt", "svm", "rf")
DISPLAY_NAMES = {"knn": "KNN", "dt": "DT", "svm": "SVM", "rf": "RF"}


LAMBDA_RULES = ("cv-1se", "cv-min", "ratio")
SELECTION_SCOPES = ("fold", "global")


@dataclass(frozen=True)
class LassoSettings:
    """How the Lasso penalty is chosen on a training split.

    ``cv-1se`` (default) runs k-fold CV over a geometric grid of
    ``n_lambdas`` penalties from lambda_max down and keeps the largest
    penalty whose mean validation MSE is within one standard error of the
    best; ``cv-min`` keeps the best. ``ratio`` uses ``lambda_ratio *
    lambda_max``. A given ``lam`` overrides all of these.

    ``scope="global"`` selects columns once on the whole corpus before
    splitting. That leaks held-out rows into the selection and reports say so.
    """

    rule: str = "cv-1se"
    lambda_ratio: float = 0.2
    lam: float | None = None
    cv_folds: int = 5
    n_lambdas: int = 25
    min_ratio: float = 0.05
    min_abs_coef: float = 0.0
    enabled: bool = True
    scope: str = "fold"

    def __post_init__(self):
        if self.rule not in LAMBDA_RULES:
            raise ConfigError(f"unknown lambda rule {self.rule!r}; expected one of {', '.join(LAMBDA_RULES)}")
        if self.scope not in SELECTION_SCOPES:
            raise ConfigError(f"unknown selection scope {self.scope!r}")
        if self.cv_folds < 2 or self.n_lambdas < 1 or not 0 < self.min_ratio <= 1:
            raise ConfigError("bad Lasso CV settings")

    @property
    def leaky(self) -> bool:
        return self.enabled and self.scope == "global"

    def to_dict(self) -> dict:
        return {
            "rule": self.rule,
            "lambda_ratio": self.lambda_ratio,
            "lam": self.lam,
            "cv_folds": self.cv_folds,
            "n_lambdas": self.n_lambdas,
            "min_ratio": self.min_ratio,
            "min_abs_coef": self.min_abs_coef,
            "enabled": self.enabled,
            "scope": self.scope,
        }

    @classmethod
    def from_dict(cls, doc: dict | None) -> "LassoSettings":
        try:
            return cls(**(doc or {}))
        except TypeError as exc:
            raise ConfigError(f"bad Lasso settings: {exc}") from None


def choose_lambda(X, y, settings: LassoSettings) -> float:
    """Penalty for standardized ``X`` according to ``settings``.

    CV folds are stratified with a fixed seed, so the choice depends on the
    rows given and nothing else.
    """
    # imported here: the evaluation package imports this module
    from ..evaluation.splits import stratified_kfold, train_test_pairs

    X = as_array(X)
    y = np.asarray(y, dtype=float)
    if settings.lam is not None:
        return float(settings.lam)
    lam_max = lambda_max(X, y)
    if settings.rule == "ratio":
        return settings.lambda_ratio * lam_max
    grid = lambda_grid(lam_max, settings.n_lambdas, settings.min_ratio)
    k = settings.cv_folds
    if lam_max <= 0 or min(np.sum(y == 1), np.sum(y == 0)) < k:
        return lam_max
    errors = np.full((k, len(grid)), np.nan)
    for f, (tr, te) in enumerate(train_test_pairs(stratified_kfold(y, k, 0))):
        scaler = standardize_fit(X[tr])
        Z_tr, Z_te = standardize_apply(scaler, X[tr]), standardize_apply(scaler, X[te])
        for i, model in enumerate(lasso_path(Z_tr, y[tr], grid, stop_on_failure=True)):
            errors[f, i] = np.mean((y[te] - model.predict(Z_te)) ** 2)
    # penalties some fold could not fit are dropped from the comparison
    usable = int(np.argmax(np.isnan(errors).any(axis=0))) if np.isnan(errors).any() else len(grid)
    if usable == 0:
        return lam_max
    grid, errors = grid[:usable], errors[:, :usable]
    mean = errors.mean(axis=0)
    best = int(np.argmin(mean))
    if settings.rule == "cv-min":
        return float(grid[best])
    se = errors[:, best].std(ddof=1) / np.sqrt(k)
    # grid runs from large to small, so the first hit is the sparsest model
    return float(grid[np.flatnonzero(mean <= mean[best] + se)[0]])


@dataclass(frozen=True)
class Preprocessor:
    scaler: ScalerState
    lasso: LassoModel | None
    selected: tuple[int, ...]
    # True when Lasso zeroed every column and all columns were kept instead
    fallback_all: bool = False

    def transform(self, X) -> np.ndarray:
        Z = standardize_apply(self.scaler, X)
        return np.ascontiguousarray(Z[:, list(self.selected)])

    def to_dict(self) -> dict:
        lasso = None
        if self.lasso is not None:
            lasso = {
                "lam": self.lasso.lam,
                "coefficients": self.lasso.coefficients.tolist(),
                "intercept": self.lasso.intercept,
                "n_sweeps": self.lasso.n_sweeps,
                "kkt_residual": self.lasso.kkt_residual,
            }
        return {
            "scaler": self.scaler.to_dict(),
            "lasso": lasso,
            "selected": list(self.selected),
            "fallback_all": self.fallback_all,
        }

    @classmethod
    def from_dict(cls, doc: dict, column_names=None) -> "Preprocessor":
        lasso = None
        if doc["lasso"] is not None:
            d = doc["lasso"]
            lasso = LassoModel(
                np.array(d["coefficients"], float),
                float(d["intercept"]),
                float(d["lam"]),
                int(d["n_sweeps"]),
                float(d["kkt_residual"]),
                tuple(column_names) if column_names else None,
            )
        return cls(
            ScalerState.from_dict(doc["scaler"]),
            lasso,
            tuple(int(j) for j in doc["selected"]),
            bool(doc["fallback_all"]),
        )


def fit_preprocessor(
    X, y, settings: LassoSettings = LassoSettings(), column_names=None, fixed_selection=None
) -> Preprocessor:
    """Standardize, then select columns by Lasso.

    ``fixed_selection`` skips the Lasso and keeps the given columns; it is
    how a globally chosen selection is imposed on each split.
    """
    X = as_array(X)
    y = np.asarray(y, dtype=float)
    scaler = standardize_fit(X)
    Z = standardize_apply(scaler, X)
    if fixed_selection is not None:
        return Preprocessor(scaler, None, tuple(int(j) for j in fixed_selection))
    if not settings.enabled:
        return Preprocessor(scaler, None, tuple(range(X.shape[1])))
    model = lasso_fit(Z, y, choose_lambda(Z, y, settings), column_names=column_names)
    chosen = sorted(c.index for c in lasso_select(model, settings.min_abs_coef))
    if not chosen:
        return Preprocessor(scaler, model, tuple(range(X.shape[1])), fallback_all=True)
    return Preprocessor(scaler, model, tuple(chosen))


def _resolve_gamma(gamma, d: int) -> float:
    if gamma in (None, "1/d", "auto"):
        return 1.0 / max(d, 1)
    return float(gamma)


def fit_model(family: str, Z, y, params: dict, seed: int = 0):
    y = np.asarray(y, dtype=np.int64)
    if family == "knn":
        return knn_fit(Z, y, int(params["k"]))
    if family == "dt":
        return tree_fit(Z, y, params.get("max_depth"), int(params.get("min_samples_leaf", 1)))
    if family == "svm":
        return svm_fit(
            Z,
            y,
            float(params["C"]),
            params.get("kernel", "rbf"),
            _resolve_gamma(params.get("gamma"), Z.shape[1]) if params.get("kernel", "rbf") == "rbf" else None,
        )
    if family == "rf":
        return forest_fit(
            Z,
            y,
            int(params.get("n_trees", 100)),
            params.get("max_features", "sqrt"),
            params.get("max_depth"),
            int(params.get("min_samples_leaf", 1)),
            seed,
        )
    raise ConfigError(f"unknown model family {family!r}; expected one of {', '.join(FAMILIES)}")


_MODEL_TYPES = {"knn": KnnModel, "dt": TreeModel, "svm": SvmModel, "rf": ForestModel}


def _model_to_dict(family: str, model) -> dict:
    if family == "knn":
        return {"k": model.k, "X": model.X.tolist(), "y": model.y.tolist(), "n_features": int(model.X.shape[1])}
    return model.to_dict()


def _model_from_dict(family: str, doc: dict):
    if family == "knn":
        X = np.array(doc["X"], float).reshape(-1, int(doc["n_features"]))
        return KnnModel(int(doc["k"]), X, np.array(doc["y"], np.int64))
    return _MODEL_TYPES[family].from_dict(doc)


@dataclass(frozen=True)
class TrainedClassifier:
    family: str
    params: dict
    seed: int
    preprocessor: Preprocessor
    model: object
    registry_version: int
    column_names: tuple[str, ...]
    imputation: str | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def threshold(self) -> float:
        return self.model.threshold

    def score(self, X) -> np.ndarray:
        return np.asarray(self.model.score(self.preprocessor.transform(X)), dtype=float)

    def predict(self, X) -> np.ndarray:
        return np.asarray(self.model.predict(self.preprocessor.transform(X)), dtype=np.int64)

    @property
    def selected_columns(self) -> list[str]:
        return [self.column_names[j] for j in self.preprocessor.selected]

    def to_dict(self) -> dict:
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "kind": "level-screen-model",
            "family": self.family,
            "params": self.params,
            "seed": self.seed,
            "registry_version": self.registry_version,
            "columns": list(self.column_names),
            "imputation": self.imputation,
            "preprocessor": self.preprocessor.to_dict(),
            "model": _model_to_dict(self.family, self.model),
            "metadata": self.metadata,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainedClassifier":
        if doc.get("kind") != "level-screen-model":
            raise VersionError("not a level-screen model file")
        if doc.get("format_version") != MODEL_FORMAT_VERSION:
            raise VersionError(f"unsupported model format_version {doc.get('format_version')!r}")
        columns = tuple(doc["columns"])
        return cls(
            doc["family"],
            doc["params"],
            int(doc["seed"]),
            Preprocessor.from_dict(doc["preprocessor"], columns),
            _model_from_dict(doc["family"], doc["model"]),
            int(doc["registry_version"]),
            columns,
            doc.get("imputation"),
            doc.get("metadata", {}),
        )

    @classmethod
    def loads(cls, text: str) -> "TrainedClassifier":
        return cls.from_dict(json.loads(text))


def fit_pipeline(
    X,
    y,
    family: str,
    params: dict,
    *,
    lasso: LassoSettings = LassoSettings(),
    seed: int = 0,
    column_names=None,
    registry_version: int = 0,
    imputation: str | None = None,
    preprocessor: Preprocessor | None = None,
) -> TrainedClassifier:
    """Fit preprocessing and a classifier on the given (training) rows.

    A ``preprocessor`` already fitted on exactly these rows may be passed to
    skip refitting it.
    """
    X = as_array(X)
    y = np.asarray(y, dtype=np.int64)
    if X.shape[0] != y.shape[0]:
        raise DataError(f"{X.shape[0]} rows but {y.shape[0]} labels")
    if len(np.unique(y)) < 2:
        raise DataError("training labels contain a single class")
    names = tuple(column_names) if column_names is not None else tuple(f"x{j}" for j in range(X.shape[1]))
    pre = preprocessor or fit_preprocessor(X, y, lasso, names)
    model = fit_model(family, pre.transform(X), y, params, seed)
    return TrainedClassifier(family, dict(params), int(seed), pre, model, registry_version, names, imputation)
