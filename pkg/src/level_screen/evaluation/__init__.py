"""Metrics, fold assignment, grid search, nested cross-validation and reports."""

from .metrics import METRIC_NAMES, ConfusionMatrix, MetricSet, compute_metrics, roc_auc, roc_points
from .report import render_json, render_text, report_to_dict
from .search import (
    DEFAULT_GRIDS,
    CvPlan,
    EvaluationReport,
    ModelEvaluation,
    expand_grid,
    fit_outer_fold,
    inner_grid_search,
    nested_cv,
)
from .splits import StratificationWarning, stratified_kfold, train_test_pairs

__all__ = [
    "DEFAULT_GRIDS",
    "METRIC_NAMES",
    "ConfusionMatrix",
    "CvPlan",
    "EvaluationReport",
    "MetricSet",
    "ModelEvaluation",
    "StratificationWarning",
    "compute_metrics",
    "expand_grid",
    "fit_outer_fold",
    "inner_grid_search",
    "nested_cv",
    "render_json",
    "render_text",
    "report_to_dict",
    "roc_auc",
    "roc_points",
    "stratified_kfold",
    "train_test_pairs",
]
