"""From-scratch learners: scaling, Lasso selection, KNN, CART, random forest, SMO SVM."""

from .forest import ForestModel, forest_fit, forest_predict, forest_score
from .knn import KnnModel, knn_fit, knn_predict, knn_score
from .lasso import LassoModel, kkt_violation, lambda_max, lasso_fit, lasso_select
from .pipeline import FAMILIES, LassoSettings, Preprocessor, TrainedClassifier, fit_pipeline, fit_preprocessor
from .scaling import ScalerState, standardize_apply, standardize_fit
from .svm import SvmModel, svm_fit, svm_predict, svm_score
from .tree import TreeModel, gini, tree_fit, tree_predict, tree_score

__all__ = [
    "FAMILIES",
    "ForestModel",
    "KnnModel",
    "LassoModel",
    "LassoSettings",
    "Preprocessor",
    "ScalerState",
    "SvmModel",
    "TrainedClassifier",
    "TreeModel",
    "fit_pipeline",
    "fit_preprocessor",
    "forest_fit",
    "forest_predict",
    "forest_score",
    "gini",
    "kkt_violation",
    "knn_fit",
    "knn_predict",
    "knn_score",
    "lambda_max",
    "lasso_fit",
    "lasso_select",
    "standardize_apply",
    "standardize_fit",
    "svm_fit",
    "svm_predict",
    "svm_score",
    "tree_fit",
    "tree_predict",
    "tree_score",
]
