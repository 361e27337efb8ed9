"""Rendering of nested-CV results: a fixed-layout text table and a JSON companion.

Both outputs are pure functions of the :class:`EvaluationReport`, so the
same corpus and plan regenerate identical bytes.
"""

from __future__ import annotations

import json
import math

from .metrics import METRIC_NAMES
from .search import EvaluationReport, ModelEvaluation

REPORT_FORMAT_VERSION = 1

METRIC_LABELS = {
    "accuracy": "Accuracy",
    "precision": "Precision",
    "recall": "Recall",
    "f1": "F1-Score",
    "roc_auc": "ROC-AUC",
}
_ROW_ORDER = ("knn", "dt", "svm", "rf")
_DISPLAY = {"knn": "KNN", "dt": "DT", "svm": "SVM", "rf": "RF"}
_CELL = 17

STD_CONVENTION = (
    "inner std is taken across outer folds of each fold's best inner-loop mean; "
    "outer std across outer folds (sample std, ddof=1)"
)


def _families(report: EvaluationReport) -> list[str]:
    return [f for f in _ROW_ORDER if f in report.models] + [f for f in report.models if f not in _ROW_ORDER]


def format_cell(mean: float, std: float) -> str:
    if math.isnan(mean):
        return "n/a"
    s = 0.0 if math.isnan(std) else std
    return f"{100 * mean:.2f} ± {100 * s:.2f}%"


def _block(title: str, rows: list[tuple[str, dict, dict]]) -> list[str]:
    head = "Model".ljust(6) + "".join(METRIC_LABELS[m].rjust(_CELL) for m in METRIC_NAMES)
    lines = [title, head, "-" * len(head)]
    for name, mean, std in rows:
        lines.append(name.ljust(6) + "".join(format_cell(mean[m], std[m]).rjust(_CELL) for m in METRIC_NAMES))
    return lines


def _warnings(report: EvaluationReport) -> list[str]:
    out = []
    if report.plan.lasso.leaky:
        out.append("Lasso selection fit once on the full corpus (global scope): held-out rows influenced selection")
    for fam in _families(report):
        for fold in report.models[fam].folds:
            for flag in fold.metrics.degenerate:
                out.append(f"{_DISPLAY.get(fam, fam)} outer fold {fold.fold}: {flag} undefined (0/0 -> 0)")
            for flag in fold.flags:
                out.append(f"{_DISPLAY.get(fam, fam)} outer fold {fold.fold}: {flag}")
    return out


def render_text(report: EvaluationReport) -> str:
    plan = report.plan
    fams = _families(report)
    lines = [
        f"level-screen evaluation report (format_version={REPORT_FORMAT_VERSION})",
        f"corpus: {report.n_rows} rows, {report.n_positive} selected; fingerprint {report.corpus_fingerprint or '-'}",
        f"registry_version: {report.registry_version}",
        f"plan: {plan.outer_folds} outer x {plan.inner_folds} inner folds, "
        f"{'stratified' if plan.stratified else 'unstratified'}, seed {plan.seed}",
        f"lasso: rule={plan.lasso.rule} scope={plan.lasso.scope} enabled={plan.lasso.enabled}",
        f"imputation: {report.imputation or 'none recorded'}",
        f"std: {STD_CONVENTION}",
        "",
    ]
    inner = [(_DISPLAY.get(f, f), *report.models[f].inner) for f in fams]
    outer = [(_DISPLAY.get(f, f), *report.models[f].outer) for f in fams]
    lines += _block("Inner loop", inner)
    lines.append("")
    lines += _block("Outer loop", outer)
    lines += ["", "Pooled outer confusion matrices (rows: actual, columns: predicted)"]
    for f in fams:
        cm = report.models[f].confusion
        lines.append(
            f"{_DISPLAY.get(f, f).ljust(6)}TP {cm.tp:>5}  FN {cm.fn:>5}  FP {cm.fp:>5}  TN {cm.tn:>5}  (n={cm.total})"
        )
    lines += ["", "Best hyperparameters per outer fold"]
    for f in fams:
        for fold in report.models[f].folds:
            params = json.dumps(fold.best_params, sort_keys=True)
            lines.append(f"{_DISPLAY.get(f, f).ljust(6)}fold {fold.fold}: {params}")
    warn = _warnings(report)
    if warn:
        lines += ["", "Warnings"] + [f"- {w}" for w in warn]
    return "\n".join(lines) + "\n"


def _num(x: float):
    # JSON has no NaN or infinity
    if x is None or (isinstance(x, float) and not math.isfinite(x)):
        return None
    return x


def _metric_dict(d: dict) -> dict:
    return {k: _num(float(v)) for k, v in d.items()}


def _model_json(ev: ModelEvaluation) -> dict:
    inner_mean, inner_std = ev.inner
    outer_mean, outer_std = ev.outer
    return {
        "inner": {"mean": _metric_dict(inner_mean), "std": _metric_dict(inner_std)},
        "outer": {"mean": _metric_dict(outer_mean), "std": _metric_dict(outer_std)},
        "confusion": ev.confusion.to_dict(),
        "roc_points": [[_num(fpr), _num(tpr), _num(thr)] for fpr, tpr, thr in ev.roc_points],
        "folds": [
            {
                "fold": f.fold,
                "best_params": f.best_params,
                "inner_mean": _metric_dict(f.inner_mean),
                "inner_std": _metric_dict(f.inner_std),
                "metrics": _metric_dict(f.metrics.as_dict()),
                "degenerate": list(f.metrics.degenerate),
                "confusion": f.confusion.to_dict(),
                "test_indices": list(f.test_indices),
                "labels": list(f.labels),
                "scores": [_num(s) for s in f.scores],
                "predictions": list(f.predictions),
                "selected_columns": list(f.selected_columns),
                "flags": list(f.flags),
            }
            for f in ev.folds
        ],
    }


def report_to_dict(report: EvaluationReport) -> dict:
    return {
        "format_version": REPORT_FORMAT_VERSION,
        "kind": "level-screen-evaluation",
        "plan": report.plan.to_dict(),
        "n_rows": report.n_rows,
        "n_positive": report.n_positive,
        "registry_version": report.registry_version,
        "corpus_fingerprint": report.corpus_fingerprint,
        "imputation": report.imputation,
        "std_convention": STD_CONVENTION,
        "warnings": _warnings(report),
        "models": {f: _model_json(report.models[f]) for f in _families(report)},
    }


def render_json(report: EvaluationReport) -> str:
    return json.dumps(report_to_dict(report), sort_keys=True, indent=1, allow_nan=False) + "\n"
