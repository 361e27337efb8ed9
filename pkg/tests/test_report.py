import json
import os
from pathlib import Path

import pytest

from level_screen.evaluation.report import format_cell, render_json, render_text
from level_screen.evaluation.search import CvPlan, nested_cv
from level_screen.features import build_matrix, impute_and_encode
from level_screen.synth import SynthConfig, generate_corpus

GOLDEN = Path(__file__).parent / "golden"
PLAN = CvPlan(
    outer_folds=3,
    inner_folds=3,
    seed=5,
    grids={"knn": {"k": [1, 3, 5]}, "dt": {"max_depth": [2, 3], "min_samples_leaf": [1, 2]}},
    families=("knn", "dt"),
)


def make_report():
    corpus = generate_corpus(SynthConfig(n_levels=45, seed=11, label_noise=0.1))
    matrix = impute_and_encode(build_matrix(corpus.levels))
    return nested_cv(matrix, PLAN, corpus_fingerprint="golden-fixture")


@pytest.fixture(scope="module")
def report():
    return make_report()


def test_format_cell():
    assert format_cell(0.8657, 0.0123) == "86.57 ± 1.23%"
    assert format_cell(float("nan"), 0.1) == "n/a"
    assert format_cell(0.5, float("nan")) == "50.00 ± 0.00%"


def test_text_layout(report):
    text = render_text(report)
    assert "Inner loop" in text and "Outer loop" in text
    for label in ("Accuracy", "Precision", "Recall", "F1-Score", "ROC-AUC"):
        assert label in text
    assert "ddof=1" in text and "registry_version" in text and "golden-fixture" in text
    # KNN row precedes DT in both blocks
    assert text.index("\nKNN ") < text.index("\nDT ")


def test_json_companion(report):
    doc = json.loads(render_json(report))
    assert doc["format_version"] == 1
    assert set(doc["models"]) == {"knn", "dt"}
    for m in doc["models"].values():
        assert set(m["inner"]["mean"]) == set(m["outer"]["mean"])
        assert sum(m["confusion"].values()) == report.n_rows
        assert m["roc_points"][0][:2] == [0.0, 0.0]


@pytest.mark.parametrize("name,render", [("report_small.txt", render_text), ("report_small.json", render_json)])
def test_golden_regeneration(report, name, render):
    path = GOLDEN / name
    out = render(report)
    if os.environ.get("LEVEL_SCREEN_REGEN_GOLDEN"):
        path.write_text(out, encoding="utf-8")
    assert out == path.read_text(encoding="utf-8")
    assert render(make_report()) == out
