import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from level_screen.errors import IntegrityError, ParseError, StateError, VersionError
from level_screen.review import (
    BELOW_THRESHOLD,
    Decision,
    ReviewQueue,
    Status,
    apply_decisions,
    build_pool,
    build_queue,
    interactive_review,
    parse_decisions,
    rank_levels,
    read_queue,
    write_queue,
)
from tests.conftest import make_level

META = dict(model_fingerprint="fp", registry_version=1, model_family="rf")


def queue_of(scores, **kw):
    ids = [f"l{i}" for i in range(len(scores))]
    return build_queue(ids, scores, **META, **kw)


def test_top_n():
    q = queue_of([0.1 * i for i in range(10)], top_n=3)
    assert len(q.by_status(Status.PENDING)) == 3
    rejected = q.by_status(Status.REJECTED)
    assert len(rejected) == 7 and all(e.note == BELOW_THRESHOLD for e in rejected)
    assert [e.level_id for e in q.by_status(Status.PENDING)] == ["l9", "l8", "l7"]


def test_threshold_modes():
    q = queue_of([0.5, 0.49, 0.9])
    assert {e.level_id for e in q.by_status(Status.PENDING)} == {"l0", "l2"}
    strict = queue_of([0.0, -0.1, 0.3], default_threshold=0.0, strict=True)
    assert {e.level_id for e in strict.by_status(Status.PENDING)} == {"l2"}


def test_tie_ranks_by_id():
    ranked = rank_levels(["b", "a", "c"], [0.5, 0.5, 0.7])
    assert [(lid, r) for lid, _, r in ranked] == [("c", 1), ("a", 2), ("b", 3)]


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 5).map(float), min_size=1, max_size=30))
def test_ranks_are_dense_and_ordered(scores):
    q = queue_of(scores)
    assert [e.rank for e in q.entries] == list(range(1, len(scores) + 1))
    for a, b in zip(q.entries, q.entries[1:]):
        assert (-a.score, a.level_id) < (-b.score, b.level_id)


def test_integrity_checks():
    with pytest.raises(IntegrityError):
        build_queue(["a", "a"], [0.1, 0.2], **META)
    with pytest.raises(IntegrityError):
        build_queue(["a"], [float("nan")], **META)


def test_transitions_and_idempotence():
    q = queue_of([0.9, 0.8, 0.7])
    d = [Decision("l0", Status.APPROVED, "nice")]
    q1 = apply_decisions(q, d)
    assert q1.entry("l0").status is Status.APPROVED
    assert [e.status for e in q1.entries[1:]] == [Status.PENDING, Status.PENDING]
    assert apply_decisions(q1, d) == q1
    with pytest.raises(StateError) as info:
        apply_decisions(q1, [Decision("l0", Status.REJECTED)])
    assert "l0" in str(info.value)
    with pytest.raises(StateError):
        apply_decisions(q1, [Decision("zzz", Status.APPROVED)])
    assert q1.queue_id == q.queue_id


def test_parse_decisions():
    doc = {"format_version": 1, "decisions": [{"level_id": "a", "status": "Approved", "note": "ok"}]}
    assert parse_decisions(doc) == [Decision("a", Status.APPROVED, "ok")]
    assert parse_decisions([{"level_id": "a", "status": "Rejected"}]) == [Decision("a", Status.REJECTED)]
    for bad in ({"decisions": 3}, [{"level_id": "a"}], [{"level_id": "a", "status": "Pending"}], [{"level_id": "a", "status": "Maybe"}]):
        with pytest.raises(ParseError):
            parse_decisions(bad)
    with pytest.raises(VersionError):
        parse_decisions({"format_version": 9, "decisions": []})


def test_interactive():
    q = queue_of([0.9, 0.8, 0.7])
    answers = iter(["x", "a", "r too easy", "s"])
    said = []
    out = interactive_review(q, lambda _: next(answers), said.append)
    assert out == [Decision("l0", Status.APPROVED), Decision("l1", Status.REJECTED, "too easy")]
    assert said == ["answer a, r, s or q"]
    assert interactive_review(q, lambda _: "q") == []


def test_queue_file_round_trip(tmp_path):
    q = apply_decisions(queue_of([0.3, 0.7], created_at="2024-01-01T00:00:00Z"), [Decision("l1", Status.APPROVED)])
    path = tmp_path / "q.json"
    write_queue(q, path)
    assert read_queue(path) == q
    doc = json.loads(path.read_text())
    doc["entries"][0]["score"] = 0.01
    path.write_text(json.dumps(doc))
    with pytest.raises(IntegrityError):
        read_queue(path)
    doc["format_version"] = 2
    with pytest.raises(VersionError):
        ReviewQueue.from_dict(doc)


def test_pool():
    levels = [make_level(f"l{i}") for i in range(5)]
    q = queue_of([0.9, 0.8, 0.7, 0.6, 0.5])
    q = apply_decisions(q, [Decision("l0", Status.APPROVED), Decision("l2", Status.APPROVED), Decision("l1", Status.REJECTED)])
    pool = build_pool(q, levels)
    assert pool["level_ids"] == ["l0", "l2"]
    assert len(pool["levels"]) == 2
    assert pool["provenance"]["queue_id"] == q.queue_id
    assert build_pool(queue_of([0.1]), levels)["level_ids"] == []
    with pytest.raises(IntegrityError):
        build_pool(q, levels[1:])
