"""Review queue for screened levels and export of the approved pool.

A queue lists every scored level, ranked by model score. Levels the model
passes start as Pending and go to a human reviewer; the rest are marked
Rejected with the note ``below-threshold`` but stay in the file for audit.
The only allowed transitions are Pending -> Approved and Pending -> Rejected.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from ._io import atomic_write_text, dumps_canonical, fingerprint
from .errors import ConfigError, IntegrityError, ParseError, StateError, VersionError
from .levels import GameLevel, level_to_dict
from .registry import ElementRegistry

QUEUE_FORMAT_VERSION = 1
POOL_FORMAT_VERSION = 1
DECISIONS_FORMAT_VERSION = 1
BELOW_THRESHOLD = "below-threshold"


class Status(str, Enum):
    PENDING = "Pending"
    APPROVED = "Approved"
    REJECTED = "Rejected"


@dataclass(frozen=True)
class QueueEntry:
    level_id: str
    score: float
    rank: int
    status: Status = Status.PENDING
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "level_id": self.level_id,
            "score": self.score,
            "rank": self.rank,
            "status": self.status.value,
            "note": self.note,
        }


@dataclass(frozen=True)
class ReviewQueue:
    entries: tuple[QueueEntry, ...]
    model_fingerprint: str
    registry_version: int
    model_family: str
    cutoff: dict
    created_at: str | None = None

    @property
    def queue_id(self) -> str:
        """Content hash of the ranking, stable across review decisions."""
        ranking = [(e.level_id, e.score) for e in self.entries]
        return fingerprint(json.dumps([self.model_fingerprint, ranking], sort_keys=True))

    def entry(self, level_id: str) -> QueueEntry:
        for e in self.entries:
            if e.level_id == level_id:
                return e
        raise StateError(f"level {level_id!r} is not in the queue", level_id=level_id)

    def by_status(self, status: Status) -> list[QueueEntry]:
        return [e for e in self.entries if e.status is status]

    def to_dict(self) -> dict:
        return {
            "format_version": QUEUE_FORMAT_VERSION,
            "kind": "level-screen-queue",
            "queue_id": self.queue_id,
            "model_fingerprint": self.model_fingerprint,
            "model_family": self.model_family,
            "registry_version": self.registry_version,
            "cutoff": self.cutoff,
            "created_at": self.created_at,
            "entries": [e.to_dict() for e in self.entries],
        }

    def dumps(self) -> str:
        return dumps_canonical(self.to_dict())

    @classmethod
    def from_dict(cls, doc: dict) -> "ReviewQueue":
        if doc.get("kind") != "level-screen-queue":
            raise VersionError("not a review queue file")
        if doc.get("format_version") != QUEUE_FORMAT_VERSION:
            raise VersionError(f"unsupported queue format_version {doc.get('format_version')!r}")
        entries = tuple(
            QueueEntry(e["level_id"], float(e["score"]), int(e["rank"]), Status(e["status"]), e.get("note", ""))
            for e in doc["entries"]
        )
        queue = cls(
            entries,
            doc["model_fingerprint"],
            int(doc["registry_version"]),
            doc["model_family"],
            doc["cutoff"],
            doc.get("created_at"),
        )
        if doc.get("queue_id") not in (None, queue.queue_id):
            raise IntegrityError("queue_id does not match the queue contents")
        return queue


def rank_levels(level_ids: Iterable[str], scores) -> list[tuple[str, float, int]]:
    """(level_id, score, rank) by descending score; equal scores rank by level_id."""
    pairs = sorted(zip(level_ids, (float(s) for s in scores)), key=lambda p: (-p[1], p[0]))
    return [(lid, s, i + 1) for i, (lid, s) in enumerate(pairs)]


def build_queue(
    level_ids,
    scores,
    *,
    model_fingerprint: str,
    registry_version: int,
    model_family: str,
    threshold: float | None = None,
    default_threshold: float = 0.5,
    top_n: int | None = None,
    strict: bool = False,
    created_at: str | None = None,
) -> ReviewQueue:
    """Rank levels and decide which go to review.

    ``top_n`` sends the n best-ranked levels to review and overrides any
    threshold. Otherwise a level passes when its score is at least
    ``threshold`` (``default_threshold`` when unset), or strictly above it
    when ``strict`` is set.
    """
    ids = list(level_ids)
    if len(set(ids)) != len(ids):
        raise IntegrityError("duplicate level ids in the screened corpus")
    scores = np.asarray(scores, dtype=float)
    if np.isnan(scores).any():
        raise IntegrityError("model produced NaN scores")
    if top_n is not None:
        if top_n < 0:
            raise ConfigError("top-n must be non-negative")
        cutoff = {"mode": "top-n", "top_n": int(top_n)}
        passes = lambda rank, score: rank <= top_n  # noqa: E731
    else:
        t = default_threshold if threshold is None else float(threshold)
        cutoff = {"mode": "threshold", "threshold": t, "strict": bool(strict)}
        passes = (lambda rank, score: score > t) if strict else (lambda rank, score: score >= t)  # noqa: E731
    entries = []
    for lid, s, rank in rank_levels(ids, scores):
        if passes(rank, s):
            entries.append(QueueEntry(lid, s, rank))
        else:
            entries.append(QueueEntry(lid, s, rank, Status.REJECTED, BELOW_THRESHOLD))
    return ReviewQueue(tuple(entries), model_fingerprint, int(registry_version), model_family, cutoff, created_at)


# -- decisions --------------------------------------------------------------

@dataclass(frozen=True)
class Decision:
    level_id: str
    status: Status
    note: str = ""


def parse_decisions(doc) -> list[Decision]:
    """Accepts ``{"format_version": 1, "decisions": [...]}`` or a bare list.

    Each decision is ``{"level_id", "status": "Approved"|"Rejected", "note"?}``.
    """
    if isinstance(doc, dict):
        if doc.get("format_version", DECISIONS_FORMAT_VERSION) != DECISIONS_FORMAT_VERSION:
            raise VersionError(f"unsupported decisions format_version {doc.get('format_version')!r}")
        doc = doc.get("decisions")
    if not isinstance(doc, list):
        raise ParseError("decisions must be a list")
    out = []
    for i, d in enumerate(doc):
        if not isinstance(d, dict) or "level_id" not in d or "status" not in d:
            raise ParseError(f"decision {i} needs level_id and status")
        try:
            status = Status(d["status"])
        except ValueError:
            raise ParseError(f"decision {i}: unknown status {d['status']!r}") from None
        if status is Status.PENDING:
            raise ParseError(f"decision {i}: a decision must approve or reject")
        out.append(Decision(str(d["level_id"]), status, str(d.get("note", ""))))
    return out


def apply_decisions(queue: ReviewQueue, decisions: Iterable[Decision]) -> ReviewQueue:
    """Apply reviewer decisions; repeating an identical decision is a no-op.

    Any other change to an entry that is no longer Pending raises
    :class:`StateError` and leaves the queue untouched.
    """
    entries = {e.level_id: e for e in queue.entries}
    for d in decisions:
        if d.level_id not in entries:
            raise StateError(f"level {d.level_id!r} is not in the queue", level_id=d.level_id)
        cur = entries[d.level_id]
        if cur.status is Status.PENDING:
            entries[d.level_id] = replace(cur, status=d.status, note=d.note)
        elif cur.status is d.status and cur.note == d.note:
            continue
        else:
            raise StateError(
                f"level {d.level_id!r} is already {cur.status.value}; cannot change it to {d.status.value}",
                level_id=d.level_id,
            )
    return replace(queue, entries=tuple(entries[e.level_id] for e in queue.entries))


def interactive_review(
    queue: ReviewQueue, ask: Callable[[str], str], say: Callable[[str], None] = print
) -> list[Decision]:
    """Prompt for each Pending entry in rank order.

    Answers: ``a`` approve, ``r`` reject, ``s`` skip, ``q`` stop. Text after
    the letter becomes the note, e.g. ``r too easy``.
    """
    out = []
    for e in queue.by_status(Status.PENDING):
        while True:
            answer = ask(f"#{e.rank} {e.level_id} score={e.score:.4f} [a/r/s/q]? ").strip()
            key, _, note = answer.partition(" ")
            key = key.lower()
            if key in ("a", "r"):
                out.append(Decision(e.level_id, Status.APPROVED if key == "a" else Status.REJECTED, note.strip()))
                break
            if key == "s":
                break
            if key == "q":
                return out
            say("answer a, r, s or q")
    return out


# -- pool export ------------------------------------------------------------

def build_pool(queue: ReviewQueue, levels: Iterable[GameLevel], registry: ElementRegistry | None = None) -> dict:
    """Pool document holding exactly the Approved levels, in rank order."""
    by_id = {}
    for lv in levels:
        by_id.setdefault(lv.level_id, lv)
    approved = queue.by_status(Status.APPROVED)
    missing = [e.level_id for e in approved if e.level_id not in by_id]
    if missing:
        raise IntegrityError(f"approved level(s) missing from the corpus: {', '.join(missing)}")
    return {
        "format_version": POOL_FORMAT_VERSION,
        "kind": "level-screen-pool",
        "provenance": {
            "queue_id": queue.queue_id,
            "model_fingerprint": queue.model_fingerprint,
            "model_family": queue.model_family,
            "registry_version": queue.registry_version,
            "created_at": queue.created_at,
        },
        "level_ids": [e.level_id for e in approved],
        "levels": [level_to_dict(by_id[e.level_id], registry) for e in approved],
    }


def read_queue(path: str | Path) -> ReviewQueue:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc.msg}", offset=exc.pos) from None
    return ReviewQueue.from_dict(doc)


def write_queue(queue: ReviewQueue, path: str | Path) -> None:
    atomic_write_text(path, queue.dumps())
