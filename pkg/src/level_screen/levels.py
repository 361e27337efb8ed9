"""Level data model, level-file parsing and structural validation.

A level file is a JSON object::

    {"format_version": 1, "registry_version": 1, "level_id": "lvl-001",
     "author": "Player", "label": "Selected",
     "elements": [{"kind": "player_character", "value": 5, "row": 2, "col": 3},
                  {"kind": "goal"}]}

``format_version``, ``registry_version``, ``label`` and element positions are
optional. A corpus file holds one such object per line.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

from .errors import ParseError, SchemaError, ValidationError, VersionError
from .registry import ElementGroup, ElementRegistry, default_registry

LEVEL_FORMAT_VERSION = 1


class Author(str, Enum):
    EXPERT = "Expert"
    PLAYER = "Player"


class Label(str, Enum):
    SELECTED = "Selected"
    EXCLUDED = "Excluded"


@dataclass(frozen=True)
class LevelElement:
    kind: str
    value: int | None = None
    position: tuple[int, int] | None = None


@dataclass(frozen=True)
class GameLevel:
    level_id: str
    author: Author
    elements: tuple[LevelElement, ...]
    label: Label | None = None
    # kinds not found in the registry; they are kept and grouped as obstacles
    unknown_kinds: tuple[str, ...] = field(default=(), compare=False)

    def count(self, kind_id: str) -> int:
        return sum(1 for e in self.elements if e.kind == kind_id)

    def with_label(self, label: Label | None) -> "GameLevel":
        return GameLevel(self.level_id, self.author, self.elements, label, self.unknown_kinds)


def element_group(kind_id: str, registry: ElementRegistry | None = None) -> ElementGroup:
    registry = registry or default_registry()
    kind = registry.get(kind_id)
    return ElementGroup.OBSTACLE if kind is None else kind.group


def _byte_offset(text: str, char_pos: int) -> int:
    return len(text[:char_pos].encode("utf-8"))


def _expect_int(obj, where: str, base_offset: int | None) -> int:
    if isinstance(obj, bool) or not isinstance(obj, int):
        raise ParseError(f"{where}: expected integer, got {type(obj).__name__}", offset=base_offset)
    return obj


def level_from_dict(doc, registry: ElementRegistry | None = None, *, offset: int | None = None) -> GameLevel:
    """Build a level from an already-decoded JSON object.

    ``offset`` is the byte offset of the object in its file, used in error
    messages only.
    """
    registry = registry or default_registry()
    if not isinstance(doc, dict):
        raise ParseError("level must be a JSON object", offset=offset)
    fmt = doc.get("format_version", LEVEL_FORMAT_VERSION)
    if fmt != LEVEL_FORMAT_VERSION:
        raise VersionError(f"unsupported level format_version {fmt!r}")
    reg_version = doc.get("registry_version")
    if reg_version is not None and reg_version != registry.version:
        raise VersionError(
            f"level written against registry version {reg_version}, loaded registry is {registry.version}"
        )
    for key in ("level_id", "author", "elements"):
        if key not in doc:
            raise ParseError(f"missing required key {key!r}", offset=offset)
    level_id = doc["level_id"]
    if not isinstance(level_id, str) or not level_id:
        raise ParseError("level_id must be a non-empty string", offset=offset)
    try:
        author = Author(doc["author"])
    except ValueError:
        raise ParseError(f"{level_id}: unknown author {doc['author']!r}", offset=offset) from None
    label = doc.get("label")
    if label is not None:
        try:
            label = Label(label)
        except ValueError:
            raise ParseError(f"{level_id}: unknown label {label!r}", offset=offset) from None
    raw_elements = doc["elements"]
    if not isinstance(raw_elements, list):
        raise ParseError(f"{level_id}: elements must be an array", offset=offset)

    elements = []
    unknown = []
    for i, raw in enumerate(raw_elements):
        where = f"{level_id}: elements[{i}]"
        if not isinstance(raw, dict) or not isinstance(raw.get("kind"), str):
            raise ParseError(f"{where}: element must be an object with a string 'kind'", offset=offset)
        kind_id = raw["kind"]
        kind = registry.get(kind_id)
        value = raw.get("value")
        if value is not None:
            value = _expect_int(value, f"{where}.value", offset)
            if kind is not None and not kind.value_bearing:
                raise SchemaError(f"{where}: kind {kind_id!r} does not carry a value", kind=kind_id)
        if kind is None and kind_id not in unknown:
            unknown.append(kind_id)
        row, col = raw.get("row"), raw.get("col")
        if (row is None) != (col is None):
            raise ParseError(f"{where}: row and col must be given together", offset=offset)
        position = None
        if row is not None:
            position = (_expect_int(row, f"{where}.row", offset), _expect_int(col, f"{where}.col", offset))
        elements.append(LevelElement(kind_id, value, position))
    return GameLevel(level_id, author, tuple(elements), label, tuple(unknown))


def parse_level(data: bytes | str, registry: ElementRegistry | None = None) -> GameLevel:
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed level file: {exc.msg}", offset=_byte_offset(text, exc.pos)) from None
    return level_from_dict(doc, registry, offset=0)


def parse_corpus(data: bytes | str, registry: ElementRegistry | None = None) -> list[GameLevel]:
    """Parse a corpus file (one JSON level per line; blank lines ignored)."""
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    levels = []
    offset = 0
    for lineno, line in enumerate(text.splitlines(keepends=True), start=1):
        if line.strip():
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(
                    f"line {lineno}: malformed level: {exc.msg}", offset=offset + _byte_offset(line, exc.pos)
                ) from None
            levels.append(level_from_dict(doc, registry, offset=offset))
        offset += len(line.encode("utf-8"))
    return levels


def level_to_dict(level: GameLevel, registry: ElementRegistry | None = None) -> dict:
    registry = registry or default_registry()
    doc = {
        "format_version": LEVEL_FORMAT_VERSION,
        "registry_version": registry.version,
        "level_id": level.level_id,
        "author": level.author.value,
    }
    if level.label is not None:
        doc["label"] = level.label.value
    elements = []
    for e in level.elements:
        item = {"kind": e.kind}
        if e.value is not None:
            item["value"] = e.value
        if e.position is not None:
            item["row"], item["col"] = e.position
        elements.append(item)
    doc["elements"] = elements
    return doc


def serialize_level(level: GameLevel, registry: ElementRegistry | None = None) -> bytes:
    return json.dumps(level_to_dict(level, registry), separators=(",", ":")).encode("utf-8")


def serialize_corpus(levels: Iterable[GameLevel], registry: ElementRegistry | None = None) -> bytes:
    return b"".join(serialize_level(lv, registry) + b"\n" for lv in levels)


@dataclass(frozen=True)
class Violation:
    invariant: str
    message: str
    elements: tuple[int, ...] = ()


@dataclass(frozen=True)
class ValidationResult:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def raise_for_violations(self, level_id: str = "") -> None:
        if self.violations:
            names = ", ".join(v.invariant for v in self.violations)
            raise ValidationError(f"level {level_id} violates: {names}", self.violations)


def validate_level(
    level: GameLevel, registry: ElementRegistry | None = None, *, labeled: bool | None = None
) -> ValidationResult:
    """Check the structural invariants of a level.

    ``labeled=True`` additionally requires a label (labeled corpus);
    ``labeled=False`` requires its absence (screening candidates).
    """
    registry = registry or default_registry()
    goal_id = registry.goal.id
    pc_id = registry.player_character.id
    violations = []

    goals = tuple(i for i, e in enumerate(level.elements) if e.kind == goal_id)
    if len(goals) != 1:
        violations.append(Violation("goal-count", f"expected exactly one {goal_id}, found {len(goals)}", goals))
    if not any(e.kind == pc_id for e in level.elements):
        violations.append(Violation("player-character-count", f"expected at least one {pc_id}, found 0"))

    bad_values = []
    for i, e in enumerate(level.elements):
        kind = registry.get(e.kind)
        if e.value is not None and kind is not None and not kind.value_bearing:
            bad_values.append(i)
    if bad_values:
        kinds = sorted({level.elements[i].kind for i in bad_values})
        violations.append(
            Violation("value-on-non-value-bearing", f"values attached to {', '.join(kinds)}", tuple(bad_values))
        )

    if labeled is True and level.label is None:
        violations.append(Violation("label-missing", "labeled corpus level has no label"))
    elif labeled is False and level.label is not None:
        violations.append(Violation("label-present", "unlabeled candidate carries a label"))
    return ValidationResult(tuple(violations))
