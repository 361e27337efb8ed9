"""Element vocabulary for Creative Mode levels.

The registry is the single source of truth for which element kinds exist,
which group each belongs to and whether it carries a number. Feature column
order is derived from registry order, so the registry is versioned.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .errors import ParseError, SchemaError

REGISTRY_FORMAT_VERSION = 1


class ElementGroup(str, Enum):
    PLAYER_CHARACTER = "PlayerCharacter"
    GOAL = "Goal"
    PHYSICS_OBJECT = "PhysicsObject"
    OBSTACLE = "Obstacle"


@dataclass(frozen=True)
class ElementKind:
    id: str
    group: ElementGroup
    value_bearing: bool


@dataclass(frozen=True)
class ElementRegistry:
    kinds: tuple[ElementKind, ...]
    version: int

    def __post_init__(self):
        seen = set()
        for kind in self.kinds:
            if kind.id in seen:
                raise SchemaError(f"duplicate element kind {kind.id!r}", kind=kind.id)
            seen.add(kind.id)
        object.__setattr__(self, "_index", {k.id: i for i, k in enumerate(self.kinds)})
        for group in (ElementGroup.PLAYER_CHARACTER, ElementGroup.GOAL):
            n = sum(1 for k in self.kinds if k.group is group)
            if n != 1:
                raise SchemaError(f"group {group.value} must contain exactly one kind, found {n}")

    def __len__(self) -> int:
        return len(self.kinds)

    def __contains__(self, kind_id: str) -> bool:
        return kind_id in self._index

    def get(self, kind_id: str) -> ElementKind | None:
        i = self._index.get(kind_id)
        return None if i is None else self.kinds[i]

    def kind_of_group(self, group: ElementGroup) -> ElementKind:
        return next(k for k in self.kinds if k.group is group)

    @property
    def player_character(self) -> ElementKind:
        return self.kind_of_group(ElementGroup.PLAYER_CHARACTER)

    @property
    def goal(self) -> ElementKind:
        return self.kind_of_group(ElementGroup.GOAL)

    @property
    def value_bearing(self) -> tuple[ElementKind, ...]:
        return tuple(k for k in self.kinds if k.value_bearing)

    def to_dict(self) -> dict:
        return {
            "format_version": REGISTRY_FORMAT_VERSION,
            "version": self.version,
            "kinds": [
                {"id": k.id, "group": k.group.value, "value_bearing": k.value_bearing}
                for k in self.kinds
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ElementRegistry":
        try:
            fmt = doc.get("format_version", REGISTRY_FORMAT_VERSION)
            if fmt != REGISTRY_FORMAT_VERSION:
                raise SchemaError(f"unsupported registry format_version {fmt}")
            kinds = tuple(
                ElementKind(str(k["id"]), ElementGroup(k["group"]), bool(k["value_bearing"]))
                for k in doc["kinds"]
            )
            return cls(kinds=kinds, version=int(doc["version"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"malformed registry: {exc}") from exc


def load_registry(path: str | Path) -> ElementRegistry:
    raw = Path(path).read_bytes()
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(f"registry {path}: {exc.msg}", offset=len(raw.decode("utf-8")[: exc.pos].encode())) from exc
    return ElementRegistry.from_dict(doc)


@lru_cache(maxsize=1)
def default_registry() -> ElementRegistry:
    text = resources.files("level_screen").joinpath("data/default_registry.json").read_text()
    return ElementRegistry.from_dict(json.loads(text))
