import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_level
from level_screen.errors import ParseError, SchemaError, ValidationError, VersionError
from level_screen.levels import (
    Author,
    GameLevel,
    Label,
    LevelElement,
    element_group,
    parse_corpus,
    parse_level,
    serialize_corpus,
    serialize_level,
    validate_level,
)
from level_screen.registry import ElementGroup, ElementKind, ElementRegistry, default_registry, load_registry

NAMED_KINDS = [
    "player_character", "goal", "ice_block_x1", "ice_block_x10", "lava_block_x1", "lava_block_x10", "bubble",
    "one_way_platform", "slimy_platform", "sticky_platform", "cloud", "door", "spiky_platform", "breakable_wall",
]


def test_default_registry_shape(registry):
    assert len(registry) == 25
    assert len(registry.value_bearing) == 12
    ids = [k.id for k in registry.kinds]
    assert len(set(ids)) == 25
    for kind in NAMED_KINDS:
        assert kind in registry
    groups = [k.group for k in registry.kinds]
    assert groups.count(ElementGroup.PLAYER_CHARACTER) == 1
    assert groups.count(ElementGroup.GOAL) == 1
    # the four values named for the table are value-bearing
    for kind in ("player_character", "cloud", "door", "breakable_wall"):
        assert registry.get(kind).value_bearing
    assert not registry.get("ice_block_x1").value_bearing
    assert not registry.get("goal").value_bearing


def test_registry_rejects_duplicates_and_second_goal():
    pc = ElementKind("pc", ElementGroup.PLAYER_CHARACTER, True)
    goal = ElementKind("g", ElementGroup.GOAL, False)
    with pytest.raises(SchemaError):
        ElementRegistry((pc, goal, goal), 1)
    with pytest.raises(SchemaError):
        ElementRegistry((pc, goal, ElementKind("g2", ElementGroup.GOAL, False)), 1)


def test_registry_file_round_trip(tmp_path, registry):
    path = tmp_path / "reg.json"
    path.write_text(json.dumps(registry.to_dict()))
    assert load_registry(path) == registry
    path.write_text('{"version": 1, "kinds": [')
    with pytest.raises(ParseError):
        load_registry(path)


def test_minimal_level_parses():
    lv = parse_level(b'{"level_id": "a", "author": "Player", "elements": '
                     b'[{"kind": "player_character", "value": 5}, {"kind": "goal"}]}')
    assert len(lv.elements) == 2
    assert lv.count("goal") == 1
    assert lv.elements[0].value == 5
    assert validate_level(lv).ok


def test_two_goals_fail_validation():
    lv = parse_level('{"level_id": "a", "author": "Player", "elements": '
                     '[{"kind": "goal"}, {"kind": "goal"}, {"kind": "player_character"}]}')
    result = validate_level(lv)
    assert [v.invariant for v in result.violations] == ["goal-count"]
    assert result.violations[0].elements == (0, 1)
    with pytest.raises(ValidationError):
        result.raise_for_violations(lv.level_id)


def test_value_on_ice_block_is_schema_error():
    with pytest.raises(SchemaError) as err:
        parse_level('{"level_id": "a", "author": "Player", "elements": '
                    '[{"kind": "player_character"}, {"kind": "goal"}, {"kind": "ice_block_x1", "value": 3}]}')
    assert err.value.kind == "ice_block_x1"


def test_validation_examples():
    assert validate_level(make_level()).ok
    no_goal = make_level(elements=(("player_character", 1),))
    assert [v.invariant for v in validate_level(no_goal).violations] == ["goal-count"]
    two_pc = make_level(elements=(("player_character", 1), ("player_character", 2), ("goal", None)))
    assert validate_level(two_pc).ok
    no_pc = make_level(elements=(("goal", None),))
    assert [v.invariant for v in validate_level(no_pc).violations] == ["player-character-count"]


def test_validation_label_modes():
    lv = make_level()
    assert [v.invariant for v in validate_level(lv, labeled=True).violations] == ["label-missing"]
    labeled = lv.with_label(Label.SELECTED)
    assert validate_level(labeled, labeled=True).ok
    assert [v.invariant for v in validate_level(labeled, labeled=False).violations] == ["label-present"]


def test_validate_is_pure():
    lv = make_level(elements=(("goal", None), ("goal", None)))
    assert validate_level(lv) == validate_level(lv)


def test_malformed_json_reports_byte_offset():
    data = '{"level_id": "é", "author": "Player", "elements": [}'.encode()
    with pytest.raises(ParseError) as err:
        parse_level(data)
    # the bad character sits after a two-byte é
    assert err.value.offset == data.index(b"}")


@pytest.mark.parametrize(
    "doc",
    [
        "[]",
        '{"author": "Player", "elements": []}',
        '{"level_id": "a", "author": "Robot", "elements": []}',
        '{"level_id": "a", "author": "Player", "label": "Maybe", "elements": []}',
        '{"level_id": "a", "author": "Player", "elements": [{"kind": 3}]}',
        '{"level_id": "a", "author": "Player", "elements": [{"kind": "goal", "row": 1}]}',
        '{"level_id": "a", "author": "Player", "elements": [{"kind": "bubble", "value": 1.5}]}',
    ],
)
def test_structural_parse_errors(doc):
    with pytest.raises(ParseError):
        parse_level(doc)


def test_version_mismatch():
    with pytest.raises(VersionError):
        parse_level('{"format_version": 9, "level_id": "a", "author": "Player", "elements": []}')
    with pytest.raises(VersionError):
        parse_level('{"registry_version": 99, "level_id": "a", "author": "Player", "elements": []}')


def test_unknown_kind_is_kept_as_obstacle():
    lv = parse_level('{"level_id": "a", "author": "Player", "elements": '
                     '[{"kind": "player_character"}, {"kind": "goal"}, {"kind": "laser_gate", "value": 2}]}')
    assert lv.unknown_kinds == ("laser_gate",)
    assert lv.elements[2] == LevelElement("laser_gate", 2)
    assert element_group("laser_gate") is ElementGroup.OBSTACLE
    assert validate_level(lv).ok


def test_corpus_offsets_point_at_bad_line():
    good = serialize_level(make_level("a")) + b"\n"
    bad = b'{"level_id": "b", "author": "Player", "elements": [}\n'
    with pytest.raises(ParseError) as err:
        parse_corpus(good + b"\n" + bad)
    assert err.value.offset == len(good) + 1 + bad.index(b"}")


_kinds = [k.id for k in default_registry().kinds]


@st.composite
def levels(draw):
    reg = default_registry()
    elements = []
    for kind in draw(st.lists(st.sampled_from(_kinds), max_size=12)):
        value = draw(st.none() | st.integers(-10**6, 10**6)) if reg.get(kind).value_bearing else None
        pos = draw(st.none() | st.tuples(st.integers(0, 50), st.integers(0, 50)))
        elements.append(LevelElement(kind, value, pos))
    return GameLevel(
        draw(st.text(min_size=1, max_size=12)),
        draw(st.sampled_from(list(Author))),
        tuple(elements),
        draw(st.none() | st.sampled_from(list(Label))),
    )


@settings(max_examples=200, deadline=None)
@given(levels())
def test_serialize_parse_round_trip(level):
    assert parse_level(serialize_level(level)) == level


@settings(max_examples=50, deadline=None)
@given(st.lists(levels(), max_size=5))
def test_corpus_round_trip(corpus):
    assert parse_corpus(serialize_corpus(corpus)) == corpus
