"""Synthetic labeled corpora with a planted selection rule.

Levels are sparse: the goal and at least one player character are always
present, every other kind shows up only occasionally. A level is labeled
selected when a weighted sum of its feature columns exceeds a threshold,
and each label is then flipped independently with probability
``label_noise``. Every level draws from its own random substream keyed by
(seed, level index), so output does not depend on generation order.
"""

from __future__ import annotations

import operator
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError, GenerationError
from .features import FeatureSchema, extract_features
from .levels import Author, GameLevel, Label, LevelElement
from .registry import ElementGroup, ElementRegistry, default_registry

SYNTH_MANIFEST_VERSION = 1

_OPS = {
    "==": operator.eq,
    "!=": operator.ne,
    ">=": operator.ge,
    "<=": operator.le,
    ">": operator.gt,
    "<": operator.lt,
}

DEFAULT_WEIGHTS = {
    "player_character.Count": 2.0,
    "one_way_platform.Count": 1.5,
    "bubble.Count": 1.2,
    "platform_bubble.Count": 0.9,
    "poppable_bubble.Count": 0.7,
}

DEFAULT_CONSTRAINTS = (
    ("goal.Count", "==", 1.0),
    ("player_character.Count", ">=", 1.0),
)

GRID_ROWS, GRID_COLS = 12, 20


@dataclass(frozen=True)
class PlantedRule:
    """``selected = sum(w * x) > threshold``; a threshold of None is calibrated
    from the generated scores to hit the target positive rate."""

    weights: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))
    threshold: float | None = None
    constraints: tuple[tuple[str, str, float], ...] = DEFAULT_CONSTRAINTS

    def score(self, values: np.ndarray, schema: FeatureSchema) -> float:
        x = np.nan_to_num(values, nan=0.0)
        return float(sum(w * x[schema.index(name)] for name, w in self.weights.items()))

    def satisfied(self, values: np.ndarray, schema: FeatureSchema) -> bool:
        x = np.nan_to_num(values, nan=0.0)
        return all(_OPS[op](x[schema.index(col)], bound) for col, op, bound in self.constraints)


@dataclass(frozen=True)
class SynthConfig:
    n_levels: int = 120
    positive_rate_target: float = 44 / 120
    rule: PlantedRule = field(default_factory=PlantedRule)
    label_noise: float = 0.0
    seed: int = 0
    presence_rate: float = 0.3
    expert_fraction: float = 0.0
    max_retries: int = 200

    def validate(self, schema: FeatureSchema) -> None:
        if self.n_levels < 1:
            raise ConfigError("n_levels must be positive")
        if not 0.0 < self.positive_rate_target < 1.0:
            raise ConfigError("positive_rate_target must lie in (0, 1)")
        if not 0.0 <= self.label_noise < 0.5:
            raise ConfigError("label_noise must lie in [0, 0.5)")
        if not 0.0 <= self.presence_rate <= 1.0:
            raise ConfigError("presence_rate must lie in [0, 1]")
        if not 0.0 <= self.expert_fraction <= 1.0:
            raise ConfigError("expert_fraction must lie in [0, 1]")
        names = set(schema.names)
        for name in list(self.rule.weights) + [c[0] for c in self.rule.constraints]:
            if name not in names:
                raise ConfigError(f"planted rule references unknown column {name!r}")
        for _, op, _ in self.rule.constraints:
            if op not in _OPS:
                raise ConfigError(f"unknown constraint operator {op!r}")

    @classmethod
    def from_dict(cls, doc: dict) -> "SynthConfig":
        doc = dict(doc)
        rule = doc.pop("rule", None)
        if rule is not None:
            rule = PlantedRule(
                weights=dict(rule.get("weights", DEFAULT_WEIGHTS)),
                threshold=rule.get("threshold"),
                constraints=tuple(tuple(c) for c in rule.get("constraints", DEFAULT_CONSTRAINTS)),
            )
            doc["rule"] = rule
        try:
            return cls(**doc)
        except TypeError as exc:
            raise ConfigError(f"bad synth config: {exc}") from None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["rule"]["constraints"] = [list(c) for c in self.rule.constraints]
        return d


@dataclass(frozen=True)
class SynthCorpus:
    levels: list[GameLevel]
    true_labels: list[int]
    scores: list[float]
    threshold: float
    config: SynthConfig

    def manifest(self) -> dict:
        return {
            "format_version": SYNTH_MANIFEST_VERSION,
            "config": self.config.to_dict(),
            "threshold": self.threshold,
            "positives": int(sum(lv.label is Label.SELECTED for lv in self.levels)),
            "true_positives": int(sum(self.true_labels)),
            "levels": [
                {"level_id": lv.level_id, "score": s, "true_label": t}
                for lv, s, t in zip(self.levels, self.scores, self.true_labels)
            ],
        }


def _level_rng(seed: int, index: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index, stream)))


def _draw_level(rng: np.random.Generator, registry: ElementRegistry, presence_rate: float) -> list[LevelElement]:
    elements = []

    def place(kind, value=None):
        pos = (int(rng.integers(GRID_ROWS)), int(rng.integers(GRID_COLS)))
        elements.append(LevelElement(kind.id, value, pos))

    for kind in registry.kinds:
        if kind.group is ElementGroup.GOAL:
            n = 1
        elif kind.group is ElementGroup.PLAYER_CHARACTER:
            n = 1 + int(rng.choice(3, p=(0.6, 0.28, 0.12)))
        elif rng.random() < presence_rate:
            n = min(int(rng.geometric(0.55)), 4)
        else:
            n = 0
        for _ in range(n):
            value = int(rng.integers(-10, 21)) if kind.value_bearing else None
            if kind.group is ElementGroup.PLAYER_CHARACTER:
                value = int(rng.integers(1, 21))
            place(kind, value)
    # files list elements in placement order, not registry order
    order = rng.permutation(len(elements))
    return [elements[i] for i in order]


def generate_corpus(
    config: SynthConfig, schema: FeatureSchema | None = None, registry: ElementRegistry | None = None
) -> SynthCorpus:
    registry = registry or default_registry()
    schema = schema or FeatureSchema.from_registry(registry)
    config.validate(schema)
    rule = config.rule

    drafts, scores = [], []
    for i in range(config.n_levels):
        rng = _level_rng(config.seed, i, 0)
        for _ in range(config.max_retries):
            elements = _draw_level(rng, registry, config.presence_rate)
            author = Author.EXPERT if rng.random() < config.expert_fraction else Author.PLAYER
            draft = GameLevel(f"lvl-{i:04d}", author, tuple(elements))
            fv = extract_features(draft, schema, registry)
            if rule.satisfied(fv.values, schema):
                break
        else:
            raise GenerationError(
                f"level {i}: planted constraints unsatisfied after {config.max_retries} attempts"
            )
        drafts.append(draft)
        scores.append(rule.score(fv.values, schema))

    threshold = rule.threshold
    if threshold is None:
        threshold = _calibrate_threshold(np.array(scores), config.positive_rate_target)

    levels, truth = [], []
    for i, (draft, s) in enumerate(zip(drafts, scores)):
        t = int(s > threshold)
        y = t
        if config.label_noise > 0 and _level_rng(config.seed, i, 1).random() < config.label_noise:
            y = 1 - t
        truth.append(t)
        levels.append(draft.with_label(Label.SELECTED if y else Label.EXCLUDED))
    return SynthCorpus(levels, truth, scores, float(threshold), config)


def _calibrate_threshold(scores: np.ndarray, rate: float) -> float:
    """Midpoint threshold leaving about ``rate`` of the scores strictly above it."""
    s = np.sort(scores)
    n = len(s)
    k = min(max(int(round(rate * n)), 1), n - 1) if n > 1 else 0
    if n == 1:
        return float(s[0]) - 0.5
    lo, hi = s[n - k - 1], s[n - k]
    if lo == hi:
        # tie at the cut: take the nearest gap that keeps the rate closest
        above = s[s > hi]
        below = s[s < lo]
        cand = []
        if above.size:
            cand.append(((hi + above[0]) / 2, abs(int((s > (hi + above[0]) / 2).sum()) - k)))
        if below.size:
            cand.append(((below[-1] + lo) / 2, abs(int((s > (below[-1] + lo) / 2).sum()) - k)))
        if not cand:
            return float(hi) - 0.5
        return float(min(cand, key=lambda c: c[1])[0])
    return float((lo + hi) / 2)
