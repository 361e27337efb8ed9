"""Screening of player-made game levels: feature extraction, classifiers,
nested cross-validation and a review workflow."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    ConvergenceError,
    DataError,
    GenerationError,
    IntegrityError,
    LevelScreenError,
    ParseError,
    SchemaError,
    StateError,
    UndefinedMetricError,
    ValidationError,
    VersionError,
)
from .features import DataMatrix, FeatureSchema, build_matrix, extract_features, impute_and_encode
from .levels import GameLevel, LevelElement, parse_corpus, parse_level, validate_level
from .registry import ElementRegistry, default_registry, load_registry
from .synth import PlantedRule, SynthConfig, generate_corpus

__all__ = [
    "ConfigError",
    "ConvergenceError",
    "DataError",
    "DataMatrix",
    "ElementRegistry",
    "FeatureSchema",
    "GameLevel",
    "GenerationError",
    "IntegrityError",
    "LevelElement",
    "LevelScreenError",
    "ParseError",
    "PlantedRule",
    "SchemaError",
    "StateError",
    "SynthConfig",
    "UndefinedMetricError",
    "ValidationError",
    "VersionError",
    "build_matrix",
    "default_registry",
    "extract_features",
    "generate_corpus",
    "impute_and_encode",
    "load_registry",
    "parse_corpus",
    "parse_level",
    "validate_level",
]
