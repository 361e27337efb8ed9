"""Exception hierarchy shared by every stage of the screening pipeline."""

from __future__ import annotations


class LevelScreenError(Exception):
    """Base class; ``exit_code`` is what the CLI returns when it surfaces."""

    exit_code = 1


class ParseError(LevelScreenError):
    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte {offset})"
        super().__init__(message)
        self.offset = offset


class SchemaError(LevelScreenError):
    def __init__(self, message: str, kind: str | None = None):
        super().__init__(message)
        self.kind = kind


class ValidationError(LevelScreenError):
    def __init__(self, message: str, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class VersionError(LevelScreenError):
    pass


class DataError(LevelScreenError):
    pass


class ConfigError(LevelScreenError):
    exit_code = 2


class ConvergenceError(LevelScreenError):
    """Raised by iterative solvers; carries the last iterate for inspection."""

    def __init__(self, message: str, iterate=None, iterations: int = 0, violation: float | None = None):
        super().__init__(message)
        self.iterate = iterate
        self.iterations = iterations
        self.violation = violation


class UndefinedMetricError(LevelScreenError):
    pass


class GenerationError(LevelScreenError):
    pass


class StateError(LevelScreenError):
    def __init__(self, message: str, level_id: str | None = None):
        super().__init__(message)
        self.level_id = level_id


class IntegrityError(LevelScreenError):
    pass
