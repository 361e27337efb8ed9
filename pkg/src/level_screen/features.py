"""Fixed-width numeric features for levels.

Every registry kind contributes a ``Count`` column; every value-bearing kind
adds ``ValueSum``, ``ValueMean`` and ``ValueMax``. With the default registry
(25 kinds, 12 value-bearing) that is 25 + 36 = 61 columns.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError, ParseError, VersionError
from .levels import Author, GameLevel, Label
from .registry import ElementGroup, ElementRegistry, default_registry

MATRIX_FORMAT_VERSION = 1


class Stat(str, Enum):
    COUNT = "Count"
    VALUE_SUM = "ValueSum"
    VALUE_MEAN = "ValueMean"
    VALUE_MAX = "ValueMax"


VALUE_STATS = (Stat.VALUE_SUM, Stat.VALUE_MEAN, Stat.VALUE_MAX)


@dataclass(frozen=True)
class FeatureColumn:
    name: str
    group: ElementGroup
    kind_id: str
    stat: Stat


@dataclass(frozen=True)
class FeatureSchema:
    columns: tuple[FeatureColumn, ...]
    registry_version: int

    @classmethod
    def from_registry(cls, registry: ElementRegistry | None = None) -> "FeatureSchema":
        registry = registry or default_registry()
        columns = []
        for kind in registry.kinds:
            stats = (Stat.COUNT,) + (VALUE_STATS if kind.value_bearing else ())
            for stat in stats:
                columns.append(FeatureColumn(f"{kind.id}.{stat.value}", kind.group, kind.id, stat))
        return cls(tuple(columns), registry.version)

    def __len__(self) -> int:
        return len(self.columns)

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    def index(self, name: str) -> int:
        for i, c in enumerate(self.columns):
            if c.name == name:
                return i
        raise KeyError(name)


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    missing_mask: np.ndarray
    level_id: str


def extract_features(
    level: GameLevel, schema: FeatureSchema, registry: ElementRegistry | None = None
) -> FeatureVector:
    """Count each kind and summarize the numbers attached to value-bearing kinds.

    Value statistics of an absent kind are missing (NaN, mask bit set). An
    element of a value-bearing kind written without a value contributes 0.
    Kinds unknown to the registry have no column and are ignored here.
    """
    registry = registry or default_registry()
    if schema.registry_version != registry.version:
        raise VersionError(
            f"feature schema built for registry v{schema.registry_version}, level parsed with v{registry.version}"
        )
    per_kind: dict[str, list[int]] = {}
    for e in level.elements:
        per_kind.setdefault(e.kind, []).append(0 if e.value is None else e.value)

    values = np.empty(len(schema), dtype=float)
    mask = np.zeros(len(schema), dtype=bool)
    for j, col in enumerate(schema.columns):
        vals = per_kind.get(col.kind_id, [])
        if col.stat is Stat.COUNT:
            values[j] = len(vals)
        elif not vals:
            values[j] = np.nan
            mask[j] = True
        elif col.stat is Stat.VALUE_SUM:
            values[j] = sum(vals)
        elif col.stat is Stat.VALUE_MEAN:
            values[j] = sum(vals) / len(vals)
        else:
            values[j] = max(vals)
    return FeatureVector(values, mask, level.level_id)


@dataclass
class DataMatrix:
    """Rows of features for a corpus.

    ``values`` holds NaN where a value statistic is missing until the matrix
    is imputed; ``missing_mask`` is kept either way for auditing.
    """

    values: np.ndarray
    missing_mask: np.ndarray
    level_ids: tuple[str, ...]
    schema: FeatureSchema
    labels: np.ndarray | None = None
    imputation: str | None = None

    def __post_init__(self):
        n = len(self.level_ids)
        if self.values.shape != (n, len(self.schema)) or self.missing_mask.shape != self.values.shape:
            raise DataError(
                f"matrix shape {self.values.shape} / mask {self.missing_mask.shape} "
                f"does not match {n} rows x {len(self.schema)} columns"
            )
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (n,):
                raise DataError(f"{len(self.labels)} labels for {n} rows")
            if not np.isin(self.labels, (0, 1)).all():
                raise DataError("labels must be 0 or 1")

    @property
    def n_rows(self) -> int:
        return len(self.level_ids)

    @property
    def column_names(self) -> list[str]:
        return self.schema.names

    def row(self, i: int) -> FeatureVector:
        return FeatureVector(self.values[i], self.missing_mask[i], self.level_ids[i])

    def take(self, idx: Sequence[int]) -> "DataMatrix":
        idx = np.asarray(idx, dtype=np.int64)
        return replace(
            self,
            values=self.values[idx],
            missing_mask=self.missing_mask[idx],
            level_ids=tuple(self.level_ids[i] for i in idx),
            labels=None if self.labels is None else self.labels[idx],
        )

    def with_labels(self, labels) -> "DataMatrix":
        return replace(self, labels=None if labels is None else np.asarray(labels))


def build_matrix(
    levels: Iterable[GameLevel],
    schema: FeatureSchema | None = None,
    registry: ElementRegistry | None = None,
    *,
    labeled: bool = True,
    include_expert: bool = False,
) -> DataMatrix:
    """Extract every level into one matrix.

    By default only player-authored levels are kept (the expert verdict is
    what is being predicted). With ``include_expert`` expert levels are kept
    too, and an expert level without a label counts as selected.
    """
    registry = registry or default_registry()
    schema = schema or FeatureSchema.from_registry(registry)
    rows, labels = [], []
    for level in levels:
        if level.author is Author.EXPERT and not include_expert:
            continue
        rows.append(extract_features(level, schema, registry))
        if labeled:
            label = level.label
            if label is None and level.author is Author.EXPERT:
                label = Label.SELECTED
            if label is None:
                raise DataError(f"level {level.level_id} has no label")
            labels.append(1 if label is Label.SELECTED else 0)
    p = len(schema)
    values = np.array([r.values for r in rows], dtype=float).reshape(len(rows), p)
    mask = np.array([r.missing_mask for r in rows], dtype=bool).reshape(len(rows), p)
    return DataMatrix(values, mask, tuple(r.level_id for r in rows), schema, np.array(labels) if labeled else None)


@dataclass(frozen=True)
class ImputePolicy:
    """How missing value statistics are filled; the default writes zeros."""

    strategy: str = "zero"
    fill_value: float = 0.0

    def describe(self) -> str:
        if self.strategy == "zero":
            return "missing value statistics replaced by 0"
        return f"missing value statistics replaced by constant {self.fill_value!r}"

    @property
    def fill(self) -> float:
        return 0.0 if self.strategy == "zero" else float(self.fill_value)


def impute_and_encode(matrix: DataMatrix, policy: ImputePolicy = ImputePolicy()) -> DataMatrix:
    if policy.strategy not in ("zero", "constant"):
        raise ValueError(f"unknown imputation strategy {policy.strategy!r}")
    values = matrix.values.copy()
    values[matrix.missing_mask] = policy.fill
    # count columns are never masked so they pass through untouched
    return replace(matrix, values=values, missing_mask=matrix.missing_mask.copy(), imputation=policy.describe())


@dataclass(frozen=True)
class GroupSummary:
    group: ElementGroup
    columns: tuple[str, ...]
    nonzero_rate: tuple[float, ...]


def group_summary(matrix: DataMatrix) -> list[GroupSummary]:
    vals = np.nan_to_num(matrix.values, nan=0.0)
    rates = (vals != 0).mean(axis=0) if matrix.n_rows else np.zeros(len(matrix.schema))
    out = []
    for group in ElementGroup:
        idx = [j for j, c in enumerate(matrix.schema.columns) if c.group is group]
        out.append(
            GroupSummary(
                group,
                tuple(matrix.schema.columns[j].name for j in idx),
                tuple(float(rates[j]) for j in idx),
            )
        )
    return out


def format_group_summary(summary: list[GroupSummary]) -> str:
    lines = []
    for g in summary:
        lines.append(f"{g.group.value} ({len(g.columns)} columns)")
        for name, rate in zip(g.columns, g.nonzero_rate):
            lines.append(f"  {name:<34} nonzero {rate:6.1%}")
    return "\n".join(lines)


# -- matrix files -----------------------------------------------------------

def _fmt(v: float) -> str:
    if math.isnan(v):
        return ""
    if float(v).is_integer():
        return str(int(v))
    return repr(float(v))


def _header_line(kind: str, schema: FeatureSchema) -> str:
    return f"# level-screen {kind} format_version={MATRIX_FORMAT_VERSION} registry_version={schema.registry_version}\n"


def matrix_to_csv(matrix: DataMatrix) -> tuple[str, str]:
    """Render (values file, mask file) text."""
    values_buf, mask_buf = io.StringIO(), io.StringIO()
    values_buf.write(_header_line("matrix", matrix.schema))
    mask_buf.write(_header_line("mask", matrix.schema))
    vw = csv.writer(values_buf, lineterminator="\n")
    mw = csv.writer(mask_buf, lineterminator="\n")
    header = ["level_id"] + matrix.column_names
    vw.writerow(header + (["label"] if matrix.labels is not None else []))
    mw.writerow(header)
    for i, lid in enumerate(matrix.level_ids):
        row = [lid] + [_fmt(v) for v in matrix.values[i]]
        if matrix.labels is not None:
            row.append(str(int(matrix.labels[i])))
        vw.writerow(row)
        mw.writerow([lid] + ["1" if m else "0" for m in matrix.missing_mask[i]])
    return values_buf.getvalue(), mask_buf.getvalue()


def mask_path_for(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".mask" + path.suffix)


def _read_header(lines: list[str], kind: str, path) -> int:
    if not lines or not lines[0].startswith(f"# level-screen {kind} "):
        raise ParseError(f"{path}: not a level-screen {kind} file", offset=0)
    fields = dict(tok.split("=", 1) for tok in lines[0][2:].split()[2:])
    if int(fields.get("format_version", -1)) != MATRIX_FORMAT_VERSION:
        raise VersionError(f"{path}: unsupported {kind} format_version {fields.get('format_version')}")
    return int(fields["registry_version"])


def matrix_from_csv(values_text: str, mask_text: str | None, schema: FeatureSchema, path="<matrix>") -> DataMatrix:
    lines = values_text.splitlines(keepends=True)
    reg_version = _read_header(lines, "matrix", path)
    if reg_version != schema.registry_version:
        raise VersionError(
            f"{path}: matrix built with registry v{reg_version}, expected v{schema.registry_version}"
        )
    rows = list(csv.reader(lines[1:]))
    header = rows[0]
    has_label = header[-1] == "label"
    names = header[1:-1] if has_label else header[1:]
    if names != schema.names:
        raise VersionError(f"{path}: column layout does not match the feature schema")
    body = rows[1:]
    n, p = len(body), len(names)
    values = np.empty((n, p))
    level_ids = []
    labels = [] if has_label else None
    for i, row in enumerate(body):
        if len(row) != len(header):
            raise ParseError(f"{path}: row {i + 1} has {len(row)} cells, expected {len(header)}")
        level_ids.append(row[0])
        cells = row[1 : 1 + p]
        try:
            values[i] = [float(c) if c != "" else np.nan for c in cells]
            if has_label:
                labels.append(int(row[-1]))
        except ValueError as exc:
            raise ParseError(f"{path}: row {i + 1}: {exc}") from None
    if mask_text is None:
        mask = np.isnan(values)
    else:
        mlines = mask_text.splitlines(keepends=True)
        if _read_header(mlines, "mask", path) != reg_version:
            raise VersionError(f"{path}: mask and matrix registry versions differ")
        mrows = list(csv.reader(mlines[2:]))
        if [r[0] for r in mrows] != level_ids:
            raise ParseError(f"{path}: mask rows do not align with matrix rows")
        mask = np.array([[c == "1" for c in r[1:]] for r in mrows], dtype=bool).reshape(n, p)
    return DataMatrix(values, mask, tuple(level_ids), schema, None if labels is None else np.array(labels))


def write_matrix(matrix: DataMatrix, path: str | Path) -> Path:
    from ._io import atomic_write_text

    values_text, mask_text = matrix_to_csv(matrix)
    atomic_write_text(path, values_text)
    mask_path = mask_path_for(path)
    atomic_write_text(mask_path, mask_text)
    return mask_path


def read_matrix(path: str | Path, schema: FeatureSchema | None = None) -> DataMatrix:
    path = Path(path)
    schema = schema or FeatureSchema.from_registry()
    mask_path = mask_path_for(path)
    mask_text = mask_path.read_text() if mask_path.exists() else None
    return matrix_from_csv(path.read_text(), mask_text, schema, path)


def matrix_fingerprint(matrix: DataMatrix) -> str:
    values_text, mask_text = matrix_to_csv(matrix)
    return hashlib.sha256((values_text + mask_text).encode()).hexdigest()[:16]
