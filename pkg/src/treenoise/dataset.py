"""Typed tabular datasets: schema, CSV loading, attribute domains and normal fits.

A :class:`Dataset` is column-oriented. Numeric columns are float64 arrays,
categorical columns are object arrays of ``str`` labels. Datasets are treated
as immutable; every transformation returns a new instance.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

logger = logging.getLogger(__name__)

MISSING_MARKERS = frozenset({"", "?", "NA", "NaN", "nan"})


class DatasetError(ValueError):
    """Raised for malformed schemas, unreadable files and bad cell values."""


class Kind(str, Enum):
    NUMERIC = "numeric"
    CATEGORICAL = "categorical"


class Role(str, Enum):
    FEATURE = "feature"
    CLASS = "class"
    IGNORED = "ignored"


@dataclass(frozen=True)
class AttributeDescriptor:
    name: str
    kind: Kind
    role: Role = Role.FEATURE

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "role", Role(self.role))

    @property
    def is_numeric(self) -> bool:
        return self.kind is Kind.NUMERIC


@dataclass(frozen=True)
class Schema:
    """Ordered attribute declarations with exactly one categorical class column."""

    attributes: tuple[AttributeDescriptor, ...]

    def __post_init__(self):
        attrs = tuple(self.attributes)
        object.__setattr__(self, "attributes", attrs)
        names = [a.name for a in attrs]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise DatasetError(f"duplicate attribute names: {dupes}")
        classes = [a for a in attrs if a.role is Role.CLASS]
        if len(classes) != 1:
            raise DatasetError(f"schema needs exactly one class attribute, found {len(classes)}")
        if classes[0].kind is not Kind.CATEGORICAL:
            raise DatasetError(f"class attribute {classes[0].name!r} must be categorical")

    @classmethod
    def from_spec(cls, spec: Iterable[Mapping]) -> "Schema":
        """Build from ``[{"name": ..., "kind": ..., "role": ...}, ...]``."""
        try:
            return cls(tuple(AttributeDescriptor(d["name"], d["kind"], d.get("role", "feature")) for d in spec))
        except (KeyError, TypeError) as exc:
            raise DatasetError(f"bad schema entry: {exc}") from exc

    @property
    def names(self) -> list[str]:
        return [a.name for a in self.attributes]

    @property
    def class_name(self) -> str:
        return next(a.name for a in self.attributes if a.role is Role.CLASS)

    @property
    def features(self) -> list[AttributeDescriptor]:
        return [a for a in self.attributes if a.role is Role.FEATURE]

    def kept(self) -> "Schema":
        """Schema without ignored attributes."""
        return Schema(tuple(a for a in self.attributes if a.role is not Role.IGNORED))

    def __getitem__(self, name: str) -> AttributeDescriptor:
        for a in self.attributes:
            if a.name == name:
                return a
        raise KeyError(name)

    def __contains__(self, name: object) -> bool:
        return any(a.name == name for a in self.attributes)

    def index(self, name: str) -> int:
        return self.names.index(name)


@dataclass(frozen=True)
class DomainRange:
    """Admissible interval ``[a, a + D]`` of a numeric attribute.

    ``integer`` marks attributes whose observed values all lie on the integer
    lattice; wrapping then happens modulo ``D + 1`` rather than ``D``.
    """

    a: float
    D: float
    integer: bool = False
    # exact upper bound; a + D can round below the observed maximum
    top: float | None = None

    def __post_init__(self):
        if not self.D >= 0:
            raise DatasetError(f"domain width must be >= 0, got {self.D}")
        if self.top is None:
            object.__setattr__(self, "top", self.a + self.D)

    @property
    def low(self) -> float:
        return self.a

    @property
    def high(self) -> float:
        return self.top

    def contains(self, value) -> np.ndarray | bool:
        return (value >= self.low) & (value <= self.high)


@dataclass(frozen=True)
class NormalFit:
    mean: float
    std: float


@dataclass(frozen=True, eq=False)
class Dataset:
    schema: Schema
    columns: Mapping[str, np.ndarray]
    meta: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        schema = self.schema.kept()
        object.__setattr__(self, "schema", schema)
        cols = {}
        n = None
        for attr in schema.attributes:
            if attr.name not in self.columns:
                raise DatasetError(f"missing column {attr.name!r}")
            raw = self.columns[attr.name]
            if attr.is_numeric:
                col = np.array(raw, dtype=np.float64)
                if not np.all(np.isfinite(col)):
                    raise DatasetError(f"non-finite value in numeric column {attr.name!r}")
            else:
                col = np.array([str(v) for v in raw], dtype=object)
            col.setflags(write=False)
            if n is None:
                n = len(col)
            elif len(col) != n:
                raise DatasetError(f"column {attr.name!r} has {len(col)} rows, expected {n}")
            cols[attr.name] = col
        if not n:
            raise DatasetError("dataset has no rows")
        object.__setattr__(self, "columns", cols)

    @classmethod
    def from_rows(cls, schema: Schema, rows: Sequence[Sequence], meta=None) -> "Dataset":
        """Build from row tuples ordered like ``schema.kept()``."""
        kept = schema.kept()
        if any(len(r) != len(kept.attributes) for r in rows):
            raise DatasetError("row length does not match schema")
        cols = {a.name: [r[i] for r in rows] for i, a in enumerate(kept.attributes)}
        return cls(kept, cols, dict(meta or {}))

    @property
    def n(self) -> int:
        return len(next(iter(self.columns.values())))

    def __len__(self) -> int:
        return self.n

    @property
    def class_name(self) -> str:
        return self.schema.class_name

    @property
    def labels(self) -> np.ndarray:
        return self.columns[self.class_name]

    @property
    def feature_names(self) -> list[str]:
        return [a.name for a in self.schema.features]

    @property
    def numeric_features(self) -> list[str]:
        return [a.name for a in self.schema.features if a.is_numeric]

    @property
    def categorical_features(self) -> list[str]:
        return [a.name for a in self.schema.features if not a.is_numeric]

    def column(self, name: str) -> np.ndarray:
        try:
            return self.columns[name]
        except KeyError:
            raise DatasetError(f"unknown attribute {name!r}") from None

    def row(self, i: int) -> dict:
        return {name: _scalar(col[i]) for name, col in self.columns.items()}

    def rows(self) -> list[dict]:
        return [self.row(i) for i in range(self.n)]

    def subset(self, indices: Sequence[int], meta=None) -> "Dataset":
        idx = np.asarray(indices, dtype=np.intp)
        return Dataset(self.schema, {k: v[idx] for k, v in self.columns.items()}, dict(meta or {}))

    def replace(self, columns: Mapping[str, np.ndarray]) -> "Dataset":
        """Return a copy with some columns swapped out."""
        cols = dict(self.columns)
        for name, values in columns.items():
            if name not in cols:
                raise DatasetError(f"unknown attribute {name!r}")
            cols[name] = values
        return Dataset(self.schema, cols, dict(self.meta))

    def class_counts(self) -> dict[str, int]:
        values, counts = np.unique(self.labels.astype(str), return_counts=True)
        return {str(v): int(c) for v, c in zip(values, counts)}

    def to_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv_text())

    def to_csv_text(self) -> str:
        lines = [",".join(self.schema.names)]
        for i in range(self.n):
            lines.append(",".join(format_cell(self.columns[name][i]) for name in self.schema.names))
        return "\n".join(lines) + "\n"

    def equals(self, other: "Dataset") -> bool:
        if self.schema != other.schema or self.n != other.n:
            return False
        return all(np.array_equal(self.columns[k], other.columns[k]) for k in self.schema.names)


def _scalar(v):
    return float(v) if isinstance(v, np.floating) else v


def format_cell(v) -> str:
    # 12 significant digits: 70 - 4.26 prints as 65.74, not 65.74000000000001
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


def load_csv(path: str | Path, schema: Schema) -> Dataset:
    """Load a comma-separated file whose header lists ``schema``'s attribute names.

    Ignored columns are dropped. Missing values (empty, ``?``, ``NA``) are
    rejected, as are numeric cells that do not parse.
    """
    path = Path(path)
    cols = _read_cells(path, schema.names, schema.kept())
    return Dataset(schema.kept(), cols, {"source": str(path)})


def _read_cells(path: Path, header_expected: list[str], keep: Schema) -> dict[str, list]:
    if not path.is_file():
        raise DatasetError(f"missing file: {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DatasetError(f"{path}: empty file (no header)")
        header = [h.strip() for h in header]
        if header != header_expected:
            raise DatasetError(f"{path}: header mismatch: expected {header_expected}, got {header}")
        wanted = [(a, header.index(a.name)) for a in keep.attributes if a.name in header]
        cols: dict[str, list] = {a.name: [] for a, _ in wanted}
        for lineno, raw in enumerate(reader, start=2):
            if not raw or all(not c.strip() for c in raw):
                continue
            if len(raw) != len(header):
                raise DatasetError(f"{path}:{lineno}: expected {len(header)} cells, got {len(raw)}")
            for attr, j in wanted:
                cell = raw[j].strip()
                if cell in MISSING_MARKERS:
                    raise DatasetError(f"{path}:{lineno}: missing value in column {attr.name!r}")
                if attr.is_numeric:
                    try:
                        value = float(cell)
                    except ValueError:
                        raise DatasetError(
                            f"{path}:{lineno}: unparseable numeric cell {cell!r} in column {attr.name!r}"
                        ) from None
                    if not math.isfinite(value):
                        raise DatasetError(f"{path}:{lineno}: non-finite value in column {attr.name!r}")
                    cols[attr.name].append(value)
                else:
                    cols[attr.name].append(cell)
    if not any(cols.values()) or not next(iter(cols.values())):
        raise DatasetError(f"{path}: empty body")
    return cols


def compute_domains(
    ds: Dataset, overrides: Mapping[str, Sequence[float]] | None = None
) -> dict[str, DomainRange]:
    """Observed ``[min, max]`` of every numeric attribute, with optional overrides.

    ``overrides`` maps attribute name to ``(low, high)`` and replaces the
    observed range, e.g. ``{"age": (1, 100)}``.
    """
    overrides = dict(overrides or {})
    unknown = set(overrides) - set(ds.numeric_features)
    if unknown:
        raise DatasetError(f"domain override for non-numeric or unknown attributes: {sorted(unknown)}")
    domains = {}
    for name in ds.numeric_features:
        col = ds.columns[name]
        integer = bool(np.all(col == np.round(col)))
        if name in overrides:
            low, high = (float(x) for x in overrides[name])
            if high < low:
                raise DatasetError(f"domain override for {name!r} has high < low")
            integer = integer and low == round(low) and high == round(high)
        else:
            low, high = float(col.min()), float(col.max())
        domains[name] = DomainRange(low, high - low, integer, high)
    return domains


def fit_normal(ds: Dataset, attr: str, ddof: int = 0) -> NormalFit:
    """Mean and standard deviation of a numeric column.

    ``ddof=0`` (default) gives the population standard deviation, ``ddof=1``
    the sample estimate. A single row always yields ``std == 0``.
    """
    if attr not in ds.schema:
        raise DatasetError(f"unknown attribute {attr!r}")
    if not ds.schema[attr].is_numeric:
        raise DatasetError(f"attribute {attr!r} is categorical")
    col = ds.columns[attr]
    if col.size <= ddof:
        return NormalFit(float(col.mean()), 0.0)
    mean = float(col.mean())
    std = float(np.sqrt(np.sum((col - mean) ** 2) / (col.size - ddof)))
    if np.all(col == col[0]):
        std = 0.0
    return NormalFit(mean, std)


def fit_normals(ds: Dataset, ddof: int = 0) -> dict[str, NormalFit]:
    return {name: fit_normal(ds, name, ddof) for name in ds.numeric_features}


class SplitIndices(NamedTuple):
    train: np.ndarray
    test: np.ndarray
    stratified: bool


def split_indices(ds: Dataset, test_fraction: float, seed: int) -> SplitIndices:
    """Seeded, class-stratified train/test index partition.

    Per-class test quotas use largest-remainder rounding so the overall test
    size is ``round(n * test_fraction)`` and each class is within one record
    of its proportional share. Falls back to an unstratified split when some
    class has a single record.
    """
    if not 0 < test_fraction < 1:
        raise DatasetError(f"test_fraction must be in (0, 1), got {test_fraction}")
    n = ds.n
    if n < 2:
        raise DatasetError("need at least 2 records to split")
    n_test = int(round(n * test_fraction))
    n_test = min(max(n_test, 1), n - 1)
    rng = np.random.default_rng(seed)
    labels = ds.labels
    classes = sorted(set(labels))
    members = {c: np.flatnonzero(labels == c) for c in classes}

    if any(len(m) < 2 for m in members.values()):
        logger.warning("class with a single record; falling back to unstratified split")
        perm = rng.permutation(n)
        test = np.sort(perm[:n_test])
        stratified = False
    else:
        ideal = {c: len(members[c]) * n_test / n for c in classes}
        quota = {c: int(math.floor(ideal[c])) for c in classes}
        leftover = n_test - sum(quota.values())
        by_remainder = sorted(classes, key=lambda c: (-(ideal[c] - quota[c]), classes.index(c)))
        for c in by_remainder[:leftover]:
            quota[c] += 1
        picked = []
        for c in classes:
            perm = rng.permutation(members[c])
            picked.append(perm[: quota[c]])
        test = np.sort(np.concatenate(picked))
        stratified = True
    mask = np.zeros(n, dtype=bool)
    mask[test] = True
    return SplitIndices(np.flatnonzero(~mask), test, stratified)


def split_train_test(ds: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Split into ``(train, test)``; both carry ``meta["stratified"]``."""
    idx = split_indices(ds, test_fraction, seed)
    meta = {"stratified": idx.stratified, "seed": seed}
    return ds.subset(idx.train, meta), ds.subset(idx.test, meta)


# Embedded fixture and presets for the evaluation datasets.

LIVER_SCHEMA = Schema(
    (
        AttributeDescriptor("LiverSize", Kind.CATEGORICAL),
        AttributeDescriptor("PatientsWeight", Kind.NUMERIC),
        AttributeDescriptor("EatsPizza", Kind.CATEGORICAL),
        AttributeDescriptor("DiagnosticClass", Kind.CATEGORICAL, Role.CLASS),
    )
)

_LIVER_ROWS = (
    ("NORMAL", 70, "YES", "CLASS1"),
    ("NORMAL", 90, "YES", "CLASS2"),
    ("NORMAL", 85, "NO", "CLASS2"),
    ("NORMAL", 95, "NO", "CLASS2"),
    ("NORMAL", 70, "NO", "CLASS1"),
    ("ENLARGED", 90, "YES", "CLASS1"),
    ("ENLARGED", 78, "NO", "CLASS1"),
    ("ENLARGED", 65, "YES", "CLASS1"),
    ("ENLARGED", 75, "NO", "CLASS1"),
    ("SHRINKED", 80, "YES", "CLASS2"),
    ("SHRINKED", 70, "YES", "CLASS2"),
    ("SHRINKED", 80, "NO", "CLASS1"),
    ("SHRINKED", 80, "NO", "CLASS1"),
    ("SHRINKED", 96, "NO", "CLASS1"),
)

# Plausible body-weight range, wider than the 14 observed values, so that a
# small downward shift of the lightest patient stays in-domain.
LIVER_DOMAIN_OVERRIDES = {"PatientsWeight": (1.0, 200.0)}


def embedded_liver_sample() -> Dataset:
    """The 14-record Liver sample (9 CLASS1, 5 CLASS2)."""
    return Dataset.from_rows(LIVER_SCHEMA, _LIVER_ROWS, {"source": "embedded:liver"})


CAR_SCHEMA = Schema.from_spec(
    [{"name": n, "kind": "categorical"} for n in ("buying", "maint", "doors", "persons", "lug_boot", "safety")]
    + [{"name": "class", "kind": "categorical", "role": "class"}]
)

BHP_COLUMNS = ("CRIM", "ZN", "INDUS", "CHAS", "NOX", "RM", "AGE", "DIS", "RAD", "TAX", "PTRATIO", "B", "LSTAT", "MEDV")
BHP_IGNORED = ("CHAS", "B")
BHP_CLASS = "PriceClass"

CENSUS_SCHEMA = Schema.from_spec(
    [
        {"name": "age", "kind": "numeric"},
        {"name": "workclass", "kind": "categorical"},
        {"name": "fnlwgt", "kind": "numeric"},
        {"name": "education", "kind": "categorical"},
        {"name": "education-num", "kind": "numeric"},
        {"name": "marital-status", "kind": "categorical"},
        {"name": "occupation", "kind": "categorical"},
        {"name": "relationship", "kind": "categorical"},
        {"name": "race", "kind": "categorical"},
        {"name": "sex", "kind": "categorical"},
        {"name": "capital-gain", "kind": "numeric"},
        {"name": "capital-loss", "kind": "numeric"},
        {"name": "hours-per-week", "kind": "numeric"},
        {"name": "native-country", "kind": "categorical"},
        {"name": "income", "kind": "categorical", "role": "class"},
    ]
)


def load_bhp(path: str | Path, quantile: float = 0.8) -> Dataset:
    """Boston housing with a two-valued price class.

    Records whose median value (``MEDV``) exceeds the ``quantile`` of the full
    file are labelled ``top20``, the rest ``bottom80``. ``CHAS``, ``B`` and the
    raw ``MEDV`` are not features.
    """
    raw_schema = Schema.from_spec(
        [{"name": c, "kind": "numeric"} for c in BHP_COLUMNS]
        + [{"name": "_unused", "kind": "categorical", "role": "class"}]
    )
    raw = _read_cells(Path(path), raw_schema.names[:-1], raw_schema)
    medv = np.asarray(raw["MEDV"])
    cut = float(np.quantile(medv, quantile))
    cols = {c: raw[c] for c in BHP_COLUMNS if c not in BHP_IGNORED and c != "MEDV"}
    cols[BHP_CLASS] = np.where(medv > cut, "top20", "bottom80")
    schema = Schema.from_spec(
        [{"name": c, "kind": "numeric"} for c in cols if c != BHP_CLASS]
        + [{"name": BHP_CLASS, "kind": "categorical", "role": "class"}]
    )
    return Dataset(schema, cols, {"source": str(path), "medv_cut": cut})
