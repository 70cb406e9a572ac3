"""Entropy-based decision tree induction.

Categorical attributes split multiway (one branch per value present at the
node) and are used at most once per path. Numeric attributes split in two at
the midpoint between consecutive distinct sorted values and may be reused
further down with a fresh threshold. No pruning is performed.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Mapping, Sequence, Union

import numpy as np

from .dataset import Dataset, DatasetError, Schema

# gains in (-NEG_TOL, 0) are float noise and clamp to 0
NEG_TOL = 1e-9
# a split must beat this score to be taken
MIN_SCORE = 1e-12


class Criterion(str, Enum):
    GAIN = "gain"
    GAIN_RATIO = "gain_ratio"


@dataclass(frozen=True)
class BuildParams:
    min_records_to_split: int = 2
    criterion: Criterion = Criterion.GAIN
    max_depth: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "criterion", Criterion(self.criterion))
        if self.min_records_to_split < 2:
            raise ValueError("min_records_to_split must be >= 2")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")


@dataclass(frozen=True)
class ClassDistribution:
    counts: Mapping[str, int]

    @classmethod
    def from_labels(cls, labels: Iterable) -> "ClassDistribution":
        return cls(dict(sorted(Counter(str(x) for x in labels).items())))

    @property
    def total(self) -> int:
        return int(sum(self.counts.values()))

    def majority(self) -> str:
        """Most frequent label; ties go to the lexicographically smallest."""
        if not self.counts:
            raise ValueError("empty distribution has no majority")
        return min(self.counts, key=lambda c: (-self.counts[c], c))

    def is_pure(self) -> bool:
        return sum(1 for v in self.counts.values() if v > 0) <= 1


DistLike = Union[ClassDistribution, Mapping[str, int], Sequence[int], np.ndarray]


def _as_counts(dist: DistLike) -> np.ndarray:
    if isinstance(dist, ClassDistribution):
        dist = dist.counts
    if isinstance(dist, Mapping):
        dist = list(dist.values())
    counts = np.asarray(dist, dtype=np.float64)
    if np.any(counts < 0):
        raise ValueError("class counts must be non-negative")
    return counts


def _h(counts: np.ndarray) -> float:
    total = counts.sum()
    p = counts[counts > 0] / total
    return float(-np.sum(p * np.log2(p))) if p.size else 0.0


def entropy(dist: DistLike) -> float:
    """Class entropy in bits, with ``0 log 0 = 0``."""
    counts = _as_counts(dist)
    if counts.sum() <= 0:
        raise ValueError("entropy of an empty distribution")
    return max(_h(counts), 0.0)


def partition_entropy(partitions: Sequence[DistLike]) -> float:
    """Size-weighted mean entropy of the partitions of a split."""
    parts = [_as_counts(p) for p in partitions]
    sizes = np.array([p.sum() for p in parts])
    total = sizes.sum()
    if total <= 0:
        raise ValueError("all partitions are empty")
    return float(sum(s / total * _h(p) for s, p in zip(sizes, parts) if s > 0))


def gain(parent: DistLike, partitions: Sequence[DistLike]) -> float:
    """Information gain of splitting ``parent`` into ``partitions``."""
    parent_counts = _as_counts(parent)
    total = sum(_as_counts(p).sum() for p in partitions)
    if total != parent_counts.sum():
        raise ValueError(f"partition totals ({total:g}) do not match parent ({parent_counts.sum():g})")
    g = entropy(parent_counts) - partition_entropy(partitions)
    return 0.0 if -NEG_TOL < g < 0 else g


def split_info(partitions: Sequence[DistLike]) -> float:
    """Entropy of the partition sizes themselves; 0 for a single partition."""
    sizes = np.array([_as_counts(p).sum() for p in partitions])
    if sizes.sum() <= 0:
        raise ValueError("all partitions are empty")
    return _h(sizes)


def gain_ratio(parent: DistLike, partitions: Sequence[DistLike]) -> float:
    """Gain divided by split info; 0 when the split info is 0."""
    si = split_info(partitions)
    if si <= 0:
        return 0.0
    return gain(parent, partitions) / si


# Vectorised two-way scoring used by threshold search.

def _rows_entropy(counts: np.ndarray) -> np.ndarray:
    totals = counts.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(totals > 0, counts / totals, 0.0)
        terms = np.where(p > 0, p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return -terms.sum(axis=1)


def _threshold_scores(values: np.ndarray, y: np.ndarray, n_classes: int, criterion: Criterion):
    """Scores of every midpoint candidate, as ``(thresholds, scores)`` in ascending order."""
    order = np.argsort(values, kind="stable")
    v = values[order]
    onehot = np.zeros((v.size, n_classes))
    onehot[np.arange(v.size), y[order]] = 1.0
    cum = np.cumsum(onehot, axis=0)
    cut = np.flatnonzero(v[:-1] < v[1:])
    if cut.size == 0:
        return np.empty(0), np.empty(0)
    n = float(v.size)
    left = cum[cut]
    right = cum[-1] - left
    nl = left.sum(axis=1)
    nr = n - nl
    parent_h = _h(cum[-1])
    g = parent_h - (nl / n * _rows_entropy(left) + nr / n * _rows_entropy(right))
    g = np.where((g < 0) & (g > -NEG_TOL), 0.0, g)
    if criterion is Criterion.GAIN_RATIO:
        si = _rows_entropy(np.stack([nl, nr], axis=1))
        g = np.where(si > 0, g / np.where(si > 0, si, 1.0), 0.0)
    thresholds = (v[cut] + v[cut + 1]) / 2.0
    return thresholds, g


def best_numeric_split(ds: Dataset, attr: str, criterion: Criterion | str = Criterion.GAIN):
    """Best midpoint threshold of a numeric attribute over the whole dataset.

    Returns ``(threshold, score)`` or ``None`` when the column is constant.
    Ties go to the lowest threshold.
    """
    if not ds.schema[attr].is_numeric:
        raise DatasetError(f"attribute {attr!r} is categorical")
    classes, y = np.unique(ds.labels.astype(str), return_inverse=True)
    thresholds, scores = _threshold_scores(ds.column(attr), y, len(classes), Criterion(criterion))
    if thresholds.size == 0:
        return None
    k = int(np.argmax(scores))
    return float(thresholds[k]), float(scores[k])


# Tree structure.

@dataclass(frozen=True)
class NumericTest:
    attribute: str
    threshold: float

    def outcomes(self) -> tuple[str, str]:
        return ("<=", ">")


@dataclass(frozen=True)
class CategoricalTest:
    attribute: str
    branches: tuple[str, ...]

    def outcomes(self) -> tuple[str, ...]:
        return self.branches


SplitTest = Union[NumericTest, CategoricalTest]


@dataclass(frozen=True, eq=False)
class Leaf:
    id: int
    distribution: ClassDistribution
    majority: str


@dataclass(frozen=True, eq=False)
class Internal:
    test: SplitTest
    children: tuple["Node", ...]
    distribution: ClassDistribution

    @property
    def heaviest_child(self) -> int:
        """Index of the child that received the most build records (first on ties)."""
        sizes = [_node_total(c) for c in self.children]
        return int(np.argmax(sizes))


Node = Union[Leaf, Internal]


def _node_total(node: Node) -> int:
    return node.distribution.total


@dataclass(frozen=True)
class LeafInfo:
    leaf: Leaf
    steps: tuple[tuple[str, str], ...]
    parent: Internal | None


@dataclass(eq=False)
class DecisionTree:
    root: Node
    schema: Schema
    params: BuildParams = field(default_factory=BuildParams)

    def __post_init__(self):
        self._leaves: dict[int, LeafInfo] = {}
        self._collect(self.root, (), None)

    def _collect(self, node: Node, steps, parent):
        if isinstance(node, Leaf):
            if node.id in self._leaves:
                raise ValueError(f"duplicate leaf id {node.id}")
            self._leaves[node.id] = LeafInfo(node, steps, parent)
            return
        for outcome, child in zip(node.test.outcomes(), node.children):
            self._collect(child, steps + ((node.test.attribute, outcome),), node)

    @property
    def class_name(self) -> str:
        return self.schema.class_name

    @property
    def leaves(self) -> dict[int, LeafInfo]:
        return self._leaves

    def nodes(self) -> Iterator[Node]:
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            if isinstance(node, Internal):
                stack.extend(reversed(node.children))

    @property
    def node_count(self) -> int:
        return sum(1 for _ in self.nodes())

    @property
    def depth(self) -> int:
        return max((len(info.steps) for info in self._leaves.values()), default=0)

    def tested_attributes(self) -> set[str]:
        return {n.test.attribute for n in self.nodes() if isinstance(n, Internal)}

    def thresholds(self, attr: str) -> list[float]:
        """Thresholds on ``attr`` in preorder."""
        return [
            n.test.threshold
            for n in self.nodes()
            if isinstance(n, Internal) and isinstance(n.test, NumericTest) and n.test.attribute == attr
        ]

    def descend(self, record: Mapping, diagnostics: list | None = None) -> Leaf:
        """Route one record to its leaf.

        Numeric values ``<= threshold`` take the first branch. A categorical
        value with no branch goes to the heaviest child and, if
        ``diagnostics`` is given, is noted there.
        """
        node = self.root
        while isinstance(node, Internal):
            node = node.children[self._child_index(node, record[node.test.attribute], diagnostics)]
        return node

    @staticmethod
    def _child_index(node: Internal, value, diagnostics) -> int:
        test = node.test
        if isinstance(test, NumericTest):
            return 0 if float(value) <= test.threshold else 1
        try:
            return test.branches.index(str(value))
        except ValueError:
            if diagnostics is not None:
                diagnostics.append((test.attribute, str(value)))
            return node.heaviest_child

    def classify(self, record: Mapping) -> str:
        return self.descend(record).majority

    def assign_leaves(self, ds: Dataset, diagnostics: list | None = None) -> np.ndarray:
        """Leaf id of every record of ``ds`` (vectorised routing)."""
        out = np.full(ds.n, -1, dtype=np.int64)
        stack = [(self.root, np.arange(ds.n))]
        while stack:
            node, idx = stack.pop()
            if idx.size == 0:
                continue
            if isinstance(node, Leaf):
                out[idx] = node.id
                continue
            test = node.test
            col = ds.column(test.attribute)[idx]
            if isinstance(test, NumericTest):
                go_left = col <= test.threshold
                stack.append((node.children[0], idx[go_left]))
                stack.append((node.children[1], idx[~go_left]))
            else:
                matched = np.zeros(idx.size, dtype=bool)
                for k, label in enumerate(test.branches):
                    hit = col == label
                    matched |= hit
                    stack.append((node.children[k], idx[hit]))
                if not matched.all():
                    if diagnostics is not None:
                        diagnostics.extend((test.attribute, str(v)) for v in col[~matched])
                    stack.append((node.children[node.heaviest_child], idx[~matched]))
        return out

    def predict(self, ds: Dataset) -> np.ndarray:
        ids = self.assign_leaves(ds)
        majority = {lid: info.leaf.majority for lid, info in self._leaves.items()}
        return np.array([majority[i] for i in ids], dtype=object)

    # serialisation

    def to_dict(self) -> dict:
        return {
            "class": self.class_name,
            "schema": [{"name": a.name, "kind": a.kind.value, "role": a.role.value} for a in self.schema.attributes],
            "params": {
                "min_records_to_split": self.params.min_records_to_split,
                "criterion": self.params.criterion.value,
                "max_depth": self.params.max_depth,
            },
            "root": _node_to_dict(self.root),
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, doc: Mapping) -> "DecisionTree":
        return cls(_node_from_dict(doc["root"]), Schema.from_spec(doc["schema"]), BuildParams(**doc["params"]))

    def to_text(self) -> str:
        """Indented rule listing, one line per branch."""
        if isinstance(self.root, Leaf):
            return _leaf_text(self.root) + "\n"
        lines: list[str] = []
        _text_lines(self.root, 0, lines)
        return "\n".join(lines) + "\n"

    def __str__(self) -> str:
        return self.to_text()


def _node_to_dict(node: Node) -> dict:
    if isinstance(node, Leaf):
        return {"kind": "leaf", "id": node.id, "majority": node.majority, "distribution": dict(node.distribution.counts)}
    test = node.test
    if isinstance(test, NumericTest):
        t = {"type": "numeric", "attribute": test.attribute, "threshold": test.threshold}
    else:
        t = {"type": "categorical", "attribute": test.attribute, "branches": list(test.branches)}
    return {
        "kind": "internal",
        "test": t,
        "distribution": dict(node.distribution.counts),
        "children": [_node_to_dict(c) for c in node.children],
    }


def _node_from_dict(doc: Mapping) -> Node:
    dist = ClassDistribution(dict(doc["distribution"]))
    if doc["kind"] == "leaf":
        return Leaf(int(doc["id"]), dist, doc["majority"])
    t = doc["test"]
    if t["type"] == "numeric":
        test: SplitTest = NumericTest(t["attribute"], float(t["threshold"]))
    else:
        test = CategoricalTest(t["attribute"], tuple(t["branches"]))
    return Internal(test, tuple(_node_from_dict(c) for c in doc["children"]), dist)


def _leaf_text(leaf: Leaf) -> str:
    total = leaf.distribution.total
    errors = total - leaf.distribution.counts.get(leaf.majority, 0)
    counts = f"({total})" if not errors else f"({total}/{errors})"
    return f"{leaf.majority} {counts} [leaf {leaf.id}]"


def _text_lines(node: Internal, depth: int, lines: list[str]) -> None:
    prefix = "|   " * depth
    test = node.test
    for outcome, child in zip(test.outcomes(), node.children):
        if isinstance(test, NumericTest):
            cond = f"{test.attribute} {outcome} {test.threshold:.6g}"
        else:
            cond = f"{test.attribute} = {outcome}"
        if isinstance(child, Leaf):
            lines.append(f"{prefix}{cond}: {_leaf_text(child)}")
        else:
            lines.append(f"{prefix}{cond}:")
            _text_lines(child, depth + 1, lines)


# Induction.

class _Builder:
    def __init__(self, ds: Dataset, params: BuildParams):
        self.params = params
        self.classes, self.y = np.unique(ds.labels.astype(str), return_inverse=True)
        self.n_classes = len(self.classes)
        self.features = ds.schema.features
        self.cols = {}
        self.levels = {}
        for attr in self.features:
            col = ds.column(attr.name)
            if attr.is_numeric:
                self.cols[attr.name] = col
            else:
                levels, codes = np.unique(col.astype(str), return_inverse=True)
                self.levels[attr.name] = levels
                self.cols[attr.name] = codes
        self.next_leaf = 0

    def dist(self, counts: np.ndarray) -> ClassDistribution:
        return ClassDistribution({str(self.classes[k]): int(c) for k, c in enumerate(counts) if c > 0})

    def leaf(self, counts: np.ndarray) -> Leaf:
        dist = self.dist(counts)
        leaf = Leaf(self.next_leaf, dist, dist.majority())
        self.next_leaf += 1
        return leaf

    def build(self, idx: np.ndarray, used: frozenset, depth: int) -> Node:
        counts = np.bincount(self.y[idx], minlength=self.n_classes)
        p = self.params
        if (
            np.count_nonzero(counts) <= 1
            or idx.size < p.min_records_to_split
            or (p.max_depth is not None and depth >= p.max_depth)
        ):
            return self.leaf(counts)

        best = None
        best_score = MIN_SCORE
        for attr in self.features:
            name = attr.name
            if attr.is_numeric:
                thresholds, scores = _threshold_scores(self.cols[name][idx], self.y[idx], self.n_classes, p.criterion)
                if thresholds.size == 0:
                    continue
                k = int(np.argmax(scores))
                score = float(scores[k])
                candidate = ("num", name, float(thresholds[k]))
            else:
                if name in used:
                    continue
                codes = self.cols[name][idx]
                present = np.unique(codes)
                if present.size < 2:
                    continue
                parts = [np.bincount(self.y[idx][codes == c], minlength=self.n_classes) for c in present]
                if p.criterion is Criterion.GAIN:
                    score = gain(counts, parts)
                else:
                    score = gain_ratio(counts, parts)
                candidate = ("cat", name, present)
            if score > best_score:
                best, best_score = candidate, score
        if best is None:
            return self.leaf(counts)

        kind, name, arg = best
        # the internal node's distribution is built before children so leaf ids stay preorder
        dist = self.dist(counts)
        if kind == "num":
            go_left = self.cols[name][idx] <= arg
            children = (
                self.build(idx[go_left], used, depth + 1),
                self.build(idx[~go_left], used, depth + 1),
            )
            return Internal(NumericTest(name, arg), children, dist)
        codes = self.cols[name][idx]
        children = tuple(self.build(idx[codes == c], used | {name}, depth + 1) for c in arg)
        branches = tuple(str(self.levels[name][c]) for c in arg)
        return Internal(CategoricalTest(name, branches), children, dist)


def build(ds: Dataset, params: BuildParams | None = None) -> DecisionTree:
    """Grow a decision tree on ``ds``.

    At each node every usable feature is scored under ``params.criterion``
    and the best strictly-positive candidate wins; ties keep the earliest
    schema column. A node becomes a leaf when it is pure, has fewer than
    ``min_records_to_split`` records, has reached ``max_depth``, or no
    candidate scores above zero.
    """
    params = params or BuildParams()
    if not ds.feature_names:
        raise DatasetError("dataset has no feature attributes")
    builder = _Builder(ds, params)
    root = builder.build(np.arange(ds.n), frozenset(), 0)
    return DecisionTree(root, ds.schema, params)


# Comparison.

class ThresholdMode(str, Enum):
    EXACT = "exact"
    IGNORE = "ignore"


def _tests_match(a: SplitTest, b: SplitTest, mode: ThresholdMode, eps: float) -> bool:
    if type(a) is not type(b) or a.attribute != b.attribute:
        return False
    if isinstance(a, CategoricalTest):
        return a.branches == b.branches
    return mode is ThresholdMode.IGNORE or abs(a.threshold - b.threshold) <= eps


def similarity(
    t1: DecisionTree, t2: DecisionTree, threshold_mode: ThresholdMode | str = ThresholdMode.IGNORE, eps: float = 1e-9
) -> float:
    """Fraction of aligned node pairs that agree, over the larger node count.

    Both trees are walked in lockstep from the root. Internal nodes match
    when they test the same attribute the same way (thresholds within
    ``eps`` in exact mode, not compared in ignore mode), leaves when their
    majority classes agree. Traversal only continues below matching
    internal pairs.
    """
    mode = ThresholdMode(threshold_mode)
    matched = 0
    stack = [(t1.root, t2.root)]
    while stack:
        a, b = stack.pop()
        if isinstance(a, Leaf) and isinstance(b, Leaf):
            matched += a.majority == b.majority
        elif isinstance(a, Internal) and isinstance(b, Internal) and _tests_match(a.test, b.test, mode, eps):
            matched += 1
            stack.extend(zip(a.children, b.children))
    return matched / max(t1.node_count, t2.node_count)
