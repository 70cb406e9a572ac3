"""Leaf-reaching paths and the per-record attribute partition derived from them.

For a record routed to leaf ``L``, the attributes tested on the root-to-``L``
path form its reaching set (LRPA). Its wrong-path set (LWPA) holds the other
attributes: those tested elsewhere in the tree, or every other feature when
``scope`` is :attr:`Scope.ALL_FEATURES`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping

import numpy as np

from .dataset import Dataset
from .tree import DecisionTree, Leaf


class Scope(str, Enum):
    TREE_TESTED = "tree"
    ALL_FEATURES = "all"


class SiblingRule(str, Enum):
    # any other child of the parent counts as a sibling
    LITERAL = "literal"
    # only other children that are themselves leaves count
    LEAF_SIBLINGS_ONLY = "leaf-siblings-only"


@dataclass(frozen=True)
class RoutedPath:
    leaf_id: int
    steps: tuple[tuple[str, str], ...]
    has_siblings: bool

    @property
    def attributes(self) -> frozenset[str]:
        return frozenset(a for a, _ in self.steps)


@dataclass(frozen=True)
class PathAttributeSets:
    lrpa: frozenset[str]
    lwpa: frozenset[str]


def has_siblings(tree: DecisionTree, leaf_id: int, rule: SiblingRule) -> bool:
    info = tree.leaves[leaf_id]
    parent = info.parent
    if parent is None:
        return False
    others = [c for c in parent.children if c is not info.leaf]
    if SiblingRule(rule) is SiblingRule.LITERAL:
        return bool(others)
    return any(isinstance(c, Leaf) for c in others)


def path_for_leaf(tree: DecisionTree, leaf_id: int, rule: SiblingRule = SiblingRule.LITERAL) -> RoutedPath:
    info = tree.leaves[leaf_id]
    return RoutedPath(leaf_id, info.steps, has_siblings(tree, leaf_id, rule))


def route(tree: DecisionTree, record: Mapping, rule: SiblingRule = SiblingRule.LITERAL) -> RoutedPath:
    """Root-to-leaf path of one record under the tree's routing rules."""
    return path_for_leaf(tree, tree.descend(record).id, rule)


def route_all(tree: DecisionTree, ds: Dataset, rule: SiblingRule = SiblingRule.LITERAL) -> list[RoutedPath]:
    """Paths for every record of ``ds``, in row order."""
    cache = {lid: path_for_leaf(tree, lid, rule) for lid in tree.leaves}
    return [cache[int(lid)] for lid in tree.assign_leaves(ds)]


def path_sets(path: RoutedPath, tree: DecisionTree, scope: Scope | str = Scope.TREE_TESTED) -> PathAttributeSets:
    lrpa = path.attributes
    if Scope(scope) is Scope.TREE_TESTED:
        universe = tree.tested_attributes()
    else:
        universe = {a.name for a in tree.schema.features}
    return PathAttributeSets(lrpa, frozenset(universe - lrpa))


@dataclass
class LeafPopulation:
    """Records routed to one leaf, with the majority/minority counts CAPT needs.

    ``m`` is the majority count, ``minorities`` maps each other label present
    to its count ``n_i`` and ``t`` is the number of minority labels.
    """

    indices: np.ndarray
    counts: dict[str, int] = field(default_factory=dict)
    majority: str | None = None

    @property
    def m(self) -> int:
        return self.counts.get(self.majority, 0) if self.majority is not None else 0

    @property
    def minorities(self) -> dict[str, int]:
        return {c: k for c, k in self.counts.items() if c != self.majority}

    @property
    def t(self) -> int:
        return len(self.minorities)

    @property
    def heterogeneous(self) -> bool:
        return self.t > 0


def population_from_values(indices: np.ndarray, values) -> LeafPopulation:
    """Population of one leaf given the target column values of its records."""
    indices = np.asarray(indices, dtype=np.intp)
    if indices.size == 0:
        return LeafPopulation(indices)
    labels, counts = np.unique(np.asarray(values, dtype=str), return_counts=True)
    table = {str(lab): int(c) for lab, c in zip(labels, counts)}
    majority = min(table, key=lambda c: (-table[c], c))
    return LeafPopulation(indices, table, majority)


def leaf_population(tree: DecisionTree, ds: Dataset, column: str | None = None) -> dict[int, LeafPopulation]:
    """Route every record and summarise each leaf's ``column`` (default: the class)."""
    column = column or ds.class_name
    values = ds.column(column)
    ids = tree.assign_leaves(ds)
    out = {}
    for lid in tree.leaves:
        idx = np.flatnonzero(ids == lid)
        out[lid] = population_from_values(idx, values[idx])
    return out
