import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from treenoise.dataset import Dataset, Schema
from treenoise.paths import (
    Scope,
    SiblingRule,
    has_siblings,
    leaf_population,
    path_for_leaf,
    path_sets,
    population_from_values,
    route,
    route_all,
)
from treenoise.tree import BuildParams, ClassDistribution, DecisionTree, Internal, Leaf, NumericTest, build

BHP_FEATURES = ["CRIM", "ZN", "INDUS", "NOX", "RM", "AGE", "DIS", "RAD", "TAX", "PTRATIO", "LSTAT"]


def leaf(i, label="bottom80"):
    return Leaf(i, ClassDistribution({label: 1}), label)


def internal(attr, threshold, left, right):
    labels = {}
    for child in (left, right):
        for c, k in child.distribution.counts.items():
            labels[c] = labels.get(c, 0) + k
    return Internal(NumericTest(attr, threshold), (left, right), ClassDistribution(labels))


@pytest.fixture
def housing_tree():
    """Hand-made housing tree: leaf 1 sits under LSTAT, RM and PTRATIO tests; NOX is tested elsewhere."""
    schema = Schema.from_spec(
        [{"name": n, "kind": "numeric"} for n in BHP_FEATURES] + [{"name": "cls", "kind": "categorical", "role": "class"}]
    )
    root = internal(
        "LSTAT",
        9.7,
        internal("RM", 7.4, internal("PTRATIO", 19.0, leaf(0), leaf(1, "top20")), leaf(2, "top20")),
        internal("NOX", 0.66, leaf(3), leaf(4)),
    )
    return DecisionTree(root, schema, BuildParams())


def test_route_enlarged(liver):
    tree = build(liver)
    path = route(tree, {"LiverSize": "ENLARGED", "PatientsWeight": 90, "EatsPizza": "YES"})
    assert path.steps == (("LiverSize", "ENLARGED"),)
    info = tree.leaves[path.leaf_id]
    assert info.leaf.distribution.counts == {"CLASS1": 4}
    assert path.has_siblings


def test_single_leaf_tree():
    schema = Schema.from_spec([{"name": "x", "kind": "numeric"}, {"name": "y", "kind": "categorical", "role": "class"}])
    tree = build(Dataset.from_rows(schema, [(1, "A"), (2, "A")]))
    path = route(tree, {"x": 5})
    assert path.steps == () and not path.has_siblings
    assert path_sets(path, tree, Scope.TREE_TESTED).lwpa == frozenset()
    assert path_sets(path, tree, Scope.ALL_FEATURES).lwpa == {"x"}


def test_untested_attributes_do_not_change_route(liver):
    tree = build(liver, BuildParams(max_depth=1))
    a = route(tree, {"LiverSize": "NORMAL", "PatientsWeight": 10, "EatsPizza": "YES"})
    b = route(tree, {"LiverSize": "NORMAL", "PatientsWeight": 190, "EatsPizza": "NO"})
    assert a.leaf_id == b.leaf_id


def test_housing_leaf_sets(housing_tree):
    path = path_for_leaf(housing_tree, 1)
    sets = path_sets(path, housing_tree)
    assert sets.lrpa == {"LSTAT", "RM", "PTRATIO"}
    assert sets.lwpa == {"NOX"}
    wide = path_sets(path, housing_tree, Scope.ALL_FEATURES)
    assert wide.lwpa == set(BHP_FEATURES) - {"LSTAT", "RM", "PTRATIO"}


def test_depth_one_tree():
    schema = Schema.from_spec(
        [{"name": "x", "kind": "numeric"}, {"name": "z", "kind": "numeric"}, {"name": "y", "kind": "categorical", "role": "class"}]
    )
    tree = build(Dataset.from_rows(schema, [(1, 0, "A"), (2, 0, "A"), (9, 0, "B")]))
    for lid in tree.leaves:
        sets = path_sets(path_for_leaf(tree, lid), tree)
        assert sets.lrpa == {"x"} and sets.lwpa == frozenset()


def test_sibling_rules(housing_tree):
    # leaf 2's only sibling is an internal node
    assert has_siblings(housing_tree, 2, SiblingRule.LITERAL)
    assert not has_siblings(housing_tree, 2, SiblingRule.LEAF_SIBLINGS_ONLY)
    assert has_siblings(housing_tree, 0, SiblingRule.LEAF_SIBLINGS_ONLY)


def test_route_all_matches_route(liver):
    tree = build(liver)
    paths = route_all(tree, liver)
    assert [p.leaf_id for p in paths] == [route(tree, liver.row(i)).leaf_id for i in range(liver.n)]


def test_population_counts():
    pop = population_from_values([0, 1, 2, 3, 4], ["A", "A", "A", "S", "S"])
    assert (pop.majority, pop.m, pop.t, pop.minorities) == ("A", 3, 1, {"S": 2})
    assert pop.heterogeneous


def test_population_tie_breaks_lexicographically():
    assert population_from_values([0, 1], ["B", "A"]).majority == "A"


def test_empty_population():
    pop = population_from_values([], [])
    assert pop.m == 0 and pop.t == 0 and pop.majority is None


def test_liver_populations(liver):
    tree = build(liver)
    pops = leaf_population(tree, liver)
    assert sum(len(p.indices) for p in pops.values()) == liver.n
    # the tree fits its training data, so every leaf is homogeneous
    assert not any(p.heterogeneous for p in pops.values())


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 9), st.sampled_from("uvw"), st.sampled_from("ABC")), min_size=1, max_size=40))
def test_path_invariants(rows):
    schema = Schema.from_spec(
        [
            {"name": "x", "kind": "numeric"},
            {"name": "c", "kind": "categorical"},
            {"name": "y", "kind": "categorical", "role": "class"},
        ]
    )
    ds = Dataset.from_rows(schema, rows)
    tree = build(ds)
    tested = tree.tested_attributes()
    pops = leaf_population(tree, ds)
    assert sorted(np.concatenate([p.indices for p in pops.values()]).tolist()) == list(range(ds.n))
    for p in pops.values():
        assert p.m + sum(p.minorities.values()) == len(p.indices)
        assert p.t == len(p.minorities)
    for path in route_all(tree, ds):
        assert path.attributes <= tested
        assert path.has_siblings == (len(tree.leaves) > 1)
        for scope in Scope:
            sets = path_sets(path, tree, scope)
            assert not sets.lrpa & sets.lwpa
            assert sets.lrpa | sets.lwpa <= {"x", "c"}
