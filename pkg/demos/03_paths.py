"""
Reaching paths and wrong paths
==============================

For each leaf, list the attributes tested on the way down (reaching set)
and the ones that are not (wrong-path set), then summarise the class mix
each leaf holds. These sets decide which cells get small or large noise.
"""

from treenoise import embedded_liver_sample
from treenoise.paths import Scope, SiblingRule, has_siblings, leaf_population, path_for_leaf, path_sets
from treenoise.tree import BuildParams, build

ds = embedded_liver_sample()
tree = build(ds)

for lid in sorted(tree.leaves):
    path = path_for_leaf(tree, lid)
    narrow = path_sets(path, tree, Scope.TREE_TESTED)
    wide = path_sets(path, tree, Scope.ALL_FEATURES)
    steps = " -> ".join(f"{a}={o}" for a, o in path.steps)
    print(f"leaf {lid}: {steps}")
    print(f"    reaching {sorted(narrow.lrpa)}  wrong (tree) {sorted(narrow.lwpa)}  wrong (all) {sorted(wide.lwpa)}")

# A depth-1 tree leaves mixed populations behind.
stump = build(ds, BuildParams(max_depth=1))
for lid, pop in leaf_population(stump, ds).items():
    literal = has_siblings(stump, lid, SiblingRule.LITERAL)
    leafy = has_siblings(stump, lid, SiblingRule.LEAF_SIBLINGS_ONLY)
    print(f"stump leaf {lid}: majority {pop.majority} m={pop.m} minorities {pop.minorities} t={pop.t}"
          f" siblings literal={literal} leaf-only={leafy}")
