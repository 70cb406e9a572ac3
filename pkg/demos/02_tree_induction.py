"""
Growing a tree
==============

Induce the Liver tree, print it, serialise it and route a few records.
"""

import json

from treenoise import embedded_liver_sample
from treenoise.tree import BuildParams, DecisionTree, build

ds = embedded_liver_sample()
tree = build(ds)
print(tree.to_text())
print(f"{tree.node_count} nodes, {len(tree.leaves)} leaves, depth {tree.depth}")

# Thresholds are inclusive on the left branch.
for weight in (77.5, 78.0):
    record = {"LiverSize": "NORMAL", "PatientsWeight": weight, "EatsPizza": "NO"}
    print(f"NORMAL, weight {weight}: {tree.classify(record)}")

# A value the tree never saw follows the heaviest branch; the detour is reported.
notes = []
leaf = tree.descend({"LiverSize": "HUGE", "PatientsWeight": 70, "EatsPizza": "YES"}, notes)
print("unseen category ->", leaf.majority, notes)

# The JSON form round-trips.
again = DecisionTree.from_dict(json.loads(tree.to_json()))
assert again.to_json() == tree.to_json()

# Gain ratio and a depth cap give different trees on the same data.
print(build(ds, BuildParams(criterion="gain_ratio")).to_text())
print(build(ds, BuildParams(max_depth=1)).to_text())
