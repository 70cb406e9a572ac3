"""
Accuracy before and after perturbation
======================================

Split a dataset 70/30, perturb the training part only, grow a tree on each
version and score both on the untouched records. Uses the Boston housing
table bundled with the tests unless a path is given.
"""

import sys
from pathlib import Path

from treenoise.dataset import load_bhp
from treenoise.evaluation import compare_runs
from treenoise.perturb import PerturbConfig

path = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent.parent / "tests" / "data" / "bhp.csv"
ds = load_bhp(path)
print(f"{ds.n} records, {len(ds.feature_names)} features, classes {ds.class_counts()}")

report = compare_runs(ds, None, PerturbConfig(seed=42), test_fraction=0.3, seed=42)
print(report.to_table())
print(f"test accuracy gap: {report.test_gap:.4f}")

# The gap moves with the perturbation seed.
for seed in range(5):
    r = compare_runs(ds, None, PerturbConfig(seed=seed), 0.3, 42)
    print(f"seed {seed}: gap {r.test_gap:.4f}  similarity {r.tree_similarity:.3f}")
